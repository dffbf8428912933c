#include "acd/systems.hpp"

#include "acd/rng.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace acd {

namespace {
constexpr double kPi = std::numbers::pi;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p outside (0,1)");
    // Acklam coefficients
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    } else if (p <= 1 - plow) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    } else {
        const double q = std::sqrt(-2 * std::log(1 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    // one Halley refinement against the exact CDF
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2 * kPi) * std::exp(x * x / 2);
    x = x - u / (1 + x * u / 2);
    return x;
}

std::string SystemSpec::name() const {
    return kind == SystemKind::AnharmonicOscillator ? "oscillator" : "fput";
}

bool PhaseState::finite() const {
    for (double v : z)
        if (!std::isfinite(v)) return false;
    return true;
}

double Ensemble::average(const Evaluator& f) const {
    double sum = 0.0;
    for (int m = 0; m < size(); ++m) sum += weights[static_cast<std::size_t>(m)] * f(member(m));
    return sum;
}

PolynomialFamily build_hamiltonian(const SystemSpec& spec) {
    const int n = spec.sites;
    PolynomialFamily fam;
    if (spec.kind == SystemKind::AnharmonicOscillator) {
        auto x = PhasePolynomial::variable(1, 0);
        auto p = PhasePolynomial::variable(1, 1);
        fam.base = 0.5 * (p * p) + 0.5 * (x * x);
        fam.linear_in_beta = 0.25 * (x * x) * (x * x);
        return fam;
    }
    fam.base = PhasePolynomial::zero(n);
    fam.linear_in_beta = PhasePolynomial::zero(n);
    for (int i = 0; i < n; ++i) {
        auto p = PhasePolynomial::variable(n, n + i);
        fam.base = fam.base + 0.5 * (p * p);
    }
    // bonds n = 0..N with fixed walls q_0 = q_{N+1} = 0
    for (int b = 0; b <= n; ++b) {
        PhasePolynomial dq = PhasePolynomial::zero(n);
        if (b + 1 <= n) dq = dq + PhasePolynomial::variable(n, b);       // q_{b+1}
        if (b >= 1) dq = dq - PhasePolynomial::variable(n, b - 1);       // -q_b
        if (dq.is_zero()) continue;
        auto dq2 = dq * dq;
        fam.base = fam.base + 0.5 * dq2;
        fam.linear_in_beta = fam.linear_in_beta + 0.25 * (dq2 * dq2);
    }
    return fam;
}

double quartic_part_value(const SystemSpec& spec, std::span<const double> z) {
    const int n = spec.sites;
    if (spec.kind == SystemKind::AnharmonicOscillator) {
        const double x = z[0];
        return 0.25 * x * x * x * x;
    }
    double sum = 0.0;
    for (int b = 0; b <= n; ++b) {
        const double qr = (b + 1 <= n) ? z[static_cast<std::size_t>(b)] : 0.0;
        const double ql = (b >= 1) ? z[static_cast<std::size_t>(b - 1)] : 0.0;
        const double d = qr - ql;
        const double d2 = d * d;
        sum += 0.25 * d2 * d2;
    }
    return sum;
}

double harmonic_part_value(const SystemSpec& spec, std::span<const double> z) {
    const int n = spec.sites;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double p = z[static_cast<std::size_t>(n + i)];
        sum += 0.5 * p * p;
    }
    if (spec.kind == SystemKind::AnharmonicOscillator) {
        sum += 0.5 * z[0] * z[0];
        return sum;
    }
    for (int b = 0; b <= n; ++b) {
        const double qr = (b + 1 <= n) ? z[static_cast<std::size_t>(b)] : 0.0;
        const double ql = (b >= 1) ? z[static_cast<std::size_t>(b - 1)] : 0.0;
        const double d = qr - ql;
        sum += 0.5 * d * d;
    }
    return sum;
}

double hamiltonian_value(const SystemSpec& spec, double beta, std::span<const double> z) {
    return harmonic_part_value(spec, z) + beta * quartic_part_value(spec, z);
}

double mode_frequency(int sites, int k) {
    return 2.0 * std::sin(kPi * k / (2.0 * (sites + 1)));
}

ModeCoordinates mode_transform(const SystemSpec& spec, const PhaseState& state) {
    if (spec.kind != SystemKind::FPUTChain)
        throw std::invalid_argument("mode transform requires an FPUT chain");
    const int n = spec.sites;
    ModeCoordinates mc;
    mc.Q.assign(static_cast<std::size_t>(n), 0.0);
    mc.P.assign(static_cast<std::size_t>(n), 0.0);
    const double norm = std::sqrt(2.0 / (n + 1));
    for (int k = 1; k <= n; ++k) {
        double sq = 0.0, sp = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double s = std::sin(i * k * kPi / (n + 1));
            sq += state.q(i - 1) * s;
            sp += state.p(i - 1) * s;
        }
        mc.Q[static_cast<std::size_t>(k - 1)] = norm * sq;
        mc.P[static_cast<std::size_t>(k - 1)] = norm * sp;
    }
    return mc;
}

PhaseState inverse_mode_transform(const SystemSpec& spec, const ModeCoordinates& modes) {
    if (spec.kind != SystemKind::FPUTChain)
        throw std::invalid_argument("mode transform requires an FPUT chain");
    const int n = spec.sites;
    PhaseState st(n);
    const double norm = std::sqrt(2.0 / (n + 1));
    for (int i = 1; i <= n; ++i) {
        double sq = 0.0, sp = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double s = std::sin(i * k * kPi / (n + 1));
            sq += modes.Q[static_cast<std::size_t>(k - 1)] * s;
            sp += modes.P[static_cast<std::size_t>(k - 1)] * s;
        }
        st.q(i - 1) = norm * sq;
        st.p(i - 1) = norm * sp;
    }
    return st;
}

Ensemble oscillator_shell_ensemble(double E0, int M, std::uint64_t seed) {
    if (E0 <= 0.0) throw std::invalid_argument("shell energy must be positive");
    if (M < 1) throw std::invalid_argument("ensemble size must be >= 1");
    Ensemble e;
    e.sites = 1;
    e.seed = seed;
    e.states.resize(static_cast<std::size_t>(2 * M));
    e.weights.assign(static_cast<std::size_t>(M), 1.0 / M);
    const double r = std::sqrt(2.0 * E0);
    const double u = uniform01_from_seed(derive_seed(seed, /*stream=*/1, 0));
    for (int m = 0; m < M; ++m) {
        const double theta = 2.0 * kPi * (m + u) / M;
        e.states[static_cast<std::size_t>(2 * m)] = r * std::cos(theta);
        e.states[static_cast<std::size_t>(2 * m + 1)] = r * std::sin(theta);
    }
    return e;
}

Ensemble fput_mode_ensemble(const SystemSpec& spec, int k, double E0, int M, std::uint64_t seed) {
    if (spec.kind != SystemKind::FPUTChain)
        throw std::invalid_argument("mode ensemble requires an FPUT chain");
    const int n = spec.sites;
    if (k < 1 || k > n) throw std::invalid_argument("mode index out of range");
    if (E0 <= 0.0) throw std::invalid_argument("mode energy must be positive");
    if (M < 1) throw std::invalid_argument("ensemble size must be >= 1");

    const double omega = mode_frequency(n, k);
    // E0 = (P^2 + omega^2 Q^2)/2 on the mode circle; phase-average by rotating
    // (omega Q, P) uniformly
    const double amp = std::sqrt(2.0 * E0);
    Ensemble e;
    e.sites = n;
    e.seed = seed;
    e.states.resize(static_cast<std::size_t>(M) * 2 * n);
    e.weights.assign(static_cast<std::size_t>(M), 1.0 / M);
    const double u = uniform01_from_seed(derive_seed(seed, /*stream=*/2, 0));
    for (int m = 0; m < M; ++m) {
        const double phase = 2.0 * kPi * (m + u) / M;
        ModeCoordinates mc;
        mc.Q.assign(static_cast<std::size_t>(n), 0.0);
        mc.P.assign(static_cast<std::size_t>(n), 0.0);
        mc.Q[static_cast<std::size_t>(k - 1)] = amp / omega * std::cos(phase);
        mc.P[static_cast<std::size_t>(k - 1)] = -amp * std::sin(phase);
        PhaseState st = inverse_mode_transform(spec, mc);
        auto dst = e.member(m);
        for (std::size_t i = 0; i < st.z.size(); ++i) dst[i] = st.z[i];
    }
    return e;
}

Ensemble initial_ensemble(const SystemSpec& spec, int k, double E0, int M, std::uint64_t seed) {
    if (spec.kind == SystemKind::AnharmonicOscillator)
        return oscillator_shell_ensemble(E0, M, seed);
    return fput_mode_ensemble(spec, k, E0, M, seed);
}

std::pair<int, double> thermodynamic_sequence(double lambda, double A, int sites) {
    const double kf = 2.0 * (sites + 1) / lambda;
    const int k = static_cast<int>(std::lround(kf));
    if (std::abs(kf - k) > 1e-9 || k < 1 || k > sites)
        throw std::invalid_argument("2(N+1)/lambda must be an integer mode index");
    const double s = std::sin(k * kPi / (2.0 * (sites + 1)));
    return {k, A * A * (sites + 1) * s * s};
}

std::vector<EnergyRealization> gaussian_energy_realizations(double mean_E, double d_E, int count) {
    if (mean_E <= 0.0) throw std::invalid_argument("mean energy must be positive");
    if (d_E < 0.0) throw std::invalid_argument("energy width must be non-negative");
    if (count < 1) throw std::invalid_argument("realization count must be >= 1");
    std::vector<EnergyRealization> out(static_cast<std::size_t>(count));
    if (d_E == 0.0) {
        for (auto& r : out) r = {mean_E, 1.0 / count};
        return out;
    }
    // stratified inverse-CDF of the Gaussian truncated to E > 0
    const double F0 = normal_cdf(-mean_E / d_E);
    for (int i = 0; i < count; ++i) {
        const double u = (i + 0.5) / count;
        const double p = F0 + u * (1.0 - F0);
        out[static_cast<std::size_t>(i)] = {mean_E + d_E * normal_quantile(p), 1.0 / count};
    }
    return out;
}

double truncated_gaussian_mean(double mean, double sigma) {
    const double alpha = -mean / sigma;
    const double phi = std::exp(-alpha * alpha / 2) / std::sqrt(2 * kPi);
    return mean + sigma * phi / (1.0 - normal_cdf(alpha));
}

void write_ensemble_csv(std::ostream& os, const Ensemble& e) {
    os << "member,weight";
    for (int i = 1; i <= e.sites; ++i) os << ",q" << i;
    for (int i = 1; i <= e.sites; ++i) os << ",p" << i;
    os << '\n';
    char buf[32];
    for (int m = 0; m < e.size(); ++m) {
        os << m;
        std::snprintf(buf, sizeof(buf), ",%.17g", e.weights[static_cast<std::size_t>(m)]);
        os << buf;
        for (double v : e.member(m)) {
            std::snprintf(buf, sizeof(buf), ",%.17g", v);
            os << buf;
        }
        os << '\n';
    }
}

} // namespace acd
