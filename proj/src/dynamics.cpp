#include "acd/dynamics.hpp"

#include "acd/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

namespace acd {

namespace {
constexpr double kPi = std::numbers::pi;
}

double RampProtocol::beta(double t) const {
    if (t < -1e-12 * tau || t > tau * (1 + 1e-12))
        throw std::out_of_range("protocol time outside [0, tau]");
    t = std::clamp(t, 0.0, tau);
    const double inner = std::sin(kPi * t / (2 * tau));
    const double s = std::sin(kPi / 2 * inner * inner);
    return s * s;
}

double RampProtocol::beta_dot(double t) const {
    if (t < -1e-12 * tau || t > tau * (1 + 1e-12))
        throw std::out_of_range("protocol time outside [0, tau]");
    t = std::clamp(t, 0.0, tau);
    const double B = kPi * t / (2 * tau);
    const double inner = std::sin(B);
    const double A = kPi / 2 * inner * inner;
    return kPi * kPi / (4 * tau) * std::sin(2 * A) * std::sin(2 * B);
}

double RampProtocol::time_at_beta(double b) const {
    if (b < 0.0 || b > 1.0) throw std::out_of_range("beta outside [0,1]");
    const double inner = std::sqrt(2.0 / kPi * std::asin(std::sqrt(b)));
    return 2 * tau / kPi * std::asin(inner);
}

IntegratorConfig IntegratorConfig::ramp_default(double tau, int threads) {
    IntegratorConfig c;
    c.step = std::max(std::min(tau, 1.0) / 2000.0, 1e-5);
    c.threads = threads;
    return c;
}

VectorField bare_ramp_field(const SystemSpec& spec, const RampProtocol& protocol) {
    const int n = spec.sites;
    VectorField f;
    f.dim = 2 * n;
    if (spec.kind == SystemKind::AnharmonicOscillator) {
        f.eval = [protocol](double t, const double* z, double* dz) {
            const double beta = protocol.beta(t);
            dz[0] = z[1];
            dz[1] = -z[0] - beta * z[0] * z[0] * z[0];
        };
        return f;
    }
    f.eval = [protocol, n](double t, const double* z, double* dz) {
        const double beta = protocol.beta(t);
        for (int i = 0; i < n; ++i) dz[i] = z[n + i];
        for (int i = 0; i < n; ++i) {
            const double qi = z[i];
            const double ql = i > 0 ? z[i - 1] : 0.0;
            const double qr = i + 1 < n ? z[i + 1] : 0.0;
            const double dl = qi - ql, dr = qr - qi;
            dz[n + i] = (dr - dl) + beta * (dr * dr * dr - dl * dl * dl);
        }
    };
    return f;
}

VectorField static_field(const SystemSpec& spec, double beta) {
    const int n = spec.sites;
    VectorField f;
    f.dim = 2 * n;
    if (spec.kind == SystemKind::AnharmonicOscillator) {
        f.eval = [beta](double, const double* z, double* dz) {
            dz[0] = z[1];
            dz[1] = -z[0] - beta * z[0] * z[0] * z[0];
        };
        return f;
    }
    f.eval = [beta, n](double, const double* z, double* dz) {
        for (int i = 0; i < n; ++i) dz[i] = z[n + i];
        for (int i = 0; i < n; ++i) {
            const double qi = z[i];
            const double ql = i > 0 ? z[i - 1] : 0.0;
            const double qr = i + 1 < n ? z[i + 1] : 0.0;
            const double dl = qi - ql, dr = qr - qi;
            dz[n + i] = (dr - dl) + beta * (dr * dr * dr - dl * dl * dl);
        }
    };
    return f;
}

namespace {

// Flattened drive gradient: all beta-power components of all ansatz terms in
// one pass, with a per-channel scalar s_{j,m} = beta_dot gamma_j beta^m.
struct DriveGradient {
    struct Channel {
        int term = 0;
        int power = 0;
        GradientEvaluator grad;
    };
    std::vector<Channel> channels;

    void build(const std::vector<BetaPolynomial>& terms) {
        for (std::size_t j = 0; j < terms.size(); ++j) {
            const auto& bp = terms[j];
            for (std::size_t m = 0; m < bp.coeff.size(); ++m) {
                if (bp.coeff[m].is_zero()) continue;
                channels.push_back({static_cast<int>(j), static_cast<int>(m),
                                    GradientEvaluator(bp.coeff[m])});
            }
        }
    }
};

} // namespace

VectorField acd_field(const DriveSpec& drive, const RampProtocol& protocol) {
    if (drive.terms.size() != drive.gamma.size())
        throw std::invalid_argument("one coefficient function required per ansatz term");
    if (drive.terms.size() > 8)
        throw std::invalid_argument("at most 8 ansatz terms supported");
    if (drive.terms.empty()) return bare_ramp_field(drive.system, protocol);

    const int n = drive.system.sites;
    auto grad = std::make_shared<DriveGradient>();
    grad->build(drive.terms);
    auto gammas = drive.gamma;
    VectorField bare = bare_ramp_field(drive.system, protocol);

    VectorField f;
    f.dim = 2 * n;
    f.eval = [protocol, grad, gammas, bare, n](double t, const double* z, double* dz) {
        bare.eval(t, z, dz);
        const double bd = protocol.beta_dot(t);
        if (bd == 0.0) return;
        const double beta = protocol.beta(t);
        // per-term scalars
        double gval[8];
        const std::size_t nterms = gammas.size();
        for (std::size_t j = 0; j < nterms; ++j) {
            gval[j] = gammas[j](beta);
            if (!std::isfinite(gval[j]))
                throw std::runtime_error("coefficient evaluation failed at beta=" +
                                         std::to_string(beta));
        }
        double buf[512];
        double* g = buf;
        std::vector<double> heap;
        if (2 * n > 512) {
            heap.assign(static_cast<std::size_t>(2 * n), 0.0);
            g = heap.data();
        } else {
            std::fill(g, g + 2 * n, 0.0);
        }
        for (const auto& ch : grad->channels) {
            double s = bd * gval[ch.term];
            for (int m = 0; m < ch.power; ++m) s *= beta;
            ch.grad.accumulate(z, s, g);
        }
        // dq/dt += dA/dp, dp/dt -= dA/dq
        for (int i = 0; i < n; ++i) {
            dz[i] += g[n + i];
            dz[n + i] -= g[i];
        }
    };
    return f;
}

VectorField polynomial_ramp_field(const PolynomialFamily& h0, const RampProtocol& protocol) {
    const int n = h0.sites();
    auto [bq, bp] = h0.base.gradient_evaluators();
    auto [lq, lp] = h0.linear_in_beta.gradient_evaluators();
    VectorField f;
    f.dim = 2 * n;
    f.eval = [protocol, n, bq = std::move(bq), bp = std::move(bp), lq = std::move(lq),
              lp = std::move(lp)](double t, const double* z, double* dz) {
        const double beta = protocol.beta(t);
        std::span<const double> zs(z, static_cast<std::size_t>(2 * n));
        for (int i = 0; i < n; ++i) {
            const auto iu = static_cast<std::size_t>(i);
            dz[i] = bp[iu](zs) + beta * lp[iu](zs);
            dz[n + i] = -(bq[iu](zs) + beta * lq[iu](zs));
        }
    };
    return f;
}

namespace {

void rk4_span(const VectorField& field, double* z, int dim, double t0, double t1, double step,
              long max_steps) {
    const double span = t1 - t0;
    if (span <= 0.0) return;
    long nsteps = static_cast<long>(std::ceil(span / step - 1e-12));
    nsteps = std::max(nsteps, 1L);
    if (nsteps > max_steps) throw std::runtime_error("integrator exceeded max step count");
    const double h = span / static_cast<double>(nsteps);
    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    for (long s = 0; s < nsteps; ++s) {
        const double t = t0 + h * static_cast<double>(s);
        field.eval(t, z, k1.data());
        for (int i = 0; i < dim; ++i) tmp[i] = z[i] + 0.5 * h * k1[i];
        field.eval(t + 0.5 * h, tmp.data(), k2.data());
        for (int i = 0; i < dim; ++i) tmp[i] = z[i] + 0.5 * h * k2[i];
        field.eval(t + 0.5 * h, tmp.data(), k3.data());
        for (int i = 0; i < dim; ++i) tmp[i] = z[i] + h * k3[i];
        field.eval(t + h, tmp.data(), k4.data());
        for (int i = 0; i < dim; ++i)
            z[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
}

// Cash-Karp embedded RK45 with step-size control.
void rk45_span(const VectorField& field, double* z, int dim, double t0, double t1, double tol,
               long max_steps) {
    static const double a2 = 0.2, a3 = 0.3, a4 = 0.6, a5 = 1.0, a6 = 0.875;
    static const double b21 = 0.2;
    static const double b31 = 3.0 / 40, b32 = 9.0 / 40;
    static const double b41 = 0.3, b42 = -0.9, b43 = 1.2;
    static const double b51 = -11.0 / 54, b52 = 2.5, b53 = -70.0 / 27, b54 = 35.0 / 27;
    static const double b61 = 1631.0 / 55296, b62 = 175.0 / 512, b63 = 575.0 / 13824,
                        b64 = 44275.0 / 110592, b65 = 253.0 / 4096;
    static const double c1 = 37.0 / 378, c3 = 250.0 / 621, c4 = 125.0 / 594, c6 = 512.0 / 1771;
    static const double d1 = c1 - 2825.0 / 27648, d3 = c3 - 18575.0 / 48384,
                        d4 = c4 - 13525.0 / 55296, d5 = -277.0 / 14336, d6 = c6 - 0.25;

    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), tmp(dim), out(dim);
    double t = t0;
    double h = (t1 - t0) / 100.0;
    long steps = 0;
    while (t < t1 - 1e-14 * (t1 - t0)) {
        if (++steps > max_steps) throw std::runtime_error("adaptive integrator step budget spent");
        h = std::min(h, t1 - t);
        if (h < 1e-14 * (t1 - t0))
            throw std::runtime_error("adaptive integrator step underflow");
        field.eval(t, z, k1.data());
        for (int i = 0; i < dim; ++i) tmp[i] = z[i] + h * b21 * k1[i];
        field.eval(t + a2 * h, tmp.data(), k2.data());
        for (int i = 0; i < dim; ++i) tmp[i] = z[i] + h * (b31 * k1[i] + b32 * k2[i]);
        field.eval(t + a3 * h, tmp.data(), k3.data());
        for (int i = 0; i < dim; ++i)
            tmp[i] = z[i] + h * (b41 * k1[i] + b42 * k2[i] + b43 * k3[i]);
        field.eval(t + a4 * h, tmp.data(), k4.data());
        for (int i = 0; i < dim; ++i)
            tmp[i] = z[i] + h * (b51 * k1[i] + b52 * k2[i] + b53 * k3[i] + b54 * k4[i]);
        field.eval(t + a5 * h, tmp.data(), k5.data());
        for (int i = 0; i < dim; ++i)
            tmp[i] = z[i] + h * (b61 * k1[i] + b62 * k2[i] + b63 * k3[i] + b64 * k4[i] +
                                 b65 * k5[i]);
        field.eval(t + a6 * h, tmp.data(), k6.data());
        double err = 0.0;
        for (int i = 0; i < dim; ++i) {
            out[i] = z[i] + h * (c1 * k1[i] + c3 * k3[i] + c4 * k4[i] + c6 * k6[i]);
            const double e =
                h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i]);
            err = std::max(err, std::abs(e) / (1.0 + std::abs(out[i])));
        }
        if (err <= tol) {
            t += h;
            std::copy(out.begin(), out.end(), z);
            const double grow = err > 0 ? 0.9 * std::pow(tol / err, 0.2) : 5.0;
            h *= std::clamp(grow, 0.2, 5.0);
        } else {
            h *= std::max(0.9 * std::pow(tol / err, 0.25), 0.1);
        }
    }
}

void integrate_span(const VectorField& field, double* z, int dim, double t0, double t1,
                    const IntegratorConfig& config) {
    if (config.method == IntegratorMethod::RK4) {
        if (config.step <= 0) throw std::invalid_argument("integrator step must be positive");
        rk4_span(field, z, dim, t0, t1, config.step, config.max_steps);
    } else {
        if (!(config.tolerance > 0 && config.tolerance <= 1e-2))
            throw std::invalid_argument("adaptive tolerance must lie in (0, 1e-2]");
        rk45_span(field, z, dim, t0, t1, config.tolerance, config.max_steps);
    }
}

} // namespace

void evolve_state(std::vector<double>& z, const VectorField& field, double t0, double t1,
                  const IntegratorConfig& config) {
    if (t1 < t0) throw std::invalid_argument("t1 must be >= t0");
    integrate_span(field, z.data(), field.dim, t0, t1, config);
}

Ensemble evolve_ensemble(const Ensemble& ensemble, const VectorField& field, double t0, double t1,
                         const IntegratorConfig& config) {
    if (t1 < t0) throw std::invalid_argument("t1 must be >= t0");
    if (field.dim != 2 * ensemble.sites)
        throw std::invalid_argument("field dimension does not match ensemble");
    Ensemble out = ensemble;
    const int dim = field.dim;
    parallel_for(static_cast<std::size_t>(out.size()), config.threads, [&](std::size_t m) {
        auto z = out.member(static_cast<int>(m));
        integrate_span(field, z.data(), dim, t0, t1, config);
        for (double v : z)
            if (!std::isfinite(v))
                throw std::runtime_error("non-finite state for ensemble member " +
                                         std::to_string(m));
    });
    return out;
}

std::vector<Ensemble> adiabatic_reference_trajectory(const SystemSpec& spec,
                                                     const Ensemble& initial, double tau_ref,
                                                     const std::vector<double>& beta_grid,
                                                     const IntegratorConfig& config) {
    for (std::size_t i = 0; i + 1 < beta_grid.size(); ++i)
        if (!(beta_grid[i] < beta_grid[i + 1]))
            throw std::invalid_argument("beta grid must be strictly increasing");
    if (!beta_grid.empty() && (beta_grid.front() < 0.0 || beta_grid.back() > 1.0))
        throw std::invalid_argument("beta grid must lie in [0,1]");

    RampProtocol protocol{tau_ref};
    VectorField field = bare_ramp_field(spec, protocol);
    std::vector<double> times(beta_grid.size());
    for (std::size_t i = 0; i < beta_grid.size(); ++i) times[i] = protocol.time_at_beta(beta_grid[i]);

    std::vector<Ensemble> snapshots(beta_grid.size(), initial);
    const int dim = field.dim;
    parallel_for(static_cast<std::size_t>(initial.size()), config.threads, [&](std::size_t m) {
        std::vector<double> z(initial.member(static_cast<int>(m)).begin(),
                              initial.member(static_cast<int>(m)).end());
        double t = 0.0;
        for (std::size_t g = 0; g < times.size(); ++g) {
            integrate_span(field, z.data(), dim, t, times[g], config);
            t = times[g];
            auto dst = snapshots[g].member(static_cast<int>(m));
            std::copy(z.begin(), z.end(), dst.begin());
        }
    });
    return snapshots;
}

} // namespace acd
