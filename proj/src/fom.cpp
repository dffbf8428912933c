#include "acd/fom.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace acd {

double energy_mean(const Ensemble& ensemble, const SystemSpec& spec, double beta) {
    double mean = 0.0;
    for (int m = 0; m < ensemble.size(); ++m)
        mean += ensemble.weights[static_cast<std::size_t>(m)] *
                hamiltonian_value(spec, beta, ensemble.member(m));
    return mean;
}

double energy_variance(const Ensemble& ensemble, const SystemSpec& spec, double beta,
                       bool per_site) {
    if (ensemble.size() < 1) throw std::invalid_argument("empty ensemble");
    const double mean = energy_mean(ensemble, spec, beta);
    double var = 0.0;
    for (int m = 0; m < ensemble.size(); ++m) {
        const double d = hamiltonian_value(spec, beta, ensemble.member(m)) - mean;
        var += ensemble.weights[static_cast<std::size_t>(m)] * d * d;
    }
    return per_site ? var / spec.sites : var;
}

double sigma_E_after_quench(const SystemSpec& spec, const Ensemble& ensemble) {
    return std::sqrt(energy_variance(ensemble, spec, 1.0, false));
}

double characteristic_time(double E0, double omega, double sigma_E) {
    if (sigma_E <= 0.0) return std::numeric_limits<double>::infinity();
    return E0 / (omega * sigma_E);
}

double temporal_variance(const Ensemble& final_ensemble, const SystemSpec& spec, double T_char,
                         int samples, const IntegratorConfig& config) {
    if (!(T_char > 0.0) || !std::isfinite(T_char))
        throw std::domain_error(
            "temporal variance undefined: zero energy spread gives an infinite window");
    if (samples < 2) throw std::invalid_argument("need at least two time samples");

    const VectorField field = static_field(spec, 1.0);
    Ensemble current = final_ensemble;
    double t = 0.0;
    double sum = 0.0, sum2 = 0.0;
    for (int s = 0; s < samples; ++s) {
        const double ts = (s + 0.5) * T_char / samples;
        current = evolve_ensemble(current, field, t, ts, config);
        t = ts;
        double hlin = 0.0;
        for (int m = 0; m < current.size(); ++m)
            hlin += current.weights[static_cast<std::size_t>(m)] *
                    harmonic_part_value(spec, current.member(m));
        sum += hlin;
        sum2 += hlin * hlin;
    }
    const double mean = sum / samples;
    return std::max(0.0, sum2 / samples - mean * mean);
}

SuppressionFactor suppression_factor(double var_unassisted, double var_acd) {
    if (var_acd <= 0.0) return {std::numeric_limits<double>::infinity(), true};
    return {var_unassisted / var_acd, false};
}

} // namespace acd
