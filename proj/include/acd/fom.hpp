// Classical figures of merit for non-adiabaticity: final energy variance and
// the transient temporal variance delta_CM.
#pragma once

#include "acd/dynamics.hpp"
#include "acd/systems.hpp"

namespace acd {

// Weighted <H^2> - <H>^2 of H0(beta) over the ensemble; per-site divides by N
// (the normalization the chain figures use).
double energy_variance(const Ensemble& ensemble, const SystemSpec& spec, double beta,
                       bool per_site = false);

// Weighted mean of H0(beta).
double energy_mean(const Ensemble& ensemble, const SystemSpec& spec, double beta);

// Standard deviation of H0(beta=1) over the given (typically initial)
// ensemble: the instantaneous-quench energy spread that sets T_char.
double sigma_E_after_quench(const SystemSpec& spec, const Ensemble& ensemble);

// T_char = E0 / (omega sigma_E); omega = 1 for the oscillator.
double characteristic_time(double E0, double omega, double sigma_E);

// Variance over time of the ensemble-averaged harmonic energy <H_lin>(t),
// sampled at `samples` uniform times in [0, T_char] after the ramp, under
// static H0(beta=1) evolution. Throws std::domain_error when T_char is not a
// positive finite number (sigma_E = 0).
double temporal_variance(const Ensemble& final_ensemble, const SystemSpec& spec, double T_char,
                         int samples, const IntegratorConfig& config);

struct SuppressionFactor {
    double ratio = 0.0;
    bool infinite = false;
};

// var_unassisted / var_acd at matched tau.
SuppressionFactor suppression_factor(double var_unassisted, double var_acd);

} // namespace acd
