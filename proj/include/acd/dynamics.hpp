// Ramp protocol, equations of motion for bare and ACD-driven systems, and
// ensemble propagation.
#pragma once

#include "acd/phase_poly.hpp"
#include "acd/systems.hpp"

#include <functional>
#include <vector>

namespace acd {

// beta(t) = sin^2((pi/2) sin^2(pi t / 2 tau)): smooth at both endpoints,
// beta_dot(0) = beta_dot(tau) = 0.
struct RampProtocol {
    double tau = 1.0;

    double beta(double t) const;
    double beta_dot(double t) const;
    // inverse of the monotone schedule; beta in [0,1]
    double time_at_beta(double b) const;
};

enum class IntegratorMethod { RK4, Adaptive };

struct IntegratorConfig {
    IntegratorMethod method = IntegratorMethod::RK4;
    double step = 1e-3;       // RK4 fixed step
    double tolerance = 1e-9;  // adaptive per-step error target
    long max_steps = 400000000L;
    int threads = 1;

    // default ramp step min(tau,1)/2000 with floor 1e-5
    static IntegratorConfig ramp_default(double tau, int threads = 1);
};

// Time-dependent vector field dz/dt = f(t, z).
struct VectorField {
    int dim = 0;
    std::function<void(double t, const double* z, double* dz)> eval;
};

// Coefficient function gamma_j(beta) for one ansatz term.
using CoefficientFunction = std::function<double(double)>;

// Driven system: H_ACD(t) = H0(beta) + beta_dot * sum_j gamma_j(beta) X_j(beta).
// An empty term list is the unassisted protocol.
struct DriveSpec {
    SystemSpec system;
    std::vector<BetaPolynomial> terms;
    std::vector<CoefficientFunction> gamma;
};

// Hamilton's equations for the bare system under the ramp (native force loop).
VectorField bare_ramp_field(const SystemSpec& spec, const RampProtocol& protocol);
// Bare system at frozen beta.
VectorField static_field(const SystemSpec& spec, double beta);

// ACD equations of motion. The bare part uses the native force loop; drive
// terms go through compiled polynomial gradients. Throws if a coefficient
// evaluates non-finite.
VectorField acd_field(const DriveSpec& drive, const RampProtocol& protocol);

// Reference path built purely from gradient evaluators of H0 (slow; used to
// cross-check the native routes).
VectorField polynomial_ramp_field(const PolynomialFamily& h0, const RampProtocol& protocol);

// Propagates every member independently from t0 to t1; deterministic given
// the config, member order and weights preserved.
Ensemble evolve_ensemble(const Ensemble& ensemble, const VectorField& field, double t0, double t1,
                         const IntegratorConfig& config);

// Evolves a single flat state in place.
void evolve_state(std::vector<double>& z, const VectorField& field, double t0, double t1,
                  const IntegratorConfig& config);

// Snapshots of the ensemble along an unassisted slow ramp of duration tau_ref,
// taken where beta(t) crosses each grid value. The snapshots sample the
// adiabatically connected distribution used by the variational optimizer.
std::vector<Ensemble> adiabatic_reference_trajectory(const SystemSpec& spec,
                                                     const Ensemble& initial, double tau_ref,
                                                     const std::vector<double>& beta_grid,
                                                     const IntegratorConfig& config);

} // namespace acd
