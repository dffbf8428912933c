// Experiment suites: tau sweeps, the long-wavelength instability study, the
// Delta-perturbation sensitivity analysis, and functional overlaps of the
// optimized coefficients.
#pragma once

#include "acd/agp.hpp"
#include "acd/fom.hpp"
#include "acd/quantum.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace acd {

struct FomRow {
    std::string system;
    int N = 1;
    int k = 1;
    double E0 = 1.0;
    double d_E = 0.0;
    int order = 0;  // 0 = unassisted
    double tau = 0.0;
    std::string fom_kind;
    double value = 0.0;
    std::uint64_t seed = 0;
    int M = 0;
};

// `system,N,k,E0,dE,order,tau,fom_kind,value,seed,M`
void write_fom_csv(std::ostream& os, const std::vector<FomRow>& rows);

std::vector<double> log_tau_grid(double tau_min, double tau_max, int points);

struct SweepSpec {
    SystemSpec system;
    int k = 1;
    double E0 = 1.0;
    double d_E = 0.0;  // metadata: width the coefficients were optimized at
    std::vector<double> tau_grid;
    std::vector<int> orders{0, 1, 2};
    int M = 1024;
    std::uint64_t seed = 1;
    int threads = 1;
    double step_divisor = 2000.0;  // ramp step = min(tau,1)/divisor, floor 1e-5
    bool temporal = false;         // also report delta_CM (oscillator only)
    int temporal_samples = 256;
};

IntegratorConfig sweep_integrator(const SweepSpec& spec, double tau);

// Energy-variance FoM per (order, tau); coefficient files keyed by order.
std::vector<FomRow> run_tau_sweep(const SweepSpec& spec,
                                  const std::map<int, CoefficientFile>& coefficients);

// Quantum FoM rows (infidelity, q_energy_var, delta_qm) per (order, tau).
std::vector<FomRow> run_quantum_sweep(const SweepSpec& spec,
                                      const std::map<int, CoefficientFile>& coefficients,
                                      const HilbertConfig& hilbert);

struct InstabilityConfig {
    int sites = 5;
    int k = 1;
    double E0 = 1.0;
    double broadened_width = 0.4;
    OptimizeSettings optimize;  // shared optimizer settings (d_E overridden per panel)
    SweepSpec sweep;            // grid/M/seed for both panels
};

// Two full tau sweeps (orders 1 and 2) with coefficients optimized at
// d_E = 0 and d_E = broadened_width; rows carry the panel width in d_E.
std::vector<FomRow> instability_study(const InstabilityConfig& config);

struct DeltaRow {
    int order = 0;
    double delta = 0.0;
    double value = 0.0;
};

struct DeltaSensitivity {
    std::vector<DeltaRow> rows;
    std::map<int, double> slope_at_zero;  // central difference per order
};

// Quench FoM as a function of the fit perturbation b1 -> b1 (1 + Delta),
// applied to every coefficient simultaneously.
DeltaSensitivity delta_sensitivity(const std::map<int, CoefficientFile>& coefficients,
                                   const std::vector<double>& delta_grid, double tau_quench,
                                   const SweepSpec& spec);
void write_delta_csv(std::ostream& os, const SweepSpec& spec, const DeltaSensitivity& result);

// Normalized squared inner product of two coefficient functions over [0,1]
// (composite Simpson; nodes rounded up to an odd count >= 201).
double functional_overlap(const std::function<double(double)>& f,
                          const std::function<double(double)>& g, int nodes = 201);

struct OverlapRow {
    double d_E = 0.0;
    std::vector<double> overlap;  // F^2 per coefficient
};

// F^2_i(d_E) of gamma_i(beta, d_E) against the d_E = 0 reference.
std::vector<OverlapRow> overlap_study(const SystemSpec& spec, int k, double E0,
                                      const std::vector<double>& dE_grid,
                                      const OptimizeSettings& settings);
void write_overlap_csv(std::ostream& os, const std::vector<OverlapRow>& rows);

} // namespace acd
