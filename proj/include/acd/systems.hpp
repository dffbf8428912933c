// System definitions: the quartic anharmonic oscillator and the beta-FPUT
// chain with fixed walls, normal-mode machinery, and initial-ensemble
// constructors (microcanonical shell, single normal mode, broadened energies).
#pragma once

#include "acd/phase_poly.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace acd {

enum class SystemKind { AnharmonicOscillator, FPUTChain };

struct SystemSpec {
    SystemKind kind = SystemKind::AnharmonicOscillator;
    int sites = 1;  // N; active oscillators (1 for the single oscillator)

    static SystemSpec oscillator() { return {SystemKind::AnharmonicOscillator, 1}; }
    static SystemSpec fput(int n_sites) { return {SystemKind::FPUTChain, n_sites}; }
    std::string name() const;
};

// Phase point stored flat as [q_1..q_N, p_1..p_N].
struct PhaseState {
    std::vector<double> z;

    explicit PhaseState(int sites = 0) : z(static_cast<std::size_t>(2 * sites), 0.0) {}
    int sites() const { return static_cast<int>(z.size() / 2); }
    double& q(int i) { return z[static_cast<std::size_t>(i)]; }
    double& p(int i) { return z[static_cast<std::size_t>(sites() + i)]; }
    double q(int i) const { return z[static_cast<std::size_t>(i)]; }
    double p(int i) const { return z[static_cast<std::size_t>(sites() + i)]; }
    bool finite() const;
};

// Weighted point cloud approximating a stationary distribution P(q,p).
struct Ensemble {
    int sites = 0;
    std::vector<double> states;   // member-major: member m at [m*2N, (m+1)*2N)
    std::vector<double> weights;  // normalized to 1
    std::uint64_t seed = 0;

    int size() const { return static_cast<int>(weights.size()); }
    std::span<double> member(int m) {
        return std::span<double>(states).subspan(static_cast<std::size_t>(m) * 2 * sites,
                                                 static_cast<std::size_t>(2 * sites));
    }
    std::span<const double> member(int m) const {
        return std::span<const double>(states).subspan(static_cast<std::size_t>(m) * 2 * sites,
                                                       static_cast<std::size_t>(2 * sites));
    }
    // weighted mean of f over members
    double average(const Evaluator& f) const;
};

struct ModeCoordinates {
    std::vector<double> Q;
    std::vector<double> P;
};

// H0(beta) with base = kinetic + harmonic part and linear_in_beta = quartic part.
PolynomialFamily build_hamiltonian(const SystemSpec& spec);

// Direct bond-sum evaluation (independent of the polynomial path; also the
// fast route used by the integrator).
double hamiltonian_value(const SystemSpec& spec, double beta, std::span<const double> z);
double quartic_part_value(const SystemSpec& spec, std::span<const double> z);
// harmonic part (kinetic + quadratic potential), the H_lin observable
double harmonic_part_value(const SystemSpec& spec, std::span<const double> z);

// omega_k = 2 sin(pi k / (2(N+1))), k = 1..N
double mode_frequency(int sites, int k);

// Q_k = sqrt(2/(N+1)) sum_n q_n sin(n k pi/(N+1)); same kernel for momenta.
// The kernel is symmetric orthogonal, so the inverse is the same map.
ModeCoordinates mode_transform(const SystemSpec& spec, const PhaseState& state);
PhaseState inverse_mode_transform(const SystemSpec& spec, const ModeCoordinates& modes);

// M equal-weight points on the harmonic orbit of energy E0, phases stratified
// over [0,2pi) with one seed-derived offset shared by the whole ensemble.
Ensemble oscillator_shell_ensemble(double E0, int M, std::uint64_t seed);

// Single normal mode k at harmonic energy E0, phase-averaged over its period.
Ensemble fput_mode_ensemble(const SystemSpec& spec, int k, double E0, int M, std::uint64_t seed);

Ensemble initial_ensemble(const SystemSpec& spec, int k, double E0, int M, std::uint64_t seed);

// Thermodynamic-limit family: fixed wavelength lambda and amplitude A require
// k = 2(N+1)/lambda (integral); returns (k, E0).
std::pair<int, double> thermodynamic_sequence(double lambda, double A, int sites);

struct EnergyRealization {
    double E0 = 0.0;
    double weight = 0.0;
};

// Stratified quantiles of a Gaussian(mean_E, d_E) truncated to E0 > 0, equal
// weights; d_E = 0 degenerates to `count` copies of mean_E.
std::vector<EnergyRealization> gaussian_energy_realizations(double mean_E, double d_E, int count);

// mean of the truncated Gaussian (closed form; used by tests as an oracle)
double truncated_gaussian_mean(double mean, double sigma);

// CSV snapshot: header `member,weight,q1..qN,p1..pN`
void write_ensemble_csv(std::ostream& os, const Ensemble& e);

} // namespace acd
