// Truncated-Hilbert-space quantum anharmonic oscillator: Weyl-ordered ACD
// driving, unitary propagation, fidelity / energy-variance / dephasing FoMs.
#pragma once

#include "acd/dynamics.hpp"

#include <Eigen/Dense>

namespace acd {

struct HilbertConfig {
    int dimension = 128;
    int initial_index = 0;  // eigen-index of the initial state (ground state)

    // evolution steps for a ramp of duration tau; resolves the drive pulse at
    // short tau and the slow schedule at long tau
    long steps_for(double tau) const;
};

struct QuantumOperators {
    Eigen::MatrixXcd x, p;
    Eigen::MatrixXcd h_base, h_quartic;  // H(beta) = h_base + beta h_quartic
    Eigen::MatrixXcd h_lin;              // (p^2 + x^2)/2
    Eigen::MatrixXcd weyl1;              // (x^3 p + p x^3)/2
    Eigen::MatrixXcd weyl2;              // (x p^3 + p x p^2 + p^2 x p + p^3 x)/4

    Eigen::MatrixXcd hamiltonian(double beta) const { return h_base + beta * h_quartic; }
};

// Ladder-operator construction with m = omega = hbar = 1.
QuantumOperators build_operators(const HilbertConfig& config);

// gamma_1 W1 (+ gamma_2 W2 at order 2): the symmetrized counterparts of the
// classical x^3 p and x p^3 terms.
Eigen::MatrixXcd weyl_agp(const QuantumOperators& ops, int order, double gamma1, double gamma2);

struct QuantumState {
    Eigen::VectorXcd amp;
    double norm() const { return amp.norm(); }
};

// n-th eigenstate (ascending energy) of a hermitian operator.
QuantumState eigenstate(const Eigen::MatrixXcd& h, int index);

struct QuantumDrive {
    int order = 0;  // 0 = unassisted
    CoefficientFunction gamma1;
    CoefficientFunction gamma2;
};

// Midpoint-exponential propagation of H_ACD(t) = H0(beta) + beta_dot * A(beta)
// over [0, tau]; each step applies the exact unitary of the frozen midpoint
// Hamiltonian. Throws if the norm drifts beyond 1e-6.
QuantumState evolve_schrodinger(const QuantumState& initial, const RampProtocol& protocol,
                                const QuantumDrive& drive, const QuantumOperators& ops,
                                long steps);

// exp(-i h t) |psi> for a frozen hermitian Hamiltonian.
QuantumState evolve_static(const QuantumState& initial, const Eigen::MatrixXcd& h, double t);

struct QuantumFoms {
    double one_minus_f2 = 0.0;
    double energy_variance = 0.0;
    double delta_qm = 0.0;
    bool degenerate_gap = false;  // dephasing formula assumption violated
};

// target = eigenstate of h_final with the given sorted index; delta_qm uses
// the eigenbasis dephasing formula for the infinite-time variance of h_lin.
QuantumFoms quantum_foms(const QuantumState& final_state, const Eigen::MatrixXcd& h_final,
                         int target_index, const Eigen::MatrixXcd& h_lin);

} // namespace acd
