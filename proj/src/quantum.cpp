#include "acd/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace acd {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using namespace std::complex_literals;

long HilbertConfig::steps_for(double tau) const {
    const double resolve_schedule = tau / 0.02;
    return static_cast<long>(std::clamp(resolve_schedule, 2000.0, 40000.0));
}

QuantumOperators build_operators(const HilbertConfig& config) {
    const int d = config.dimension;
    if (d < 8) throw std::invalid_argument("Hilbert dimension must be >= 8");
    MatrixXcd a = MatrixXcd::Zero(d, d);
    for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    const MatrixXcd adag = a.adjoint();

    QuantumOperators ops;
    ops.x = (a + adag) / std::sqrt(2.0);
    ops.p = 1i * (adag - a) / std::sqrt(2.0);
    const MatrixXcd x2 = ops.x * ops.x;
    const MatrixXcd p2 = ops.p * ops.p;
    ops.h_base = 0.5 * (p2 + x2);
    ops.h_quartic = 0.25 * x2 * x2;
    ops.h_lin = ops.h_base;

    const MatrixXcd x3 = x2 * ops.x;
    const MatrixXcd p3 = p2 * ops.p;
    ops.weyl1 = 0.5 * (x3 * ops.p + ops.p * x3);
    ops.weyl2 = 0.25 * (ops.x * p3 + ops.p * ops.x * p2 + p2 * ops.x * ops.p + p3 * ops.x);
    return ops;
}

MatrixXcd weyl_agp(const QuantumOperators& ops, int order, double gamma1, double gamma2) {
    if (order < 1 || order > 2) throw std::invalid_argument("Weyl AGP supports orders 1 and 2");
    MatrixXcd agp = gamma1 * ops.weyl1;
    if (order == 2) agp += gamma2 * ops.weyl2;
    return agp;
}

QuantumState eigenstate(const MatrixXcd& h, int index) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
    QuantumState s;
    s.amp = es.eigenvectors().col(index);
    return s;
}

QuantumState evolve_schrodinger(const QuantumState& initial, const RampProtocol& protocol,
                                const QuantumDrive& drive, const QuantumOperators& ops,
                                long steps) {
    if (std::abs(initial.norm() - 1.0) > 1e-10)
        throw std::invalid_argument("initial state must be normalized");
    if (steps < 1) throw std::invalid_argument("need at least one step");

    const double h = protocol.tau / static_cast<double>(steps);
    VectorXcd psi = initial.amp;
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es;
    for (long s = 0; s < steps; ++s) {
        const double tm = (static_cast<double>(s) + 0.5) * h;
        const double beta = protocol.beta(tm);
        const double bd = protocol.beta_dot(tm);
        MatrixXcd ham = ops.hamiltonian(beta);
        if (drive.order >= 1 && bd != 0.0) {
            const double g1 = drive.gamma1(beta);
            const double g2 = drive.order >= 2 ? drive.gamma2(beta) : 0.0;
            ham += bd * weyl_agp(ops, drive.order, g1, g2);
        }
        es.compute(ham);
        if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
        const VectorXd& ev = es.eigenvalues();
        VectorXcd phases(ev.size());
        for (Eigen::Index i = 0; i < ev.size(); ++i)
            phases(i) = std::exp(std::complex<double>(0.0, -ev(i) * h));
        psi = es.eigenvectors() * (phases.asDiagonal() * (es.eigenvectors().adjoint() * psi));
        if (std::abs(psi.norm() - 1.0) > 1e-6)
            throw std::runtime_error("unitarity lost: norm drift beyond 1e-6");
    }
    return {psi};
}

QuantumState evolve_static(const QuantumState& initial, const MatrixXcd& h, double t) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
    const Eigen::VectorXd& ev = es.eigenvalues();
    VectorXcd phases(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        phases(i) = std::exp(std::complex<double>(0.0, -ev(i) * t));
    QuantumState out;
    out.amp = es.eigenvectors() * (phases.asDiagonal() * (es.eigenvectors().adjoint() * initial.amp));
    return out;
}

QuantumFoms quantum_foms(const QuantumState& final_state, const MatrixXcd& h_final,
                         int target_index, const MatrixXcd& h_lin) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h_final);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
    const MatrixXcd& v = es.eigenvectors();
    const VectorXd& e = es.eigenvalues();

    QuantumFoms out;
    const std::complex<double> overlap = v.col(target_index).dot(final_state.amp);
    out.one_minus_f2 = 1.0 - std::norm(overlap);

    const VectorXcd hpsi = h_final * final_state.amp;
    const double mean = final_state.amp.dot(hpsi).real();
    const double mean2 = hpsi.squaredNorm();
    out.energy_variance = std::max(0.0, mean2 - mean * mean);

    // dephasing formula in the eigenbasis of the final Hamiltonian:
    // infinite-time variance of <O>(t) = sum_{m != n} |c_m|^2 |c_n|^2 |O_mn|^2
    const VectorXcd c = v.adjoint() * final_state.amp;
    const MatrixXcd o = v.adjoint() * h_lin * v;
    const Eigen::Index d = c.size();
    for (Eigen::Index i = 0; i + 1 < d; ++i)
        if (e(i + 1) - e(i) < 1e-10) out.degenerate_gap = true;
    double var = 0.0;
    for (Eigen::Index m = 0; m < d; ++m) {
        const double pm = std::norm(c(m));
        if (pm < 1e-300) continue;
        for (Eigen::Index n = 0; n < d; ++n) {
            if (n == m) continue;
            const double pn = std::norm(c(n));
            if (pn < 1e-300) continue;
            var += pm * pn * std::norm(o(m, n));
        }
    }
    out.delta_qm = var;
    return out;
}

} // namespace acd
