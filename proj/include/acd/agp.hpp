// Variational optimization of the approximate adiabatic gauge potential:
// action assembly from ensemble statistics, quadratic-form minimization,
// energy-broadened (weighted) actions, and constrained rational fits of the
// resulting coefficient functions gamma_i(beta).
#pragma once

#include "acd/dynamics.hpp"
#include "acd/phase_poly.hpp"
#include "acd/systems.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace acd {

// S(gamma) = constant + linear . gamma + gamma^T quad gamma, with
// constant = Var(G00), linear_j = 2 Cov(G00, G_j), quad_jk = Cov(G_j, G_k).
struct ActionQuadraticForm {
    double constant = 0.0;
    Eigen::VectorXd linear;
    Eigen::MatrixXd quad;

    int parameters() const { return static_cast<int>(linear.size()); }
    double value(const Eigen::VectorXd& gamma) const;

    // two-parameter naming used in the closed-form minimizer
    double a00() const { return constant; }
    double a10() const { return linear(0); }
    double a01() const { return linear(1); }
    double a20() const { return quad(0, 0); }
    double a02() const { return quad(1, 1); }
    double a11() const { return 2.0 * quad(0, 1); }
};

struct MinimizeResult {
    Eigen::VectorXd gamma;
    double action = 0.0;  // value at the minimizer
    bool degenerate = false;
};

// Stationary point of the form: solves quad * gamma = -linear/2; singular
// forms fall back to the minimum-norm solution with the degenerate flag set.
MinimizeResult minimize(const ActionQuadraticForm& form);

// Closed-form two-parameter minimizer (Cramer route; cross-checks the solve).
Eigen::Vector2d minimize_two_parameter_closed_form(const ActionQuadraticForm& form);

// G_beta split: G00 = dH0/dbeta, G_j = -{X_j, H0}, so that
// G = G00 + sum_j gamma_j G_j.
struct GTerms {
    PhasePolynomial g00;
    std::vector<PhasePolynomial> gj;
};

GTerms make_g_terms(const PolynomialFamily& h0, double beta,
                    const std::vector<PhasePolynomial>& ansatz_terms);

// Weighted ensemble moments of the G terms assembled into the action form.
ActionQuadraticForm assemble_quadratic_form(const Ensemble& ensemble, const GTerms& g);
ActionQuadraticForm assemble_quadratic_form(const Ensemble& ensemble, const PolynomialFamily& h0,
                                            double beta,
                                            const std::vector<PhasePolynomial>& ansatz_terms);

// Ansatz families. NestedBracket regenerates X_k(beta) from the bracket
// expansion (beta-dependent for the FPUT chain); OscillatorFixed is the
// {x^3 p, x p^3} basis of the single-oscillator harmonic limit.
enum class AnsatzKind { NestedBracket, OscillatorFixed };

AnsatzKind default_ansatz(const SystemSpec& spec);
std::string ansatz_name(AnsatzKind kind);
AnsatzKind ansatz_from_name(const std::string& name);

std::vector<BetaPolynomial> ansatz_terms(const PolynomialFamily& h0, AnsatzKind kind, int order);

// Rational representation gamma(beta) = (b0 + b1 beta + ... + bm beta^m) /
// (1 + c1 beta + ... + cn beta^n) with c_i >= 0, fitted to the raw table.
// With non-negative denominators the value is finite on [0,1].
struct CoefficientFit {
    std::vector<double> num;  // b_0..b_m
    std::vector<double> den;  // c_1..c_n, all >= 0
    double residual = 0.0;    // max |table - fit| over the raw table
    bool use_fit = true;      // false: residual above gate, interpolate raw table
    std::vector<std::pair<double, double>> raw_table;

    double rational(double beta) const;
    double interpolated(double beta) const;  // cubic Hermite through the table
    double operator()(double beta) const { return use_fit ? rational(beta) : interpolated(beta); }
};

// Constrained least-squares fit (variable projection over the denominator,
// c_i >= 0 enforced by construction). residual_gate is the fraction of
// max|gamma| above which the fit is rejected in favour of interpolation.
CoefficientFit fit_rational(const std::vector<std::pair<double, double>>& table, int num_degree,
                            int den_degree, double residual_gate = 0.02);

struct OptimizeSettings {
    int ansatz_order = 2;
    std::optional<AnsatzKind> ansatz;  // default chosen per system
    int beta_grid_size = 101;
    double tau_ref = 0.0;  // 0 -> 2000 (oscillator) / 5000 (FPUT)
    double ref_step = 0.01;
    int ensemble_size = 128;
    double d_E = 0.0;
    int realizations = 40;  // used when d_E > 0
    int fit_num_degree = 3;
    int fit_den_degree = 3;
    double fit_residual_gate = 0.02;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct GammaTables {
    std::vector<double> beta;
    std::vector<std::vector<double>> gamma;  // [term][grid point]
    std::vector<double> min_action;          // minimized action per grid point
    std::vector<double> action_at_zero;      // Var(G00): action of the bare protocol
    std::vector<bool> degenerate;
};

struct OptimizeResult {
    GammaTables tables;
    std::vector<CoefficientFit> fits;
    std::vector<EnergyRealization> realizations;
};

// Full pipeline of the variational method: adiabatic reference snapshots per
// energy realization, weighted action assembly per beta grid point,
// minimization, and rational fits.
OptimizeResult optimize_gamma_table(const SystemSpec& spec, int k, double E0,
                                    const OptimizeSettings& settings);

// Coefficient file: the contract between `optimize` and the driven commands.
struct CoefficientFile {
    SystemSpec system;
    int k = 1;
    double E0 = 1.0;
    double d_E = 0.0;
    int ansatz_order = 2;
    AnsatzKind ansatz = AnsatzKind::NestedBracket;
    std::uint64_t seed = 1;
    std::vector<double> beta_grid;
    std::vector<CoefficientFit> fits;
};

CoefficientFile make_coefficient_file(const SystemSpec& spec, int k, double E0,
                                      const OptimizeSettings& settings,
                                      const OptimizeResult& result);
std::string coefficient_file_to_json(const CoefficientFile& file);
CoefficientFile coefficient_file_from_json(const std::string& json_text);
void write_coefficient_file(const std::string& path, const CoefficientFile& file);
CoefficientFile read_coefficient_file(const std::string& path);

// Driven equations of motion for a coefficient set. Delta perturbs the b1
// numerator coefficient of every gamma_i: b1 -> b1 (1 + Delta).
DriveSpec make_drive(const CoefficientFile& file, double delta = 0.0);

} // namespace acd
