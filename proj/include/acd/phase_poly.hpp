// Sparse polynomial algebra over 2N-dimensional phase space.
//
// Variables are indexed 0..2N-1: index i < N is the coordinate q_{i+1},
// index N+i is the conjugate momentum p_{i+1}. Polynomials are kept in a
// canonical form (graded order on exponent tuples, like terms merged), so
// equality is structural and serialization is deterministic.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace acd {

struct VarPow {
    std::uint32_t var = 0;
    std::uint32_t pow = 0;
    friend bool operator==(const VarPow&, const VarPow&) = default;
};

// Single monomial: coefficient times a product of variable powers.
// `vars` is sorted by variable index and holds only non-zero exponents.
struct Monomial {
    double coeff = 0.0;
    std::vector<VarPow> vars;

    int degree() const {
        int d = 0;
        for (const auto& v : vars) d += static_cast<int>(v.pow);
        return d;
    }
};

// Canonical term order: total degree first, ties broken by the exponent of
// the earliest differing variable (higher power of the earlier variable
// sorts first, so x^4 < x^3 p < ... < p^4 within a degree block).
bool exponents_less(const Monomial& a, const Monomial& b);

class Evaluator;
class GradientEvaluator;

class PhasePolynomial {
  public:
    PhasePolynomial() = default;
    explicit PhasePolynomial(int sites) : sites_(sites) {}

    static PhasePolynomial zero(int sites) { return PhasePolynomial(sites); }
    static PhasePolynomial constant(int sites, double c);
    // variable index in [0, 2N): q_1..q_N then p_1..p_N
    static PhasePolynomial variable(int sites, int var_index);
    static PhasePolynomial monomial(int sites, double coeff, std::vector<VarPow> vars);

    int sites() const { return sites_; }          // N
    int variables() const { return 2 * sites_; }  // 2N
    bool is_zero() const { return terms_.empty(); }
    const std::vector<Monomial>& terms() const { return terms_; }
    std::size_t term_count() const { return terms_.size(); }
    int degree() const;

    PhasePolynomial operator+(const PhasePolynomial& rhs) const;
    PhasePolynomial operator-(const PhasePolynomial& rhs) const;
    PhasePolynomial operator*(const PhasePolynomial& rhs) const;
    PhasePolynomial operator*(double s) const;
    PhasePolynomial operator-() const { return *this * -1.0; }
    friend PhasePolynomial operator*(double s, const PhasePolynomial& p) { return p * s; }

    bool operator==(const PhasePolynomial& rhs) const;

    // max |coefficient| difference against rhs, treating missing terms as 0
    double max_coeff_distance(const PhasePolynomial& rhs) const;

    PhasePolynomial partial_derivative(int var_index) const;

    // Drops terms with |coeff| <= eps. Bracket chains call this with 1e-14 to
    // remove round-off dust; exact cancellations are removed unconditionally.
    PhasePolynomial pruned(double eps) const;

    double evaluate(std::span<const double> z) const;

    // One term per line: "coeff q1^a ... pN^b" in canonical order ("0" if empty).
    std::string to_debug_string() const;

    Evaluator compile() const;
    // evaluators for d/dq_i and d/dp_i, each of length N
    std::pair<std::vector<Evaluator>, std::vector<Evaluator>> gradient_evaluators() const;

    // Construct from an arbitrary term list: sorts, merges, drops zeros.
    static PhasePolynomial from_terms(int sites, std::vector<Monomial> terms);

  private:
    int sites_ = 0;
    std::vector<Monomial> terms_;
};

// {a, b} = sum_i dA/dq_i dB/dp_i - dA/dp_i dB/dq_i
PhasePolynomial poisson_bracket(const PhasePolynomial& a, const PhasePolynomial& b);

// H0(beta) = base + beta * linear_in_beta. Both paper Hamiltonians are linear
// in the control parameter, which keeps nested brackets polynomial in beta.
struct PolynomialFamily {
    PhasePolynomial base;
    PhasePolynomial linear_in_beta;

    PhasePolynomial at(double beta) const { return base + beta * linear_in_beta; }
    PhasePolynomial d_beta() const { return linear_in_beta; }
    int sites() const { return base.sites(); }
};

// Polynomial in beta whose coefficients are phase-space polynomials:
// P(beta) = sum_m beta^m coeff[m].
struct BetaPolynomial {
    std::vector<PhasePolynomial> coeff;

    PhasePolynomial at(double beta) const;
    int order() const { return static_cast<int>(coeff.size()) - 1; }
};

// Ansatz term k: X_k = (-1)^k {H0,{H0,...{H0, dH0/dbeta}...}} with 2k-1
// nested brackets, H0 evaluated at the given beta. Returns [X_1..X_order].
std::vector<PhasePolynomial> nested_bracket_ansatz(const PolynomialFamily& h0, double beta, int order);

// Same terms, kept as explicit polynomials in beta (exact expansion; the
// numeric-beta version above equals the evaluation of these).
std::vector<BetaPolynomial> nested_bracket_expansion(const PolynomialFamily& h0, int order);

// Compiled flat-array form for fast (batched) evaluation.
class Evaluator {
  public:
    Evaluator() = default;
    explicit Evaluator(const PhasePolynomial& p);

    double operator()(std::span<const double> z) const;
    void batch(std::span<const double> points, int stride, std::span<double> out) const;
    int variables() const { return nvars_; }

  private:
    int nvars_ = 0;
    std::vector<double> coeff_;
    std::vector<std::uint32_t> offset_;  // term t has factors [offset_[t], offset_[t+1])
    std::vector<VarPow> factors_;
};

// Accumulates s * grad(P)(z) into a caller-provided gradient, visiting each
// stored factor once (prefix/suffix products per term).
class GradientEvaluator {
  public:
    GradientEvaluator() = default;
    explicit GradientEvaluator(const PhasePolynomial& p);

    void accumulate(const double* z, double s, double* grad) const;
    int variables() const { return nvars_; }

  private:
    int nvars_ = 0;
    std::vector<double> coeff_;
    std::vector<std::uint32_t> offset_;
    std::vector<VarPow> factors_;
};

} // namespace acd
