#include "acd/phase_poly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <unordered_map>

namespace acd {

namespace {

double int_pow(double x, std::uint32_t e) {
    double r = 1.0;
    while (e) {
        if (e & 1u) r *= x;
        x *= x;
        e >>= 1;
    }
    return r;
}

struct ExpKey {
    std::vector<VarPow> vars;
    bool operator==(const ExpKey& o) const { return vars == o.vars; }
};

struct ExpKeyHash {
    std::size_t operator()(const ExpKey& k) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& v : k.vars) {
            h = (h ^ v.var) * 0x100000001b3ULL;
            h = (h ^ v.pow) * 0x100000001b3ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

std::vector<VarPow> merge_exponents(const std::vector<VarPow>& a, const std::vector<VarPow>& b) {
    std::vector<VarPow> out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].var < b[j].var) out.push_back(a[i++]);
        else if (b[j].var < a[i].var) out.push_back(b[j++]);
        else {
            out.push_back({a[i].var, a[i].pow + b[j].pow});
            ++i; ++j;
        }
    }
    for (; i < a.size(); ++i) out.push_back(a[i]);
    for (; j < b.size(); ++j) out.push_back(b[j]);
    return out;
}

} // namespace

bool exponents_less(const Monomial& a, const Monomial& b) {
    int da = a.degree(), db = b.degree();
    if (da != db) return da < db;
    std::size_t i = 0, j = 0;
    while (i < a.vars.size() && j < b.vars.size()) {
        // the term owning a power of the earlier variable sorts first
        if (a.vars[i].var != b.vars[j].var) return a.vars[i].var < b.vars[j].var;
        if (a.vars[i].pow != b.vars[j].pow) return a.vars[i].pow > b.vars[j].pow;
        ++i; ++j;
    }
    return i < a.vars.size();
}

PhasePolynomial PhasePolynomial::constant(int sites, double c) {
    PhasePolynomial p(sites);
    if (c != 0.0) p.terms_.push_back({c, {}});
    return p;
}

PhasePolynomial PhasePolynomial::variable(int sites, int var_index) {
    if (var_index < 0 || var_index >= 2 * sites)
        throw std::out_of_range("variable index out of range");
    PhasePolynomial p(sites);
    p.terms_.push_back({1.0, {{static_cast<std::uint32_t>(var_index), 1}}});
    return p;
}

PhasePolynomial PhasePolynomial::monomial(int sites, double coeff, std::vector<VarPow> vars) {
    std::vector<Monomial> t;
    t.push_back({coeff, std::move(vars)});
    std::sort(t[0].vars.begin(), t[0].vars.end(),
              [](const VarPow& a, const VarPow& b) { return a.var < b.var; });
    return from_terms(sites, std::move(t));
}

PhasePolynomial PhasePolynomial::from_terms(int sites, std::vector<Monomial> terms) {
    PhasePolynomial p(sites);
    for (auto& m : terms) {
        if (m.coeff == 0.0) continue;
        std::erase_if(m.vars, [](const VarPow& v) { return v.pow == 0; });
        for (const auto& v : m.vars)
            if (v.var >= static_cast<std::uint32_t>(2 * sites))
                throw std::out_of_range("monomial variable exceeds dimension");
    }
    std::erase_if(terms, [](const Monomial& m) { return m.coeff == 0.0; });
    std::sort(terms.begin(), terms.end(), exponents_less);
    // merge like terms
    for (auto& m : terms) {
        if (!p.terms_.empty() && p.terms_.back().vars == m.vars)
            p.terms_.back().coeff += m.coeff;
        else
            p.terms_.push_back(std::move(m));
    }
    std::erase_if(p.terms_, [](const Monomial& m) { return m.coeff == 0.0; });
    return p;
}

int PhasePolynomial::degree() const {
    int d = 0;
    for (const auto& m : terms_) d = std::max(d, m.degree());
    return d;
}

PhasePolynomial PhasePolynomial::operator+(const PhasePolynomial& rhs) const {
    if (sites_ != rhs.sites_)
        throw std::invalid_argument("polynomial dimension mismatch");
    PhasePolynomial out(sites_);
    out.terms_.reserve(terms_.size() + rhs.terms_.size());
    std::size_t i = 0, j = 0;
    auto push = [&out](const Monomial& m) {
        if (m.coeff != 0.0) out.terms_.push_back(m);
    };
    while (i < terms_.size() && j < rhs.terms_.size()) {
        if (terms_[i].vars == rhs.terms_[j].vars) {
            push({terms_[i].coeff + rhs.terms_[j].coeff, terms_[i].vars});
            ++i; ++j;
        } else if (exponents_less(terms_[i], rhs.terms_[j])) {
            push(terms_[i++]);
        } else {
            push(rhs.terms_[j++]);
        }
    }
    for (; i < terms_.size(); ++i) push(terms_[i]);
    for (; j < rhs.terms_.size(); ++j) push(rhs.terms_[j]);
    return out;
}

PhasePolynomial PhasePolynomial::operator-(const PhasePolynomial& rhs) const {
    return *this + rhs * -1.0;
}

PhasePolynomial PhasePolynomial::operator*(double s) const {
    PhasePolynomial out(sites_);
    if (s == 0.0) return out;
    out.terms_ = terms_;
    for (auto& m : out.terms_) m.coeff *= s;
    return out;
}

PhasePolynomial PhasePolynomial::operator*(const PhasePolynomial& rhs) const {
    if (sites_ != rhs.sites_)
        throw std::invalid_argument("polynomial dimension mismatch");
    std::unordered_map<ExpKey, double, ExpKeyHash> acc;
    acc.reserve(terms_.size() * rhs.terms_.size());
    for (const auto& a : terms_)
        for (const auto& b : rhs.terms_)
            acc[ExpKey{merge_exponents(a.vars, b.vars)}] += a.coeff * b.coeff;
    std::vector<Monomial> terms;
    terms.reserve(acc.size());
    for (auto& [k, c] : acc) terms.push_back({c, k.vars});
    return from_terms(sites_, std::move(terms));
}

bool PhasePolynomial::operator==(const PhasePolynomial& rhs) const {
    if (sites_ != rhs.sites_ || terms_.size() != rhs.terms_.size()) return false;
    for (std::size_t i = 0; i < terms_.size(); ++i)
        if (terms_[i].coeff != rhs.terms_[i].coeff || terms_[i].vars != rhs.terms_[i].vars)
            return false;
    return true;
}

double PhasePolynomial::max_coeff_distance(const PhasePolynomial& rhs) const {
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < terms_.size() || j < rhs.terms_.size()) {
        if (j >= rhs.terms_.size()) d = std::max(d, std::abs(terms_[i++].coeff));
        else if (i >= terms_.size()) d = std::max(d, std::abs(rhs.terms_[j++].coeff));
        else if (terms_[i].vars == rhs.terms_[j].vars) {
            d = std::max(d, std::abs(terms_[i].coeff - rhs.terms_[j].coeff));
            ++i; ++j;
        } else if (exponents_less(terms_[i], rhs.terms_[j])) {
            d = std::max(d, std::abs(terms_[i++].coeff));
        } else {
            d = std::max(d, std::abs(rhs.terms_[j++].coeff));
        }
    }
    return d;
}

PhasePolynomial PhasePolynomial::partial_derivative(int var_index) const {
    if (var_index < 0 || var_index >= 2 * sites_)
        throw std::out_of_range("derivative index out of range");
    const auto v = static_cast<std::uint32_t>(var_index);
    std::vector<Monomial> terms;
    for (const auto& m : terms_) {
        auto it = std::find_if(m.vars.begin(), m.vars.end(),
                               [v](const VarPow& f) { return f.var == v; });
        if (it == m.vars.end()) continue;
        Monomial d;
        d.coeff = m.coeff * static_cast<double>(it->pow);
        d.vars = m.vars;
        auto& f = d.vars[static_cast<std::size_t>(it - m.vars.begin())];
        f.pow -= 1;
        terms.push_back(std::move(d));
    }
    return from_terms(sites_, std::move(terms));
}

PhasePolynomial PhasePolynomial::pruned(double eps) const {
    PhasePolynomial out(sites_);
    out.terms_ = terms_;
    std::erase_if(out.terms_, [eps](const Monomial& m) { return std::abs(m.coeff) <= eps; });
    return out;
}

double PhasePolynomial::evaluate(std::span<const double> z) const {
    double sum = 0.0;
    for (const auto& m : terms_) {
        double t = m.coeff;
        for (const auto& f : m.vars) t *= int_pow(z[f.var], f.pow);
        sum += t;
    }
    return sum;
}

std::string PhasePolynomial::to_debug_string() const {
    if (terms_.empty()) return "0\n";
    std::string out;
    char buf[64];
    for (const auto& m : terms_) {
        std::snprintf(buf, sizeof(buf), "%.17g", m.coeff);
        out += buf;
        for (const auto& f : m.vars) {
            const bool is_p = f.var >= static_cast<std::uint32_t>(sites_);
            const unsigned idx = is_p ? f.var - sites_ + 1 : f.var + 1;
            std::snprintf(buf, sizeof(buf), " %c%u^%u", is_p ? 'p' : 'q', idx, f.pow);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

PhasePolynomial poisson_bracket(const PhasePolynomial& a, const PhasePolynomial& b) {
    if (a.sites() != b.sites())
        throw std::invalid_argument("polynomial dimension mismatch");
    const int n = a.sites();
    PhasePolynomial out(n);
    for (int i = 0; i < n; ++i) {
        const auto daq = a.partial_derivative(i);
        const auto dap = a.partial_derivative(n + i);
        if (daq.is_zero() && dap.is_zero()) continue;
        const auto dbp = b.partial_derivative(n + i);
        const auto dbq = b.partial_derivative(i);
        if (!daq.is_zero() && !dbp.is_zero()) out = out + daq * dbp;
        if (!dap.is_zero() && !dbq.is_zero()) out = out - dap * dbq;
    }
    // round-off dust after repeated bracketing
    return out.pruned(1e-14);
}

PhasePolynomial BetaPolynomial::at(double beta) const {
    if (coeff.empty()) return PhasePolynomial();
    PhasePolynomial out = coeff[0];
    double bm = 1.0;
    for (std::size_t m = 1; m < coeff.size(); ++m) {
        bm *= beta;
        out = out + bm * coeff[m];
    }
    return out;
}

std::vector<PhasePolynomial> nested_bracket_ansatz(const PolynomialFamily& h0, double beta, int order) {
    if (order < 1) throw std::invalid_argument("ansatz order must be >= 1");
    const PhasePolynomial h = h0.at(beta);
    std::vector<PhasePolynomial> terms;
    terms.reserve(static_cast<std::size_t>(order));
    // term k carries 2k-1 brackets and sign (-1)^k
    PhasePolynomial nested = h0.d_beta();
    for (int k = 1; k <= order; ++k) {
        const int brackets = (k == 1) ? 1 : 2;
        for (int b = 0; b < brackets; ++b) nested = poisson_bracket(h, nested);
        terms.push_back((k % 2 == 1 ? -1.0 : 1.0) * nested);
    }
    return terms;
}

std::vector<BetaPolynomial> nested_bracket_expansion(const PolynomialFamily& h0, int order) {
    if (order < 1) throw std::invalid_argument("ansatz order must be >= 1");
    // bracketing with H0 = B + beta*L maps coefficient m to
    // {B, y_m} + {L, y_{m-1}}
    auto bracket_h0 = [&h0](const BetaPolynomial& y) {
        BetaPolynomial out;
        out.coeff.resize(y.coeff.size() + 1, PhasePolynomial(h0.sites()));
        for (std::size_t m = 0; m < y.coeff.size(); ++m) {
            out.coeff[m] = out.coeff[m] + poisson_bracket(h0.base, y.coeff[m]);
            out.coeff[m + 1] = out.coeff[m + 1] + poisson_bracket(h0.linear_in_beta, y.coeff[m]);
        }
        while (out.coeff.size() > 1 && out.coeff.back().is_zero()) out.coeff.pop_back();
        return out;
    };

    std::vector<BetaPolynomial> terms;
    BetaPolynomial nested;
    nested.coeff = {h0.d_beta()};
    for (int k = 1; k <= order; ++k) {
        const int brackets = (k == 1) ? 1 : 2;
        for (int b = 0; b < brackets; ++b) nested = bracket_h0(nested);
        BetaPolynomial signed_term;
        const double sign = (k % 2 == 1) ? -1.0 : 1.0;
        for (const auto& c : nested.coeff) signed_term.coeff.push_back(sign * c);
        terms.push_back(std::move(signed_term));
    }
    return terms;
}

Evaluator::Evaluator(const PhasePolynomial& p) : nvars_(p.variables()) {
    offset_.push_back(0);
    for (const auto& m : p.terms()) {
        coeff_.push_back(m.coeff);
        for (const auto& f : m.vars) factors_.push_back(f);
        offset_.push_back(static_cast<std::uint32_t>(factors_.size()));
    }
}

double Evaluator::operator()(std::span<const double> z) const {
    double sum = 0.0;
    for (std::size_t t = 0; t + 1 < offset_.size(); ++t) {
        double v = coeff_[t];
        for (std::uint32_t f = offset_[t]; f < offset_[t + 1]; ++f)
            v *= int_pow(z[factors_[f].var], factors_[f].pow);
        sum += v;
    }
    return sum;
}

void Evaluator::batch(std::span<const double> points, int stride, std::span<double> out) const {
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i)
        out[i] = (*this)(points.subspan(i * static_cast<std::size_t>(stride),
                                        static_cast<std::size_t>(stride)));
}

GradientEvaluator::GradientEvaluator(const PhasePolynomial& p) : nvars_(p.variables()) {
    offset_.push_back(0);
    for (const auto& m : p.terms()) {
        if (m.vars.size() > 32)
            throw std::invalid_argument("monomial exceeds 32 distinct variables");
        coeff_.push_back(m.coeff);
        for (const auto& f : m.vars) factors_.push_back(f);
        offset_.push_back(static_cast<std::uint32_t>(factors_.size()));
    }
}

void GradientEvaluator::accumulate(const double* z, double s, double* grad) const {
    double fval[32], pre[32];
    for (std::size_t t = 0; t + 1 < offset_.size(); ++t) {
        const std::uint32_t f0 = offset_[t], f1 = offset_[t + 1];
        const std::uint32_t k = f1 - f0;
        // factor values and prefix products
        double run = 1.0;
        for (std::uint32_t i = 0; i < k; ++i) {
            pre[i] = run;
            fval[i] = int_pow(z[factors_[f0 + i].var], factors_[f0 + i].pow);
            run *= fval[i];
        }
        // suffix sweep: contribution to d/d(var_i) is
        //   coeff * pow_i * z_i^{pow_i-1} * (prefix_i * suffix_i)
        double suf = 1.0;
        const double cs = coeff_[t] * s;
        for (std::uint32_t i = k; i-- > 0;) {
            const auto& f = factors_[f0 + i];
            const double zi = z[f.var];
            const double dfac = static_cast<double>(f.pow) * int_pow(zi, f.pow - 1);
            grad[f.var] += cs * dfac * pre[i] * suf;
            suf *= fval[i];
        }
    }
}

std::pair<std::vector<Evaluator>, std::vector<Evaluator>>
PhasePolynomial::gradient_evaluators() const {
    std::vector<Evaluator> dq, dp;
    dq.reserve(static_cast<std::size_t>(sites_));
    dp.reserve(static_cast<std::size_t>(sites_));
    for (int i = 0; i < sites_; ++i) dq.emplace_back(partial_derivative(i));
    for (int i = 0; i < sites_; ++i) dp.emplace_back(partial_derivative(sites_ + i));
    return {std::move(dq), std::move(dp)};
}

Evaluator PhasePolynomial::compile() const { return Evaluator(*this); }

} // namespace acd
