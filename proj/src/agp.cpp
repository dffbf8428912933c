#include "acd/agp.hpp"

#include "acd/parallel.hpp"
#include "acd/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace acd {

double ActionQuadraticForm::value(const Eigen::VectorXd& gamma) const {
    return constant + linear.dot(gamma) + gamma.dot(quad * gamma);
}

MinimizeResult minimize(const ActionQuadraticForm& form) {
    MinimizeResult res;
    const int l = form.parameters();
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(form.quad);
    cod.setThreshold(1e-12);
    res.degenerate = cod.rank() < l;
    res.gamma = cod.solve(-0.5 * form.linear);
    res.action = form.value(res.gamma);
    return res;
}

Eigen::Vector2d minimize_two_parameter_closed_form(const ActionQuadraticForm& form) {
    if (form.parameters() != 2)
        throw std::invalid_argument("closed form requires exactly two parameters");
    const double den = form.a11() * form.a11() - 4.0 * form.a02() * form.a20();
    Eigen::Vector2d g;
    g(0) = (2.0 * form.a02() * form.a10() - form.a01() * form.a11()) / den;
    g(1) = (2.0 * form.a01() * form.a20() - form.a10() * form.a11()) / den;
    return g;
}

GTerms make_g_terms(const PolynomialFamily& h0, double beta,
                    const std::vector<PhasePolynomial>& ansatz_terms) {
    GTerms g;
    g.g00 = h0.d_beta();
    const PhasePolynomial h = h0.at(beta);
    g.gj.reserve(ansatz_terms.size());
    for (const auto& x : ansatz_terms) g.gj.push_back(-1.0 * poisson_bracket(x, h));
    return g;
}

namespace {

ActionQuadraticForm form_from_values(const std::vector<double>& weights,
                                     const std::vector<std::vector<double>>& values) {
    // values[i][m]: G_i at member m, i = 0 is G00
    const int l = static_cast<int>(values.size()) - 1;
    const std::size_t M = weights.size();
    std::vector<double> mean(values.size(), 0.0);
    for (std::size_t i = 0; i < values.size(); ++i)
        for (std::size_t m = 0; m < M; ++m) mean[i] += weights[m] * values[i][m];
    Eigen::MatrixXd cov(l + 1, l + 1);
    cov.setZero();
    for (int i = 0; i <= l; ++i)
        for (int j = i; j <= l; ++j) {
            double s = 0.0;
            const auto& vi = values[static_cast<std::size_t>(i)];
            const auto& vj = values[static_cast<std::size_t>(j)];
            for (std::size_t m = 0; m < M; ++m)
                s += weights[m] * (vi[m] - mean[static_cast<std::size_t>(i)]) *
                     (vj[m] - mean[static_cast<std::size_t>(j)]);
            cov(i, j) = cov(j, i) = s;
        }
    ActionQuadraticForm form;
    form.constant = cov(0, 0);
    form.linear = 2.0 * cov.block(0, 1, 1, l).transpose();
    form.quad = cov.block(1, 1, l, l);
    return form;
}

} // namespace

ActionQuadraticForm assemble_quadratic_form(const Ensemble& ensemble, const GTerms& g) {
    if (ensemble.size() < 1) throw std::invalid_argument("empty ensemble");
    std::vector<std::vector<double>> values;
    values.reserve(g.gj.size() + 1);
    auto eval_all = [&ensemble](const PhasePolynomial& poly) {
        Evaluator ev(poly);
        std::vector<double> v(static_cast<std::size_t>(ensemble.size()));
        for (int m = 0; m < ensemble.size(); ++m) v[static_cast<std::size_t>(m)] = ev(ensemble.member(m));
        return v;
    };
    values.push_back(eval_all(g.g00));
    for (const auto& gj : g.gj) values.push_back(eval_all(gj));
    return form_from_values(ensemble.weights, values);
}

ActionQuadraticForm assemble_quadratic_form(const Ensemble& ensemble, const PolynomialFamily& h0,
                                            double beta,
                                            const std::vector<PhasePolynomial>& terms) {
    if (terms.empty()) throw std::invalid_argument("ansatz term list is empty");
    return assemble_quadratic_form(ensemble, make_g_terms(h0, beta, terms));
}

AnsatzKind default_ansatz(const SystemSpec& spec) {
    return spec.kind == SystemKind::AnharmonicOscillator ? AnsatzKind::OscillatorFixed
                                                         : AnsatzKind::NestedBracket;
}

std::string ansatz_name(AnsatzKind kind) {
    return kind == AnsatzKind::NestedBracket ? "nested-bracket" : "oscillator-fixed";
}

AnsatzKind ansatz_from_name(const std::string& name) {
    if (name == "nested-bracket") return AnsatzKind::NestedBracket;
    if (name == "oscillator-fixed") return AnsatzKind::OscillatorFixed;
    throw std::invalid_argument("unknown ansatz kind: " + name);
}

std::vector<BetaPolynomial> ansatz_terms(const PolynomialFamily& h0, AnsatzKind kind, int order) {
    if (order < 1) throw std::invalid_argument("ansatz order must be >= 1");
    if (kind == AnsatzKind::NestedBracket) return nested_bracket_expansion(h0, order);
    if (h0.sites() != 1)
        throw std::invalid_argument("the fixed {x^3 p, x p^3} basis is oscillator-specific");
    if (order > 2)
        throw std::invalid_argument("the fixed oscillator basis has two terms");
    std::vector<BetaPolynomial> terms;
    BetaPolynomial x3p;
    x3p.coeff = {PhasePolynomial::monomial(1, 1.0, {{0, 3}, {1, 1}})};
    terms.push_back(std::move(x3p));
    if (order == 2) {
        BetaPolynomial xp3;
        xp3.coeff = {PhasePolynomial::monomial(1, 1.0, {{0, 1}, {1, 3}})};
        terms.push_back(std::move(xp3));
    }
    return terms;
}

double CoefficientFit::rational(double beta) const {
    double n = 0.0, bp = 1.0;
    for (double b : num) {
        n += b * bp;
        bp *= beta;
    }
    double d = 1.0;
    bp = beta;
    for (double c : den) {
        d += c * bp;
        bp *= beta;
    }
    return n / d;
}

double CoefficientFit::interpolated(double beta) const {
    const auto& t = raw_table;
    if (t.empty()) throw std::logic_error("coefficient fit has no raw table");
    if (t.size() == 1) return t[0].second;
    beta = std::clamp(beta, t.front().first, t.back().first);
    std::size_t hi = 1;
    while (hi + 1 < t.size() && t[hi].first < beta) ++hi;
    const std::size_t lo = hi - 1;
    const double h = t[hi].first - t[lo].first;
    const double s = (beta - t[lo].first) / h;
    auto slope = [&t](std::size_t i) {
        if (i == 0) return (t[1].second - t[0].second) / (t[1].first - t[0].first);
        if (i + 1 == t.size())
            return (t[i].second - t[i - 1].second) / (t[i].first - t[i - 1].first);
        return (t[i + 1].second - t[i - 1].second) / (t[i + 1].first - t[i - 1].first);
    };
    const double y0 = t[lo].second, y1 = t[hi].second;
    const double m0 = slope(lo) * h, m1 = slope(hi) * h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * y1 +
           (s3 - s2) * m1;
}

namespace {

// sum of squared residuals after projecting out the (linear) numerator
double varpro_solve(const std::vector<std::pair<double, double>>& table, int m,
                    const Eigen::VectorXd& c, Eigen::VectorXd& b) {
    const int K = static_cast<int>(table.size());
    Eigen::MatrixXd design(K, m + 1);
    Eigen::VectorXd y(K);
    for (int k = 0; k < K; ++k) {
        const double beta = table[static_cast<std::size_t>(k)].first;
        double den = 1.0, bp = beta;
        for (int i = 0; i < c.size(); ++i) {
            den += c(i) * bp;
            bp *= beta;
        }
        double num_basis = 1.0;
        for (int j = 0; j <= m; ++j) {
            design(k, j) = num_basis / den;
            num_basis *= beta;
        }
        y(k) = table[static_cast<std::size_t>(k)].second;
    }
    b = design.colPivHouseholderQr().solve(y);
    return (design * b - y).squaredNorm();
}

// Nelder-Mead on R^n; used on the square-rooted denominator coefficients.
Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                            Eigen::VectorXd start, double scale, int max_iter) {
    const int n = static_cast<int>(start.size());
    std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1), start);
    std::vector<double> fv(static_cast<std::size_t>(n + 1));
    for (int i = 0; i < n; ++i) pts[static_cast<std::size_t>(i + 1)](i) += scale;
    for (std::size_t i = 0; i < pts.size(); ++i) fv[i] = f(pts[i]);

    auto order = [&] {
        std::vector<std::size_t> idx(pts.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::vector<Eigen::VectorXd> p2;
        std::vector<double> f2;
        for (auto i : idx) {
            p2.push_back(pts[i]);
            f2.push_back(fv[i]);
        }
        pts = std::move(p2);
        fv = std::move(f2);
    };

    for (int it = 0; it < max_iter; ++it) {
        order();
        if (std::abs(fv.back() - fv.front()) <= 1e-15 * (1.0 + std::abs(fv.front()))) break;
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i <= n - 1; ++i) centroid += pts[static_cast<std::size_t>(i)];
        centroid /= n;
        const Eigen::VectorXd& worst = pts.back();
        Eigen::VectorXd refl = centroid + (centroid - worst);
        const double fr = f(refl);
        if (fr < fv.front()) {
            Eigen::VectorXd exp2 = centroid + 2.0 * (centroid - worst);
            const double fe = f(exp2);
            if (fe < fr) {
                pts.back() = exp2;
                fv.back() = fe;
            } else {
                pts.back() = refl;
                fv.back() = fr;
            }
        } else if (fr < fv[static_cast<std::size_t>(n - 1)]) {
            pts.back() = refl;
            fv.back() = fr;
        } else {
            Eigen::VectorXd con = centroid + 0.5 * (worst - centroid);
            const double fc = f(con);
            if (fc < fv.back()) {
                pts.back() = con;
                fv.back() = fc;
            } else {
                for (std::size_t i = 1; i < pts.size(); ++i) {
                    pts[i] = pts.front() + 0.5 * (pts[i] - pts.front());
                    fv[i] = f(pts[i]);
                }
            }
        }
    }
    order();
    return pts.front();
}

} // namespace

CoefficientFit fit_rational(const std::vector<std::pair<double, double>>& table, int num_degree,
                            int den_degree, double residual_gate) {
    if (static_cast<int>(table.size()) < num_degree + den_degree + 2)
        throw std::invalid_argument("rational fit needs at least m+n+2 table points");

    const int m = num_degree, n = den_degree;
    auto objective = [&table, m](const Eigen::VectorXd& u) {
        Eigen::VectorXd c = u.array().square();
        Eigen::VectorXd b;
        return varpro_solve(table, m, c, b);
    };

    // candidate starts: plain polynomial (c = 0), the linearized rational fit,
    // and a mild uniform denominator
    std::vector<Eigen::VectorXd> starts;
    starts.push_back(Eigen::VectorXd::Zero(n));
    {
        const int K = static_cast<int>(table.size());
        Eigen::MatrixXd design(K, m + 1 + n);
        Eigen::VectorXd y(K);
        for (int k = 0; k < K; ++k) {
            const double beta = table[static_cast<std::size_t>(k)].first;
            const double gamma = table[static_cast<std::size_t>(k)].second;
            double bp = 1.0;
            for (int j = 0; j <= m; ++j) {
                design(k, j) = bp;
                bp *= beta;
            }
            bp = beta;
            for (int i = 0; i < n; ++i) {
                design(k, m + 1 + i) = -gamma * bp;
                bp *= beta;
            }
            y(k) = gamma;
        }
        Eigen::VectorXd sol = design.colPivHouseholderQr().solve(y);
        Eigen::VectorXd c0 = sol.tail(n).cwiseMax(0.0);
        starts.push_back(c0.array().sqrt());
    }
    starts.push_back(Eigen::VectorXd::Constant(n, 0.7));

    double best_obj = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_c = Eigen::VectorXd::Zero(n);
    for (const auto& s : starts) {
        Eigen::VectorXd u = nelder_mead(objective, s, 0.3, 600 * n);
        Eigen::VectorXd c = u.array().square();
        Eigen::VectorXd b;
        const double obj = varpro_solve(table, m, c, b);
        const bool better = obj < best_obj * (1.0 - 1e-12) ||
                            (obj <= best_obj * (1.0 + 1e-12) && c.norm() < best_c.norm());
        if (better) {
            best_obj = obj;
            best_c = c;
        }
    }

    CoefficientFit fit;
    Eigen::VectorXd b;
    varpro_solve(table, m, best_c, b);
    fit.num.assign(b.data(), b.data() + b.size());
    fit.den.assign(best_c.data(), best_c.data() + best_c.size());
    fit.raw_table = table;

    double max_gamma = 0.0, max_err = 0.0;
    for (const auto& [beta, gamma] : table) {
        max_gamma = std::max(max_gamma, std::abs(gamma));
        max_err = std::max(max_err, std::abs(gamma - fit.rational(beta)));
    }
    fit.residual = max_err;
    fit.use_fit = max_err <= residual_gate * std::max(max_gamma, 1e-300);
    return fit;
}

namespace {

// G_j(beta) = -{X_j(beta), H0(beta)} expanded in powers of beta.
std::vector<BetaPolynomial> g_expansion(const PolynomialFamily& h0,
                                        const std::vector<BetaPolynomial>& terms) {
    std::vector<BetaPolynomial> g;
    g.reserve(terms.size());
    for (const auto& x : terms) {
        BetaPolynomial out;
        out.coeff.resize(x.coeff.size() + 1, PhasePolynomial(h0.sites()));
        for (std::size_t a = 0; a < x.coeff.size(); ++a) {
            out.coeff[a] = out.coeff[a] - poisson_bracket(x.coeff[a], h0.base);
            out.coeff[a + 1] = out.coeff[a + 1] - poisson_bracket(x.coeff[a], h0.linear_in_beta);
        }
        while (out.coeff.size() > 1 && out.coeff.back().is_zero()) out.coeff.pop_back();
        g.push_back(std::move(out));
    }
    return g;
}

struct CompiledBetaPoly {
    std::vector<Evaluator> comp;

    explicit CompiledBetaPoly(const BetaPolynomial& p) {
        for (const auto& c : p.coeff) comp.emplace_back(c);
    }
    double eval(double beta, std::span<const double> z) const {
        double sum = 0.0, bp = 1.0;
        for (const auto& ev : comp) {
            sum += bp * ev(z);
            bp *= beta;
        }
        return sum;
    }
};

} // namespace

OptimizeResult optimize_gamma_table(const SystemSpec& spec, int k, double E0,
                                    const OptimizeSettings& settings) {
    const auto h0 = build_hamiltonian(spec);
    const AnsatzKind kind = settings.ansatz.value_or(default_ansatz(spec));
    const auto terms = ansatz_terms(h0, kind, settings.ansatz_order);
    const auto gj = g_expansion(h0, terms);

    std::vector<CompiledBetaPoly> gj_eval;
    gj_eval.reserve(gj.size());
    for (const auto& g : gj) gj_eval.emplace_back(g);
    const Evaluator g00_eval(h0.d_beta());

    if (settings.beta_grid_size < 2) throw std::invalid_argument("beta grid needs >= 2 points");
    std::vector<double> grid(static_cast<std::size_t>(settings.beta_grid_size));
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = static_cast<double>(i) / (grid.size() - 1);

    const double tau_ref =
        settings.tau_ref > 0.0
            ? settings.tau_ref
            : (spec.kind == SystemKind::AnharmonicOscillator ? 2000.0 : 5000.0);

    auto realizations = settings.d_E > 0.0
                            ? gaussian_energy_realizations(E0, settings.d_E, settings.realizations)
                            : std::vector<EnergyRealization>{{E0, 1.0}};

    IntegratorConfig ref_cfg;
    ref_cfg.step = settings.ref_step;
    ref_cfg.threads = settings.threads;

    // adiabatic snapshots per energy realization
    std::vector<std::vector<Ensemble>> snapshots;
    snapshots.reserve(realizations.size());
    for (std::size_t r = 0; r < realizations.size(); ++r) {
        const auto sub_seed = derive_seed(settings.seed, /*stream=*/3, r);
        Ensemble init =
            initial_ensemble(spec, k, realizations[r].E0, settings.ensemble_size, sub_seed);
        snapshots.push_back(adiabatic_reference_trajectory(spec, init, tau_ref, grid, ref_cfg));
    }

    const int l = static_cast<int>(terms.size());
    OptimizeResult result;
    result.realizations = realizations;
    result.tables.beta = grid;
    result.tables.gamma.assign(static_cast<std::size_t>(l),
                               std::vector<double>(grid.size(), 0.0));
    result.tables.min_action.assign(grid.size(), 0.0);
    result.tables.action_at_zero.assign(grid.size(), 0.0);
    result.tables.degenerate.assign(grid.size(), false);

    parallel_for(grid.size(), settings.threads, [&](std::size_t gi) {
        const double beta = grid[gi];
        ActionQuadraticForm total;
        total.constant = 0.0;
        total.linear = Eigen::VectorXd::Zero(l);
        total.quad = Eigen::MatrixXd::Zero(l, l);
        for (std::size_t r = 0; r < realizations.size(); ++r) {
            const Ensemble& ens = snapshots[r][gi];
            std::vector<std::vector<double>> values(
                static_cast<std::size_t>(l) + 1,
                std::vector<double>(static_cast<std::size_t>(ens.size())));
            for (int mbr = 0; mbr < ens.size(); ++mbr) {
                const auto z = ens.member(mbr);
                values[0][static_cast<std::size_t>(mbr)] = g00_eval(z);
                for (int j = 0; j < l; ++j)
                    values[static_cast<std::size_t>(j) + 1][static_cast<std::size_t>(mbr)] =
                        gj_eval[static_cast<std::size_t>(j)].eval(beta, z);
            }
            ActionQuadraticForm form = form_from_values(ens.weights, values);
            const double w = realizations[r].weight;
            total.constant += w * form.constant;
            total.linear += w * form.linear;
            total.quad += w * form.quad;
        }
        MinimizeResult mr = minimize(total);
        for (int j = 0; j < l; ++j)
            result.tables.gamma[static_cast<std::size_t>(j)][gi] = mr.gamma(j);
        result.tables.min_action[gi] = mr.action;
        result.tables.action_at_zero[gi] = total.constant;
        result.tables.degenerate[gi] = mr.degenerate;
    });

    for (int j = 0; j < l; ++j) {
        std::vector<std::pair<double, double>> table(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
            table[i] = {grid[i], result.tables.gamma[static_cast<std::size_t>(j)][i]};
        result.fits.push_back(fit_rational(table, settings.fit_num_degree,
                                           settings.fit_den_degree,
                                           settings.fit_residual_gate));
    }
    return result;
}

CoefficientFile make_coefficient_file(const SystemSpec& spec, int k, double E0,
                                      const OptimizeSettings& settings,
                                      const OptimizeResult& result) {
    CoefficientFile file;
    file.system = spec;
    file.k = k;
    file.E0 = E0;
    file.d_E = settings.d_E;
    file.ansatz_order = settings.ansatz_order;
    file.ansatz = settings.ansatz.value_or(default_ansatz(spec));
    file.seed = settings.seed;
    file.beta_grid = result.tables.beta;
    file.fits = result.fits;
    return file;
}

std::string coefficient_file_to_json(const CoefficientFile& file) {
    nlohmann::ordered_json j;
    j["system"] = file.system.name();
    j["N"] = file.system.sites;
    j["k"] = file.k;
    j["E0"] = file.E0;
    j["d_E"] = file.d_E;
    j["ansatz_order"] = file.ansatz_order;
    j["ansatz"] = ansatz_name(file.ansatz);
    j["seed"] = file.seed;
    j["beta_grid"] = file.beta_grid;
    j["coefficients"] = nlohmann::ordered_json::array();
    for (const auto& fit : file.fits) {
        nlohmann::ordered_json c;
        c["b"] = fit.num;
        c["c"] = fit.den;
        c["residual"] = fit.residual;
        c["use_fit"] = fit.use_fit;
        auto rt = nlohmann::ordered_json::array();
        for (const auto& [beta, gamma] : fit.raw_table) rt.push_back({beta, gamma});
        c["raw_table"] = rt;
        j["coefficients"].push_back(c);
    }
    return j.dump(2) + "\n";
}

CoefficientFile coefficient_file_from_json(const std::string& json_text) {
    const auto j = nlohmann::json::parse(json_text);
    CoefficientFile file;
    const std::string system = j.at("system").get<std::string>();
    const int sites = j.at("N").get<int>();
    file.system = system == "oscillator" ? SystemSpec::oscillator() : SystemSpec::fput(sites);
    file.k = j.at("k").get<int>();
    file.E0 = j.at("E0").get<double>();
    file.d_E = j.at("d_E").get<double>();
    file.ansatz_order = j.at("ansatz_order").get<int>();
    file.ansatz = ansatz_from_name(j.at("ansatz").get<std::string>());
    file.seed = j.at("seed").get<std::uint64_t>();
    file.beta_grid = j.at("beta_grid").get<std::vector<double>>();
    for (const auto& c : j.at("coefficients")) {
        CoefficientFit fit;
        fit.num = c.at("b").get<std::vector<double>>();
        fit.den = c.at("c").get<std::vector<double>>();
        fit.residual = c.at("residual").get<double>();
        fit.use_fit = c.at("use_fit").get<bool>();
        for (const auto& row : c.at("raw_table"))
            fit.raw_table.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
        for (double cd : fit.den)
            if (cd < 0) throw std::invalid_argument("denominator coefficients must be >= 0");
        file.fits.push_back(std::move(fit));
    }
    return file;
}

void write_coefficient_file(const std::string& path, const CoefficientFile& file) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << coefficient_file_to_json(file);
}

CoefficientFile read_coefficient_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open coefficient file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return coefficient_file_from_json(ss.str());
}

DriveSpec make_drive(const CoefficientFile& file, double delta) {
    DriveSpec drive;
    drive.system = file.system;
    const auto h0 = build_hamiltonian(file.system);
    drive.terms = ansatz_terms(h0, file.ansatz, file.ansatz_order);
    if (drive.terms.size() != file.fits.size())
        throw std::invalid_argument("coefficient file does not match ansatz order");
    for (auto fit : file.fits) {
        if (delta != 0.0) {
            if (!fit.use_fit)
                throw std::invalid_argument(
                    "delta perturbation requires an accepted rational fit");
            if (fit.num.size() > 1) fit.num[1] *= (1.0 + delta);
        }
        drive.gamma.push_back([fit](double beta) { return fit(beta); });
    }
    return drive;
}

} // namespace acd
