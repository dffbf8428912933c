#include "acd/agp.hpp"

#include "acd/fom.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <stdexcept>

using namespace acd;
using namespace acd::testutil;

namespace {

ActionQuadraticForm shell_form(double E0, int M, int order, double beta = 0.0) {
    const auto spec = SystemSpec::oscillator();
    const auto h0 = build_hamiltonian(spec);
    const auto terms_beta = ansatz_terms(h0, AnsatzKind::OscillatorFixed, order);
    std::vector<PhasePolynomial> terms;
    for (const auto& t : terms_beta) terms.push_back(t.at(beta));
    const auto ensemble = oscillator_shell_ensemble(E0, M, 42);
    return assemble_quadratic_form(ensemble, h0, beta, terms);
}

// brute-force minimization over a refining grid; independent of the solver
Eigen::Vector2d grid_search_minimum(const ActionQuadraticForm& form, double half_width) {
    Eigen::Vector2d best(0.0, 0.0);
    double center1 = 0.0, center2 = 0.0, w = half_width;
    for (int level = 0; level < 12; ++level) {
        double best_val = std::numeric_limits<double>::infinity();
        for (int i = -10; i <= 10; ++i)
            for (int j = -10; j <= 10; ++j) {
                Eigen::Vector2d g(center1 + w * i / 10.0, center2 + w * j / 10.0);
                const double v = form.value(g);
                if (v < best_val) {
                    best_val = v;
                    best = g;
                }
            }
        center1 = best(0);
        center2 = best(1);
        w /= 5.0;
    }
    return best;
}

} // namespace

TEST_SUITE_BEGIN("agp");

TEST_CASE("single-member ensembles carry no action") {
    const auto spec = SystemSpec::oscillator();
    const auto h0 = build_hamiltonian(spec);
    const auto terms_beta = ansatz_terms(h0, AnsatzKind::OscillatorFixed, 2);
    std::vector<PhasePolynomial> terms;
    for (const auto& t : terms_beta) terms.push_back(t.at(0.0));
    const auto ensemble = oscillator_shell_ensemble(1.0, 1, 3);
    const auto form = assemble_quadratic_form(ensemble, h0, 0.0, terms);
    CHECK(form.constant == doctest::Approx(0.0));
    CHECK(form.linear.norm() == doctest::Approx(0.0));
    CHECK(form.quad.norm() == doctest::Approx(0.0));
}

TEST_CASE("harmonic-limit AGP on the microcanonical shell") {
    const auto form = shell_form(1.0, 128, 2);
    const auto res = minimize(form);

    // exact harmonic-limit coefficients
    CHECK(res.gamma(0) == doctest::Approx(-5.0 / 32).epsilon(1e-10));
    CHECK(res.gamma(1) == doctest::Approx(-3.0 / 32).epsilon(1e-10));
    CHECK(res.action < 1e-10);
    CHECK_FALSE(res.degenerate);

    // grid-search oracle lands on the same point
    const auto oracle = grid_search_minimum(form, 1.0);
    CHECK(oracle(0) == doctest::Approx(res.gamma(0)).epsilon(1e-5));
    CHECK(oracle(1) == doctest::Approx(res.gamma(1)).epsilon(1e-5));

    // constancy oracle: at the minimizer, G is constant on the shell
    const auto h0 = build_hamiltonian(SystemSpec::oscillator());
    const auto terms_beta = ansatz_terms(h0, AnsatzKind::OscillatorFixed, 2);
    std::vector<PhasePolynomial> terms;
    for (const auto& t : terms_beta) terms.push_back(t.at(0.0));
    const auto g = make_g_terms(h0, 0.0, terms);
    const PhasePolynomial g_at_min =
        g.g00 + res.gamma(0) * g.gj[0] + res.gamma(1) * g.gj[1];
    const auto ev = g_at_min.compile();
    const auto shell = oscillator_shell_ensemble(1.0, 256, 7);
    double lo = 1e300, hi = -1e300;
    for (int m = 0; m < shell.size(); ++m) {
        const double v = ev(shell.member(m));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(hi - lo < 1e-10);
    CHECK(hi == doctest::Approx(3.0 / 8).epsilon(1e-10));  // residual constant
}

TEST_CASE("poisson-bracket identity of the G terms") {
    const auto h0 = build_hamiltonian(SystemSpec::fput(2));
    const auto terms_beta = ansatz_terms(h0, AnsatzKind::NestedBracket, 2);
    for (double beta : {0.0, 0.6}) {
        std::vector<PhasePolynomial> terms;
        for (const auto& t : terms_beta) terms.push_back(t.at(beta));
        const auto g = make_g_terms(h0, beta, terms);
        for (std::size_t j = 0; j < terms.size(); ++j) {
            const auto should_vanish =
                g.gj[j] + poisson_bracket(terms[j], h0.at(beta));
            CHECK(should_vanish.pruned(1e-12).is_zero());
        }
    }
}

TEST_CASE("minimize") {
    SUBCASE("hand example against grid search") {
        ActionQuadraticForm form;
        form.constant = 1.0;
        form.linear = Eigen::Vector2d(-2.0, 0.0);
        form.quad = Eigen::Matrix2d::Identity();
        const auto res = minimize(form);
        CHECK(res.gamma(0) == doctest::Approx(1.0));
        CHECK(res.gamma(1) == doctest::Approx(0.0));
        const auto oracle = grid_search_minimum(form, 3.0);
        CHECK(oracle(0) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(oracle(1) == doctest::Approx(0.0).epsilon(1e-6));
    }

    SUBCASE("no linear term puts the minimum at the origin") {
        ActionQuadraticForm form;
        form.constant = 0.3;
        form.linear = Eigen::Vector2d::Zero();
        form.quad = Eigen::Matrix2d::Identity() * 2.0;
        CHECK(minimize(form).gamma.norm() == doctest::Approx(0.0));
    }

    SUBCASE("closed form equals the linear solve on random SPD forms") {
        std::mt19937_64 rng(41);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int rep = 0; rep < 50; ++rep) {
            Eigen::Matrix2d m;
            m << u(rng), u(rng), u(rng), u(rng);
            ActionQuadraticForm form;
            form.constant = u(rng);
            form.linear = Eigen::Vector2d(u(rng), u(rng));
            form.quad = m * m.transpose() + 0.05 * Eigen::Matrix2d::Identity();
            const auto res = minimize(form);
            const auto closed = minimize_two_parameter_closed_form(form);
            CHECK(res.gamma(0) == doctest::Approx(closed(0)).epsilon(1e-12));
            CHECK(res.gamma(1) == doctest::Approx(closed(1)).epsilon(1e-12));
        }
    }

    SUBCASE("singular forms fall back to the minimum-norm solution") {
        ActionQuadraticForm form;
        form.constant = 1.0;
        form.linear = Eigen::Vector2d(-2.0, -2.0);
        form.quad = Eigen::Matrix2d::Ones();  // rank 1
        const auto res = minimize(form);
        CHECK(res.degenerate);
        // gamma1 + gamma2 = 1 is the stationary set; minimum norm picks (1/2, 1/2)
        CHECK(res.gamma(0) == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(res.gamma(1) == doctest::Approx(0.5).epsilon(1e-10));
    }
}

TEST_CASE("variational structure of the minimized action") {
    const auto form1 = shell_form(1.0, 96, 1, 0.35);
    const auto form2 = shell_form(1.0, 96, 2, 0.35);
    const auto res1 = minimize(form1);
    const auto res2 = minimize(form2);

    // never worse than the bare protocol, and nested in the ansatz order
    CHECK(res1.action <= form1.constant);
    CHECK(res2.action <= res1.action + 1e-15);

    SUBCASE("scale covariance: rescaling a term rescales its coefficient") {
        const auto h0 = build_hamiltonian(SystemSpec::oscillator());
        const auto terms_beta = ansatz_terms(h0, AnsatzKind::OscillatorFixed, 2);
        std::vector<PhasePolynomial> terms, scaled;
        for (const auto& t : terms_beta) {
            terms.push_back(t.at(0.35));
            scaled.push_back(3.0 * t.at(0.35));
        }
        const auto ensemble = oscillator_shell_ensemble(1.0, 96, 42);
        const auto a = minimize(assemble_quadratic_form(ensemble, h0, 0.35, terms));
        const auto b = minimize(assemble_quadratic_form(ensemble, h0, 0.35, scaled));
        CHECK(b.gamma(0) == doctest::Approx(a.gamma(0) / 3.0).epsilon(1e-10));
        CHECK(b.gamma(1) == doctest::Approx(a.gamma(1) / 3.0).epsilon(1e-10));
        CHECK(b.action == doctest::Approx(a.action).epsilon(1e-10));
    }
}

TEST_CASE("rational coefficient fits") {
    SUBCASE("constant table") {
        std::vector<std::pair<double, double>> table;
        for (int i = 0; i <= 20; ++i) table.emplace_back(i / 20.0, 0.7);
        const auto fit = fit_rational(table, 3, 3);
        CHECK(fit.num[0] == doctest::Approx(0.7).epsilon(1e-9));
        for (std::size_t i = 1; i < fit.num.size(); ++i)
            CHECK(fit.num[i] == doctest::Approx(0.0).epsilon(1e-7));
        for (double c : fit.den) CHECK(c == doctest::Approx(0.0).epsilon(1e-7));
        CHECK(fit.use_fit);
        CHECK(fit.residual < 1e-9);
    }

    SUBCASE("round trip of a known rational with non-negative denominator") {
        const std::vector<double> b{-0.15, 0.3, -0.2, 0.05};
        const std::vector<double> c{0.8, 0.1, 0.4};
        auto truth = [&](double beta) {
            const double num = b[0] + beta * (b[1] + beta * (b[2] + beta * b[3]));
            const double den = 1 + beta * (c[0] + beta * (c[1] + beta * c[2]));
            return num / den;
        };
        std::vector<std::pair<double, double>> table;
        for (int i = 0; i <= 40; ++i) table.emplace_back(i / 40.0, truth(i / 40.0));
        const auto fit = fit_rational(table, 3, 3);
        CHECK(fit.use_fit);
        for (int i = 0; i <= 100; ++i) {
            const double beta = i / 100.0;
            CHECK(fit.rational(beta) == doctest::Approx(truth(beta)).epsilon(1e-6));
        }
    }

    SUBCASE("negative-denominator ground truth keeps the constraint active") {
        auto truth = [](double beta) { return 1.0 / (1.0 - 0.9 * beta); };
        std::vector<std::pair<double, double>> table;
        for (int i = 0; i <= 40; ++i) table.emplace_back(i / 40.0, truth(i / 40.0));
        const auto fit = fit_rational(table, 1, 1, /*residual_gate=*/1e-9);
        for (double c : fit.den) CHECK(c >= 0.0);
        CHECK(fit.residual > 1e-6);
        CHECK_FALSE(fit.use_fit);
        // the raw-table fallback still reproduces the data
        CHECK(fit(0.5) == doctest::Approx(truth(0.5)).epsilon(1e-4));
    }

    SUBCASE("too few points") {
        std::vector<std::pair<double, double>> table{{0.0, 1.0}, {0.5, 1.0}, {1.0, 1.0}};
        CHECK_THROWS_AS(fit_rational(table, 3, 3), std::invalid_argument);
    }

    SUBCASE("denominator never vanishes on [0,1]") {
        std::vector<std::pair<double, double>> table;
        for (int i = 0; i <= 30; ++i)
            table.emplace_back(i / 30.0, std::sin(2.5 * i / 30.0) - 0.4);
        const auto fit = fit_rational(table, 3, 3);
        for (int i = 0; i <= 200; ++i)
            CHECK(std::isfinite(fit.rational(i / 200.0)));
    }
}

TEST_CASE("optimize pipeline on the oscillator") {
    OptimizeSettings settings;
    settings.ansatz_order = 2;
    settings.beta_grid_size = 11;
    settings.tau_ref = 60.0;  // short test ramp; the beta=0 point needs none
    settings.ref_step = 0.01;
    settings.ensemble_size = 64;
    settings.seed = 9;
    const auto spec = SystemSpec::oscillator();
    const auto res = optimize_gamma_table(spec, 1, 1.0, settings);

    REQUIRE(res.tables.gamma.size() == 2);
    CHECK(res.tables.gamma[0][0] == doctest::Approx(-5.0 / 32).epsilon(1e-8));
    CHECK(res.tables.gamma[1][0] == doctest::Approx(-3.0 / 32).epsilon(1e-8));
    CHECK(res.tables.min_action[0] < 1e-10);

    SUBCASE("minimized action never exceeds the bare action") {
        for (std::size_t g = 0; g < res.tables.beta.size(); ++g)
            CHECK(res.tables.min_action[g] <= res.tables.action_at_zero[g] * (1 + 1e-12));
    }

    SUBCASE("d_E = 0 equals a single explicit realization") {
        OptimizeSettings s2 = settings;
        s2.realizations = 17;  // ignored at d_E = 0
        const auto res2 = optimize_gamma_table(spec, 1, 1.0, s2);
        CHECK(res2.tables.gamma[0] == res.tables.gamma[0]);
        CHECK(res2.tables.gamma[1] == res.tables.gamma[1]);
    }

    SUBCASE("fits reproduce the tables within the reported residual") {
        for (std::size_t j = 0; j < res.fits.size(); ++j) {
            const auto& fit = res.fits[j];
            for (std::size_t g = 0; g < res.tables.beta.size(); ++g) {
                const double err = std::abs(fit.rational(res.tables.beta[g]) -
                                            res.tables.gamma[j][g]);
                CHECK(err <= fit.residual * (1 + 1e-9) + 1e-14);
            }
        }
    }
}

TEST_CASE("order-2 action is nested below order-1 across the grid") {
    OptimizeSettings settings;
    settings.beta_grid_size = 9;
    settings.tau_ref = 60.0;
    settings.ensemble_size = 48;
    settings.seed = 4;
    const auto spec = SystemSpec::oscillator();
    OptimizeSettings s1 = settings;
    s1.ansatz_order = 1;
    OptimizeSettings s2 = settings;
    s2.ansatz_order = 2;
    const auto r1 = optimize_gamma_table(spec, 1, 1.0, s1);
    const auto r2 = optimize_gamma_table(spec, 1, 1.0, s2);
    for (std::size_t g = 0; g < r1.tables.beta.size(); ++g)
        CHECK(r2.tables.min_action[g] <= r1.tables.min_action[g] * (1 + 1e-12));
}

TEST_CASE("coefficient file round trip") {
    OptimizeSettings settings;
    settings.ansatz_order = 2;
    settings.beta_grid_size = 11;
    settings.tau_ref = 40.0;
    settings.ensemble_size = 32;
    settings.seed = 77;
    const auto spec = SystemSpec::oscillator();
    const auto res = optimize_gamma_table(spec, 1, 1.0, settings);
    const auto file = make_coefficient_file(spec, 1, 1.0, settings, res);

    const std::string text = coefficient_file_to_json(file);
    const auto parsed = coefficient_file_from_json(text);
    CHECK(parsed.system.kind == file.system.kind);
    CHECK(parsed.ansatz_order == 2);
    CHECK(parsed.seed == 77);
    REQUIRE(parsed.fits.size() == 2);
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(parsed.fits[j].num == file.fits[j].num);
        CHECK(parsed.fits[j].den == file.fits[j].den);
        CHECK(parsed.fits[j].raw_table == file.fits[j].raw_table);
    }
    // serialization is deterministic
    CHECK(coefficient_file_to_json(parsed) == text);

    SUBCASE("drive construction and the Delta perturbation") {
        const auto drive0 = make_drive(parsed, 0.0);
        REQUIRE(drive0.gamma.size() == 2);
        // Delta = 0 reproduces the unperturbed coefficients exactly
        for (double beta : {0.0, 0.3, 1.0})
            CHECK(drive0.gamma[0](beta) == doctest::Approx(parsed.fits[0](beta)).epsilon(1e-15));

        const auto drive = make_drive(parsed, 0.1);
        // beta = 0 isolates b0: the b1 perturbation must not move it
        CHECK(drive.gamma[0](0.0) == doctest::Approx(parsed.fits[0](0.0)).epsilon(1e-15));
        CHECK(drive.gamma[0](1.0) != doctest::Approx(parsed.fits[0](1.0)).epsilon(1e-12));
    }
}

TEST_SUITE_END();
