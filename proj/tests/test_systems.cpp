#include "acd/systems.hpp"

#include "acd/rng.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

using namespace acd;
using namespace acd::testutil;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_SUITE_BEGIN("systems");

TEST_CASE("oscillator Hamiltonian") {
    auto fam = build_hamiltonian(SystemSpec::oscillator());
    std::vector<double> z{1.0, 0.0};
    CHECK(fam.at(1.0).evaluate(z) == doctest::Approx(0.75));
    CHECK(fam.base.evaluate(z) == doctest::Approx(0.5));
    CHECK(fam.linear_in_beta.evaluate(z) == doctest::Approx(0.25));
}

TEST_CASE("FPUT Hamiltonian against the direct bond sum") {
    SUBCASE("N=2 harmonic point") {
        auto spec = SystemSpec::fput(2);
        auto fam = build_hamiltonian(spec);
        std::vector<double> z{1.0, 0.0, 0.0, 0.0};
        // bonds 0-1 and 1-2 both stretched by 1, bond 2-3 idle
        CHECK(fam.at(0.0).evaluate(z) == doctest::Approx(1.0));
        CHECK(hamiltonian_value(spec, 0.0, z) == doctest::Approx(1.0));
    }

    SUBCASE("N=1 quartic term has two wall bonds") {
        auto spec = SystemSpec::fput(1);
        auto fam = build_hamiltonian(spec);
        std::vector<double> z{1.0, 0.0};
        CHECK(fam.d_beta().evaluate(z) == doctest::Approx(0.5));
        CHECK(quartic_part_value(spec, z) == doctest::Approx(0.5));
    }

    SUBCASE("random states: polynomial and native routes agree") {
        std::mt19937_64 rng(5);
        for (int n : {1, 2, 5}) {
            auto spec = SystemSpec::fput(n);
            auto fam = build_hamiltonian(spec);
            for (int rep = 0; rep < 20; ++rep) {
                auto z = random_point(rng, n, 1.5);
                for (double beta : {0.0, 0.5, 1.0}) {
                    CHECK(fam.at(beta).evaluate(z) ==
                          doctest::Approx(hamiltonian_value(spec, beta, z)).epsilon(1e-12));
                }
                CHECK(fam.base.evaluate(z) ==
                      doctest::Approx(harmonic_part_value(spec, z)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("mode transform") {
    auto spec = SystemSpec::fput(2);

    SUBCASE("symmetric displacement leaves the antisymmetric mode empty") {
        PhaseState st(2);
        st.q(0) = 0.8;
        st.q(1) = 0.8;
        auto mc = mode_transform(spec, st);
        CHECK(mc.Q[1] == doctest::Approx(0.0).epsilon(1e-14));
    }

    SUBCASE("mode frequencies") {
        CHECK(mode_frequency(2, 1) == doctest::Approx(1.0));
        CHECK(mode_frequency(2, 2) == doctest::Approx(std::sqrt(3.0)));
    }

    SUBCASE("round trip is the identity") {
        std::mt19937_64 rng(7);
        for (int n : {2, 5, 17}) {
            auto s = SystemSpec::fput(n);
            PhaseState st(n);
            auto z = random_point(rng, n);
            st.z = z;
            auto back = inverse_mode_transform(s, mode_transform(s, st));
            for (std::size_t i = 0; i < z.size(); ++i)
                CHECK(back.z[i] == doctest::Approx(z[i]).epsilon(1e-10));
        }
    }

    SUBCASE("harmonic energy splits into mode energies") {
        std::mt19937_64 rng(9);
        for (int rep = 0; rep < 10; ++rep) {
            const int n = 4;
            auto s = SystemSpec::fput(n);
            PhaseState st(n);
            st.z = random_point(rng, n);
            auto mc = mode_transform(s, st);
            double mode_sum = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double w = mode_frequency(n, k);
                mode_sum += 0.5 * (mc.P[static_cast<std::size_t>(k - 1)] *
                                       mc.P[static_cast<std::size_t>(k - 1)] +
                                   w * w * mc.Q[static_cast<std::size_t>(k - 1)] *
                                       mc.Q[static_cast<std::size_t>(k - 1)]);
            }
            CHECK(mode_sum == doctest::Approx(harmonic_part_value(s, st.z)).epsilon(1e-10));
        }
    }

    SUBCASE("oscillator spec has no modes") {
        PhaseState st(1);
        CHECK_THROWS_AS(mode_transform(SystemSpec::oscillator(), st), std::invalid_argument);
    }
}

TEST_CASE("oscillator shell ensemble") {
    auto e = oscillator_shell_ensemble(1.0, 128, 42);
    REQUIRE(e.size() == 128);

    double mean_x = 0.0;
    for (int m = 0; m < e.size(); ++m) {
        auto z = e.member(m);
        CHECK(0.5 * (z[0] * z[0] + z[1] * z[1]) == doctest::Approx(1.0).epsilon(1e-12));
        mean_x += e.weights[static_cast<std::size_t>(m)] * z[0];
    }
    // stratified phases sum to zero exactly up to round-off
    CHECK(std::abs(mean_x) < 1e-13);

    // radius sqrt(2 E0)
    CHECK(std::hypot(e.member(0)[0], e.member(0)[1]) == doctest::Approx(std::sqrt(2.0)));

    // phases are a rigid stratified fan: consecutive gaps all equal 2 pi / M
    std::vector<double> angles;
    for (int m = 0; m < e.size(); ++m)
        angles.push_back(std::atan2(e.member(m)[1], e.member(m)[0]));
    std::sort(angles.begin(), angles.end());
    for (std::size_t i = 1; i < angles.size(); ++i)
        CHECK(angles[i] - angles[i - 1] == doctest::Approx(2 * kPi / 128).epsilon(1e-9));

    CHECK_THROWS_AS(oscillator_shell_ensemble(-1.0, 8, 1), std::invalid_argument);
    CHECK_THROWS_AS(oscillator_shell_ensemble(1.0, 0, 1), std::invalid_argument);
}

TEST_CASE("FPUT mode ensemble") {
    auto spec = SystemSpec::fput(2);
    auto e = fput_mode_ensemble(spec, 1, 1.0, 64, 7);
    REQUIRE(e.size() == 64);

    for (int m = 0; m < e.size(); ++m) {
        PhaseState st(2);
        auto z = e.member(m);
        std::copy(z.begin(), z.end(), st.z.begin());
        CHECK(harmonic_part_value(spec, st.z) == doctest::Approx(1.0).epsilon(1e-10));
        auto mc = mode_transform(spec, st);
        CHECK(std::abs(mc.Q[1]) < 1e-12);
        CHECK(std::abs(mc.P[1]) < 1e-12);
    }

    // N=2, k=1, E0=1 corresponds to lambda=6, A=2/sqrt(3)
    auto [k, E0] = thermodynamic_sequence(6.0, 2.0 / std::sqrt(3.0), 2);
    CHECK(k == 1);
    CHECK(E0 == doctest::Approx(1.0));

    CHECK_THROWS_AS(fput_mode_ensemble(spec, 3, 1.0, 8, 1), std::invalid_argument);
    CHECK_THROWS_AS(fput_mode_ensemble(spec, 1, -2.0, 8, 1), std::invalid_argument);
}

TEST_CASE("thermodynamic sequence") {
    CHECK(thermodynamic_sequence(6.0, 2.0 / std::sqrt(3.0), 50).first == 17);
    CHECK(thermodynamic_sequence(6.0, 2.0 / std::sqrt(3.0), 5).first == 2);

    // E0/(N+1) = A^2 sin^2(pi/lambda) is size-independent along the family
    const double A = 2.0 / std::sqrt(3.0);
    const double density = A * A * std::sin(kPi / 6.0) * std::sin(kPi / 6.0);
    for (int n : {2, 5, 17, 50}) {
        auto [k, E0] = thermodynamic_sequence(6.0, A, n);
        CHECK(E0 / (n + 1) == doctest::Approx(density).epsilon(1e-12));
        CHECK(k == 2 * (n + 1) / 6);
    }

    CHECK_THROWS_AS(thermodynamic_sequence(6.0, 1.0, 3), std::invalid_argument);
}

TEST_CASE("gaussian energy realizations") {
    SUBCASE("zero width collapses to the mean") {
        auto r = gaussian_energy_realizations(1.0, 0.0, 5);
        for (const auto& e : r) CHECK(e.E0 == doctest::Approx(1.0));
    }

    SUBCASE("single realization sits at the truncated median") {
        auto r = gaussian_energy_realizations(1.0, 0.4, 1);
        REQUIRE(r.size() == 1);
        const double F0 = normal_cdf(-1.0 / 0.4);
        const double median = 1.0 + 0.4 * normal_quantile(F0 + 0.5 * (1.0 - F0));
        CHECK(r[0].E0 == doctest::Approx(median).epsilon(1e-10));
    }

    SUBCASE("paper parameters: forty positive energies near the truncated mean") {
        auto r = gaussian_energy_realizations(1.0, 0.4, 40);
        double mean = 0.0, wsum = 0.0;
        for (const auto& e : r) {
            CHECK(e.E0 > 0.0);
            mean += e.weight * e.E0;
            wsum += e.weight;
        }
        CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(mean == doctest::Approx(truncated_gaussian_mean(1.0, 0.4)).epsilon(0.05));
    }
}

TEST_CASE("normal quantile round trip") {
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    for (double p : {1e-6, 0.01, 0.2, 0.5, 0.8, 0.99, 1 - 1e-6})
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-11));
    CHECK_THROWS_AS(normal_quantile(0.0), std::domain_error);
}

TEST_CASE("ensemble CSV snapshot is deterministic") {
    auto e = oscillator_shell_ensemble(1.0, 4, 99);
    std::ostringstream a, b;
    write_ensemble_csv(a, e);
    write_ensemble_csv(b, oscillator_shell_ensemble(1.0, 4, 99));
    CHECK(a.str() == b.str());
    CHECK(a.str().substr(0, 21) == "member,weight,q1,p1\n0");
    // a different seed rotates the fan
    std::ostringstream c;
    write_ensemble_csv(c, oscillator_shell_ensemble(1.0, 4, 100));
    CHECK(a.str() != c.str());
}

TEST_SUITE_END();
