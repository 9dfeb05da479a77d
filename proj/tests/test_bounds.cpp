#include "doctest.h"

#include "mfgsec/bounds.hpp"
#include "mfgsec/errors.hpp"
#include "mfgsec/stats.hpp"

#include <cmath>

using namespace mfgsec;
using namespace mfgsec::bounds;

namespace {

BoundParams reference_params() {
    BoundParams p;
    p.n = 100;
    p.c1 = 0.5;
    p.c2 = 3.0;
    p.m_norm_max = 1.0;
    p.c3 = 1.0;
    return p;
}

long double oracle_a(long double n, long double c1) { return 2.0L * std::exp(-n * c1 * c1 / 2.0L); }
long double oracle_b(long double c2, long double m) { return 2.0L * std::exp(-c2 * c2 / (2.0L * m * m)); }
long double oracle_c(long double d, long double c3) { return std::exp(d * d / 8.0L - c3); }

}  // namespace

TEST_CASE("bound_terms") {
    const auto t = bound_terms(reference_params());
    CHECK(std::abs(t.a - static_cast<double>(oracle_a(100, 0.5))) < 1e-15);
    CHECK(t.a == doctest::Approx(7.46e-6).epsilon(1e-3));
    CHECK(std::abs(t.b - static_cast<double>(oracle_b(3, 1))) < 1e-15);
    CHECK(t.b == doctest::Approx(0.02222).epsilon(1e-3));
    CHECK(std::abs(t.c - static_cast<double>(oracle_c(0, 1))) < 1e-15);
    CHECK(t.c == doctest::Approx(0.36788).epsilon(1e-4));

    auto bad = reference_params();
    bad.m_norm_max = 0.0;
    CHECK_THROWS_AS(bound_terms(bad), InvalidInput);
    bad = reference_params();
    bad.c2 = -1.0;
    CHECK_THROWS_AS(bound_terms(bad), InvalidInput);
}

TEST_CASE("convergence_probability") {
    SUBCASE("reference constants") {
        const auto r = convergence_probability(reference_params(), algo::Problem::P2);
        const long double p = (1.0L - oracle_a(100, 0.5)) * (1.0L - oracle_b(3, 1)) * (1.0L - oracle_c(0, 1));
        CHECK(std::abs(r.p2 - static_cast<double>(p)) < 1e-12);
        CHECK(r.p2 == doctest::Approx(0.61808).epsilon(1e-4));
        CHECK(r.varrho == 1.0 - r.p2);
        CHECK(r.complexity == doctest::Approx(std::log(1.0 / r.varrho)));
        CHECK_FALSE(r.clamped.any());
    }
    SUBCASE("P1 drops the extinction factor") {
        const auto r = convergence_probability(reference_params(), algo::Problem::P1);
        CHECK(r.p2 == r.p1);
        CHECK(r.c == 0.0);
    }
    SUBCASE("vanishing factors") {
        BoundParams p;
        p.n = 1e6;
        p.c1 = 1.0;
        p.c2 = 100.0;
        p.c3 = 1e4;
        const auto r = convergence_probability(p, algo::Problem::P2);
        CHECK(r.a == 0.0);
        CHECK(r.b == 0.0);
        CHECK(r.c == 0.0);
        CHECK(r.p2 == 1.0);
        CHECK(r.varrho == 0.0);
        CHECK(r.complexity_infinite);
        CHECK(std::isinf(r.complexity));
    }
    SUBCASE("degenerate c1 clamps") {
        auto p = reference_params();
        p.c1 = 0.0;
        const auto r = convergence_probability(p, algo::Problem::P2);
        CHECK(r.a == 2.0);
        CHECK(r.clamped.a);
        CHECK(r.p2 == 0.0);
        CHECK(r.p1 == 0.0);
    }
    SUBCASE("monotone over a 5^3 sweep") {
        const double c1s[] = {0.05, 0.1, 0.2, 0.3, 0.5};
        const double c2s[] = {0.5, 1.0, 2.0, 3.0, 4.0};
        const double c3s[] = {0.0, 0.5, 1.0, 2.0, 4.0};
        auto at = [](double c1, double c2, double c3) {
            BoundParams p;
            p.n = 100;
            p.c1 = c1;
            p.c2 = c2;
            p.c3 = c3;
            p.theta_eve_minus = 1.0;
            const auto r = convergence_probability(p, algo::Problem::P2);
            CHECK(r.p2 >= 0.0);
            CHECK(r.p2 <= 1.0);
            CHECK(r.varrho == 1.0 - r.p2);
            return r;
        };
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j)
                for (int k = 0; k < 5; ++k) {
                    const auto r = at(c1s[i], c2s[j], c3s[k]);
                    if (i + 1 < 5) {
                        const auto s = at(c1s[i + 1], c2s[j], c3s[k]);
                        CHECK(s.a < r.a);
                        CHECK(s.p2 >= r.p2);
                    }
                    if (j + 1 < 5) CHECK(at(c1s[i], c2s[j + 1], c3s[k]).p2 >= r.p2);
                    if (k + 1 < 5) {
                        const auto s = at(c1s[i], c2s[j], c3s[k + 1]);
                        CHECK(s.c < r.c);
                        CHECK(s.p2 >= r.p2);
                    }
                }
        BoundParams p = reference_params();
        const double a100 = bound_terms(p).a;
        p.n = 200;
        CHECK(bound_terms(p).a < a100);
    }
}

TEST_CASE("azuma_bound") {
    BoundParams p;
    p.varsigma1 = 0.0;
    p.varsigma2 = 1.0;
    SUBCASE("large deviation vanishes") {
        p.c0 = 1e3;
        CHECK(azuma_bound(p, 10).value < 1e-300);
    }
    SUBCASE("formula and clamping") {
        p.c0 = 1.0;
        const auto b = azuma_bound(p, 10);
        CHECK(b.raw == doctest::Approx(2.0 * std::exp(-0.2)));
        CHECK(b.value == 1.0);
        CHECK(b.clamped);
        p.c0 = 5.0;
        const auto u = azuma_bound(p, 10);
        CHECK(u.value == doctest::Approx(2.0 * std::exp(-5.0)));
        CHECK_FALSE(u.clamped);
    }
    SUBCASE("degenerate increments") {
        p.varsigma2 = p.varsigma1;
        p.c0 = 0.3;
        CHECK(azuma_bound(p, 10).value == 0.0);
        p.c0 = 0.0;
        CHECK(azuma_bound(p, 10).value == 1.0);
    }
    SUBCASE("reversed increments") {
        p.varsigma2 = -1.0;
        CHECK_THROWS_AS(azuma_bound(p, 10), InvalidInput);
    }
}

TEST_CASE("sanov and mgf bounds") {
    BoundParams p;
    p.set_size = 10;
    CHECK(sanov_bound(p) == 10.0);
    p.n = 100;
    p.kl_inf = 0.1;
    CHECK(sanov_bound(p) == doctest::Approx(10.0 * std::exp(-10.0)));
    CHECK(sanov_bound(p) == doctest::Approx(4.54e-4).epsilon(1e-3));
    p.n = 1e5;
    CHECK(sanov_bound(p) < 1e-300);

    CHECK(hoeffding_mgf_bound(0.7, 0.7) == 1.0);
    CHECK(hoeffding_mgf_bound(2.0, 0.0) == doctest::Approx(1.64872).epsilon(1e-5));
    for (double lo : {-1.0, 0.0, 0.5})
        for (double hi : {0.5, 1.0, 3.0}) {
            // Two-point law on {lo, hi}, centred so the Hoeffding lemma applies.
            const double mid = 0.5 * (lo + hi);
            const double mgf = 0.5 * (std::exp(lo - mid) + std::exp(hi - mid));
            CHECK(hoeffding_mgf_bound(lo, hi) >= mgf);
        }
}

TEST_CASE("empirical_convergence_check") {
    SUBCASE("deterministic analytic case") {
        auto c = algo::analytic_config(41, 41);
        BoundParams tiny;
        tiny.n = 10;
        tiny.c1 = 0.01;
        tiny.c2 = 0.01;
        tiny.c3 = 0.01;
        const auto r = empirical_convergence_check(c, tiny, 50);
        CHECK(r.frequency == 1.0);
        CHECK(r.pass);
    }
    SUBCASE("vacuous bound always passes") {
        const auto r = one_sided_check(0, 50, 0.0);
        CHECK(r.pass);
        CHECK(r.frequency == 0.0);
    }
    SUBCASE("one-sided arithmetic") {
        const auto r = one_sided_check(40, 50, 0.99);
        CHECK(r.upper == doctest::Approx(0.8 + 3.0 * std::sqrt(0.8 * 0.2 / 50.0)));
        CHECK_FALSE(r.pass);
        CHECK(one_sided_check(40, 50, 0.95).pass);
    }
    SUBCASE("too few replications") {
        CHECK_THROWS_AS(empirical_convergence_check(algo::analytic_config(41, 41), BoundParams{}, 49), InvalidInput);
    }
    SUBCASE("runner failure carries the run index") {
        auto c = algo::analytic_config(6, 201);
        try {
            empirical_convergence_check(c, reference_params(), 50);
            FAIL("expected a failure");
        } catch (const RunError& e) {
            CHECK(e.run_index() == 0);
        }
    }
    SUBCASE("frequency falls with noise") {
        std::vector<double> noise, freq;
        for (double w : {0.0, 0.02, 0.05, 0.1, 0.2}) {
            auto c = algo::analytic_config(31, 31);
            c.noise.set(4, w);
            c.r_conv = 5e-3;
            c.max_outer = 2;
            c.seed = 77;
            const auto r = empirical_convergence_check(c, BoundParams{}, 50);
            noise.push_back(w);
            freq.push_back(r.frequency);
        }
        const auto k = stats::kendall_tau(noise, freq);
        CHECK(k.z <= 1.6449);
        CHECK(freq.front() >= freq.back());
    }
}
