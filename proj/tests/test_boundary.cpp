#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "toprank/boundary.hpp"
#include "toprank/error.hpp"

using namespace toprank;

TEST_CASE("click constant matches the C library erf") {
    CHECK(click_constant() == doctest::Approx(oracle::click_constant()).epsilon(1e-14));
    CHECK(click_constant() == doctest::Approx(3.34368).epsilon(1e-5));
    CHECK(std::erf(std::sqrt(2.0)) == doctest::Approx(0.9544997).epsilon(1e-7));
    for (double x : {-2.0, -1.0, -0.1, 0.0, 0.3, 1.0, std::sqrt(2.0), 2.0}) {
        CHECK(erf_series(x) == doctest::Approx(std::erf(x)).epsilon(2e-15));
    }
    for (double x : {-3.0, -2.5, 2.5, 3.0}) {
        CHECK(erf_series(x) == doctest::Approx(std::erf(x)).epsilon(1e-13));
    }
}

TEST_CASE("mixture mass") {
    CHECK(std::abs(mixture_density_mass() - 1.0) <= 1e-8);
    SUBCASE("truncated mass has the closed form 1 - 1/s_max") {
        CHECK(truncated_mixture_mass(10.0) == doctest::Approx(0.9).epsilon(1e-12));
        CHECK(truncated_mixture_mass(2.0) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(truncated_mixture_mass(1e6) == doctest::Approx(1.0).epsilon(1e-5));
    }
    SUBCASE("mass does not depend on where the mapped tail begins") {
        for (double s_max : {2.0, 4.0, 10.0, 30.0}) {
            QuadratureParams q;
            q.s_max = s_max;
            CHECK(std::abs(mixture_density_mass(q) - 1.0) <= 1e-10);
        }
    }
}

TEST_CASE("psi special values and brute-force agreement") {
    CHECK(psi(0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : {1e-3, 1.0, 100.0, 1e6}) CHECK(psi(0.0, v) < 1.0);

    // Golden values frozen from the 10^6-node midpoint oracle.
    const double golden_psi = 3.26267236369;
    CHECK(oracle::same_digits(oracle::psi(50.0, 100.0), golden_psi, 9));
    CHECK(oracle::same_digits(psi(50.0, 100.0), golden_psi, 9));

    for (auto [u, v] : {std::pair{0.0, 10.0}, {10.0, 10.0}, {-20.0, 100.0}, {300.0, 1e4}, {1500.0, 1e5}}) {
        CAPTURE(u);
        CAPTURE(v);
        CHECK(oracle::same_digits(psi(u, v), oracle::psi(u, v), 8));
    }
}

TEST_CASE("psi is increasing in u and decreasing in v") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> logv(0.0, 8.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 60; ++k) {
        const double v = std::pow(10.0, logv(gen));
        const double scale = std::sqrt(2.0 * v * 6.0);
        const double u1 = scale * (2.0 * unit(gen) - 0.5);
        const double u2 = u1 + scale * (0.01 + unit(gen));
        CAPTURE(v);
        CAPTURE(u1);
        CHECK(log_psi(u1, v) < log_psi(u2, v));
        const double v2 = v * (1.05 + unit(gen));
        CHECK(log_psi(u1, v) > log_psi(u1, v2));
    }
}

TEST_CASE("psi overflow guard") {
    CHECK_THROWS_AS(psi(2e4, 0.0), Overflow);
    CHECK(std::isfinite(log_psi(2e4, 0.0)));
    CHECK_THROWS_AS(log_psi(1.0, -1.0), DomainError);
}

TEST_CASE("beta_f solves the defining identity") {
    for (double v : {10.0, 1e3, 1e6, 1e9}) {
        for (double c : {2.0, 20.0, 1e3, 1e5}) {
            const double b = beta_f(v, c);
            CAPTURE(v);
            CAPTURE(c);
            CHECK(std::abs(psi(b, v) - c) / c <= 1e-8);
        }
    }
    SUBCASE("c = 1 with v -> 0 gives a root near zero") {
        CHECK(std::abs(beta_f(1e-9, 1.0)) < 1e-3);
    }
    SUBCASE("c below Psi(0, v) gives a negative root") {
        CHECK(beta_f(100.0, 0.5) < 0.0);
    }
    SUBCASE("golden value from the bisection oracle") {
        const double golden = 106.203103201;
        CHECK(oracle::same_digits(oracle::beta(100.0, 50.0), golden, 9));
        CHECK(oracle::same_digits(beta_f(100.0, 50.0), golden, 9));
    }
    SUBCASE("warm start finds the same root") {
        const double lower = beta_f(1e4, 10.0);
        CHECK(beta_f_from(2e4, 10.0, lower) == doctest::Approx(beta_f(2e4, 10.0)).epsilon(1e-11));
    }
    SUBCASE("bracket cap") {
        CHECK_THROWS_AS(beta_f(10.0, 1e300, {}, 1e-12, 1e3), BracketFailure);
    }
}

TEST_CASE("beta_f is monotone in v and in c") {
    double previous = -std::numeric_limits<double>::infinity();
    for (double v : log_grid(1.0, 1e10, 3)) {
        const double b = beta_f(v, 10.0);
        CHECK(b >= previous);
        previous = b;
    }
    previous = -std::numeric_limits<double>::infinity();
    for (double c : {1.5, 3.0, 10.0, 100.0, 1e4}) {
        const double b = beta_f(1e5, c);
        CHECK(b >= previous);
        previous = b;
    }
}

TEST_CASE("asymptotic_beta") {
    const double v = std::exp(std::exp(2.0));
    const double expected = std::sqrt(2.0 * v * (2.0 + 2.5 * std::log(2.0) + std::log(50.0 / (2.0 * std::sqrt(std::numbers::pi)))));
    CHECK(asymptotic_beta(v, 50.0) == doctest::Approx(expected).epsilon(1e-13));
    CHECK(asymptotic_beta(v, 50.0) == doctest::Approx(143.7).epsilon(1e-3));
    CHECK_THROWS_AS(asymptotic_beta(std::exp(std::numbers::e), 50.0), DomainError);
    CHECK_THROWS_AS(asymptotic_beta(10.0, 50.0), DomainError);

    SUBCASE("ratio to beta_f approaches one along the sampled trajectory") {
        double previous = std::numeric_limits<double>::infinity();
        for (double x : {1e4, 1e6, 1e8, 1e10}) {
            const double deviation = std::abs(asymptotic_beta(x, 50.0) / beta_f(x, 50.0) - 1.0);
            CHECK(deviation < previous);
            previous = deviation;
        }
        CHECK(previous < 0.02);
    }
    SUBCASE("doubling v scales like sqrt(2 v log log v)") {
        for (double x : {1e8, 1e12}) {
            const double ratio = asymptotic_beta(2.0 * x, 50.0) / asymptotic_beta(x, 50.0);
            const double lead = std::sqrt(2.0 * std::log(std::log(2.0 * x)) / std::log(std::log(x)));
            CHECK(ratio == doctest::Approx(lead).epsilon(0.01));
        }
    }
}

TEST_CASE("threshold examples") {
    BoundarySpec base;
    base.delta = 0.01;
    const double c = oracle::click_constant();
    CHECK(threshold(base, 100) == doctest::Approx(std::sqrt(200.0 * std::log(c * 10.0 / 0.01))).epsilon(1e-13));
    CHECK(threshold(base, 100) == doctest::Approx(40.29).epsilon(2e-4));
    CHECK(threshold(base, 1) == doctest::Approx(std::sqrt(2.0 * std::log(c / 0.01))).epsilon(1e-13));
    CHECK(threshold(base, 1) == doctest::Approx(3.41).epsilon(2e-3));

    BoundarySpec lil;
    lil.variant = BoundaryVariant::SimpleLIL;
    lil.c2 = 0.0;
    CHECK(threshold(lil, 1000000) == doctest::Approx(std::sqrt(2e6 * std::log(std::log(1e6)))).epsilon(1e-13));
    CHECK(threshold(lil, 1000000) == doctest::Approx(2291.8).epsilon(1e-4));

    BoundarySpec asym;
    asym.variant = BoundaryVariant::AsymptoticC1;
    asym.c1 = 1.5;
    const double N = 5000.0;
    const double ll = std::log(std::log(N));
    CHECK(threshold(asym, 5000) == doctest::Approx(std::sqrt(2.0 * N * (ll + 2.5 * std::log(ll) + 1.5))).epsilon(1e-13));

    BoundarySpec mix;
    mix.variant = BoundaryVariant::MixtureExact;
    mix.delta = 0.05;
    CHECK(threshold(mix, 100) == doctest::Approx(beta_f(100.0, 10.0)).epsilon(1e-12));
}

TEST_CASE("iterated-log variants fall back to the mixture boundary below n_min") {
    for (auto variant : {BoundaryVariant::AsymptoticC1, BoundaryVariant::SimpleLIL}) {
        BoundarySpec spec;
        spec.variant = variant;
        spec.delta = 0.05;
        spec.c1 = 1.4;
        spec.c2 = 3.2;
        spec.n_min = 1000;
        BoundarySpec mix = spec;
        mix.variant = BoundaryVariant::MixtureExact;
        for (std::int64_t n : {1, 2, 16, 999}) CHECK(threshold(spec, n) == threshold(mix, n));
        CHECK(threshold(spec, 1000) != threshold(mix, 1000));
    }
    BoundarySpec bad;
    bad.variant = BoundaryVariant::SimpleLIL;
    bad.n_min = 15;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad.n_min = 16;
    bad.c2 = -2.5;
    CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("tabulated boundary agrees with direct evaluation and is nondecreasing") {
    for (auto variant : {BoundaryVariant::Baseline, BoundaryVariant::MixtureExact, BoundaryVariant::AsymptoticC1,
                         BoundaryVariant::SimpleLIL}) {
        BoundarySpec spec;
        spec.variant = variant;
        spec.delta = 0.05;
        spec.c1 = 1.4155;
        spec.c2 = 3.1694;
        spec.n_min = 1000;
        const ConfidenceBoundary table(spec, 3000);
        double previous = 0.0;
        for (std::int64_t n = 1; n <= 4000; n += (n < 100 ? 1 : 37)) {
            CAPTURE(n);
            CHECK(table(n) == doctest::Approx(threshold(spec, n)).epsilon(1e-10));
            if (variant != BoundaryVariant::AsymptoticC1 && variant != BoundaryVariant::SimpleLIL) {
                CHECK(table(n) >= previous);
            } else if (n >= spec.n_min) {
                CHECK(table(n) >= previous);
            }
            previous = table(n);
        }
    }
    const auto never = ConfidenceBoundary::constant(std::numeric_limits<double>::infinity());
    CHECK(never.is_constant());
    CHECK(std::isinf(never(123)));
}

TEST_CASE("log grid") {
    const auto g = log_grid(1e3, 1e12, 4);
    REQUIRE(g.size() == 37);
    CHECK(g.front() == doctest::Approx(1e3));
    CHECK(g.back() == doctest::Approx(1e12));
    for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] / g[k - 1] == doctest::Approx(std::pow(10.0, 0.25)));
}

TEST_CASE("constant estimates") {
    const auto grid = log_grid(1e3, 1e12, 4);

    SUBCASE("definitions and envelope validity") {
        for (double delta : {0.1, 0.05, 0.01}) {
            const ConstantEstimate e = estimate_constants(delta, grid);
            const double offset = std::log(1.0 / (4.0 * delta * std::sqrt(std::numbers::pi)));
            CHECK(e.c1 - offset == doctest::Approx(e.c0).epsilon(1e-12));
            CHECK(e.c2 >= 0.0);
            CHECK(e.points == grid.size());
            BoundarySpec a;
            a.variant = BoundaryVariant::AsymptoticC1;
            a.delta = delta;
            a.c1 = e.c1;
            a.n_min = 16;
            BoundarySpec s = a;
            s.variant = BoundaryVariant::SimpleLIL;
            s.c2 = e.c2;
            for (double v : grid) {
                const double b = beta_f(v, 1.0 / (2.0 * delta));
                const auto n = static_cast<std::int64_t>(v);
                if (static_cast<double>(n) != v) continue;
                CHECK(b <= threshold(a, n) * (1.0 + 1e-12));
                CHECK(b <= threshold(s, n) * (1.0 + 1e-12));
            }
            CHECK(estimate_c2(delta, grid) == doctest::Approx(e.c2).epsilon(1e-12));
            CHECK(estimate_c0(delta, grid).c0 == doctest::Approx(e.c0).epsilon(1e-12));
        }
    }

    SUBCASE("golden values from independent root solves") {
        // Envelope terms recomputed at every grid point with the midpoint
        // oracle (10^5 nodes keep this fast; the terms vary slowly in v).
        for (double delta : {0.1, 0.01}) {
            double c0 = -std::numeric_limits<double>::infinity();
            double c2 = 0.0;
            for (std::size_t k = 0; k < grid.size(); k += 4) {
                const double v = grid[k];
                const double b = oracle::beta(v, 1.0 / (2.0 * delta), 200000);
                const double ll = std::log(std::log(v));
                c0 = std::max(c0, b * b / (2.0 * v) - ll - 2.5 * std::log(ll) -
                                      std::log(1.0 / (4.0 * delta * std::sqrt(std::numbers::pi))));
                c2 = std::max(c2, b * b / (v * ll) - 2.0);
            }
            std::vector<double> coarse;
            for (std::size_t k = 0; k < grid.size(); k += 4) coarse.push_back(grid[k]);
            const ConstantEstimate e = estimate_constants(delta, coarse);
            CHECK(e.c0 == doctest::Approx(c0).epsilon(1e-6));
            CHECK(e.c2 == doctest::Approx(c2).epsilon(1e-6));
        }
        CHECK(estimate_constants(0.1, grid).c0 == doctest::Approx(-0.3917).epsilon(1e-3));
        CHECK(estimate_constants(0.01, grid).c0 == doctest::Approx(2.4692).epsilon(1e-4));
        CHECK(estimate_constants(0.01, grid).c2 == doctest::Approx(6.9986).epsilon(1e-4));
    }

    SUBCASE("doubling the grid density moves C0 by less than one percent") {
        const auto fine = log_grid(1e3, 1e12, 8);
        for (double delta : {0.1, 0.01}) {
            const double coarse_c0 = estimate_c0(delta, grid).c0;
            const double fine_c0 = estimate_c0(delta, fine).c0;
            CHECK(std::abs(fine_c0 - coarse_c0) <= 0.01 * std::abs(coarse_c0));
        }
    }

    SUBCASE("C2 is nonincreasing in delta") {
        double previous = std::numeric_limits<double>::infinity();
        for (double delta : {0.001, 0.01, 0.05, 0.1, 0.2, 0.3}) {
            const double c2 = estimate_c2(delta, grid);
            CHECK(c2 <= previous);
            previous = c2;
        }
    }

    SUBCASE("C2 clamps at zero when beta_F sits below the LIL envelope") {
        // For c near 1 the root stays below sqrt(2 v log log v) up to 1e6.
        CHECK(estimate_c2(0.49, log_grid(20.0, 1e6, 2)) == 0.0);
        CHECK(estimate_c2(0.49, log_grid(20.0, 1e9, 2)) > 0.0);
    }
}

TEST_CASE("refined thresholds drop below Baseline from a crossover count onward") {
    BoundarySpec base;
    base.delta = 0.05;
    const auto grid = log_grid(1e3, 1e12, 4);
    const ConstantEstimate e = estimate_constants(0.05, grid);
    BoundarySpec lil;
    lil.variant = BoundaryVariant::SimpleLIL;
    lil.delta = 0.05;
    lil.c2 = e.c2;
    lil.n_min = 1000;
    BoundarySpec asym = lil;
    asym.variant = BoundaryVariant::AsymptoticC1;
    asym.c1 = e.c1;

    std::vector<std::int64_t> counts;
    for (double v : log_grid(1.0, 1e9, 8)) counts.push_back(std::llround(v));
    const ConfidenceBoundary b(base);
    for (const auto& spec : {lil, asym}) {
        const ConfidenceBoundary r(spec);
        const auto star = crossover(r, b, counts);
        REQUIRE(star.has_value());
        for (auto n : counts) {
            if (n >= *star) CHECK(r(n) < b(n));
        }
    }
    // Baseline never drops below itself.
    CHECK_FALSE(crossover(b, b, counts).has_value());
}
