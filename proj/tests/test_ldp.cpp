#include <cmath>
#include <limits>
#include <random>

#include "brwlab/ldp.hpp"
#include "doctest.h"

using namespace brwlab;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

double kl(double s, double t) {
    auto term = [](double x, double y) { return x == 0.0 ? 0.0 : x * std::log(x / y); };
    return term(s, t) + term(1 - s, 1 - t);
}

// Rate of |S_n|/n on the d-regular tree, from the entropy of the up-step frequency.
// For lambda > d, the origin tangent is found by scanning b on a fine grid.
double rate_oracle(int d, double lambda, double a) {
    const double p = d / (d + lambda);
    const auto entropy = [&](double b) { return kl((1 + b) / 2, p); };
    if (lambda <= d) return entropy(a);
    if (a == 0.0) return 0.0;
    double best = kInf;
    const int steps = 50000;
    for (int i = 0; i <= steps; ++i) {
        const double b = a + (1 - a) * i / steps;
        best = std::min(best, entropy(b) / b);
    }
    return a * best;
}

// P(|S_n| >= k) (upper) or P(|S_n| <= k) (lower) for the walk on the d-regular tree.
double tail_oracle(int d, double lambda, int n, int k, bool upper) {
    const double p = d / (d + lambda);
    std::vector<double> cur(static_cast<std::size_t>(n) + 2, 0.0), next(cur.size());
    cur[0] = 1.0;
    for (int t = 0; t < n; ++t) {
        std::fill(next.begin(), next.end(), 0.0);
        next[1] += cur[0];
        for (int h = 1; h <= t; ++h) {
            next[static_cast<std::size_t>(h) + 1] += cur[static_cast<std::size_t>(h)] * p;
            next[static_cast<std::size_t>(h) - 1] += cur[static_cast<std::size_t>(h)] * (1 - p);
        }
        cur.swap(next);
    }
    double out = 0.0;
    for (int h = 0; h <= n; ++h)
        if (upper ? h >= k : h <= k) out += cur[static_cast<std::size_t>(h)];
    return out;
}

void check_mc_against_exact(int d, double lambda, double a, int n, long reps) {
    const auto est = mc_rate_estimate(TreeEnvironment::regular(d), lambda, a, n, reps, 555);
    REQUIRE(est.reliable);
    const bool upper = a >= est.v_lambda;
    const int k = upper ? static_cast<int>(std::ceil(a * n - 1e-9)) : static_cast<int>(std::floor(a * n + 1e-9));
    CHECK(est.upper_tail == upper);
    const double p = tail_oracle(d, lambda, n, k, upper);
    const double exact = -std::log(p) / n;
    const double tol = 4.0 * std::sqrt((1 - p) / (p * static_cast<double>(reps))) / n;
    CAPTURE(a);
    CHECK(std::abs(est.estimate - exact) <= tol);
}

}  // namespace

TEST_SUITE("ldp") {
    TEST_CASE("relative entropy") {
        CHECK(relative_entropy(0.3, 0.3) == 0.0);
        CHECK(relative_entropy(1.0, 2.0 / 3) == doctest::Approx(std::log(1.5)).epsilon(1e-14));
        CHECK(relative_entropy(0.5, 2.0 / 3) == doctest::Approx(std::log(3 / (2 * std::sqrt(2.0)))).epsilon(1e-14));
        CHECK(relative_entropy(0.0, 0.25) == doctest::Approx(std::log(4.0 / 3)).epsilon(1e-14));
        CHECK(relative_entropy(0.5, 0.0) == kInf);
        CHECK(relative_entropy(0.5, 1.0) == kInf);
        CHECK(relative_entropy(1.0, 1.0) == 0.0);
        CHECK_THROWS_AS(relative_entropy(1.5, 0.5), std::domain_error);
        CHECK_THROWS_AS(relative_entropy(0.5, -0.1), std::domain_error);
    }

    TEST_CASE("closed form on regular trees") {
        const auto r21 = regular_rate(2, 1.0);
        CHECK(r21.v_lambda() == doctest::Approx(1.0 / 3));
        CHECK(r21(1.0 / 3) == doctest::Approx(0.0));
        CHECK(r21(1.0) == doctest::Approx(std::log(1.5)).epsilon(1e-14));
        CHECK(r21(0.0) == doctest::Approx(std::log(3 / (2 * std::sqrt(2.0)))).epsilon(1e-14));
        CHECK(r21(-0.1) == kInf);
        CHECK(r21(1.1) == kInf);

        CHECK(regular_rate(4, 1.0)(0.0) == doctest::Approx(std::log(1.25)).epsilon(1e-14));
        const auto r22 = regular_rate(2, 2.0);
        CHECK(r22.v_lambda() == 0.0);
        CHECK(r22(0.0) == 0.0);
    }

    TEST_CASE("closed form matches the entropy oracle on all branches") {
        for (int d : {1, 2, 3, 4, 6})
            for (double lambda : {0.3, 1.0, 2.0, 3.5, 8.0}) {
                const auto rate = regular_rate(d, lambda);
                for (int i = 0; i <= 20; ++i) {
                    const double a = i / 20.0;
                    CAPTURE(d);
                    CAPTURE(lambda);
                    CAPTURE(a);
                    CHECK(rate(a) == doctest::Approx(rate_oracle(d, lambda, a)).epsilon(1e-7));
                }
            }
    }

    TEST_CASE("endpoint and anchor values agree with the general formulas") {
        for (int d = 1; d <= 6; ++d)
            for (double lambda : {0.1, 0.5, 1.0, 1.7, 3.0, 6.0, 10.0}) {
                const auto rate = regular_rate(d, lambda);
                const auto law = OffspringLaw::unchecked_point_mass(d);
                CAPTURE(d);
                CAPTURE(lambda);
                CHECK(std::abs(rate(0.0) - rate_at_zero(law, lambda)) <= 1e-12);
                CHECK(std::abs(rate(1.0) - rate_at_one(law, lambda)) <= 1e-12);
                CHECK(std::abs(rate(rate.v_lambda())) <= 1e-12);
                CHECK(rate.v_lambda() == doctest::Approx(std::max(0.0, (d - lambda) / (d + lambda))));
            }
    }

    TEST_CASE("general endpoint formulas") {
        const auto law = OffspringLaw::parse("2:0.5,3:0.5");
        CHECK(rate_at_one(law, 1.0) == doctest::Approx(-std::log(0.5 * 2 / 3 + 0.5 * 3 / 4)).epsilon(1e-14));
        CHECK(rate_at_zero(law, 1.0) == doctest::Approx(std::log(3 / (2 * std::sqrt(2.0)))).epsilon(1e-14));
        CHECK(rate_at_zero(law, 2.0) == 0.0);
        CHECK(rate_at_zero(law, 5.0) == 0.0);
        double prev = kInf;
        for (double lambda : {2.0, 1.0, 0.5, 0.1, 0.01, 0.001}) {
            const double value = rate_at_one(law, lambda);
            CHECK(value < prev);
            prev = value;
        }
        CHECK(prev < 1e-3);
    }

    TEST_CASE("convexity on random triples") {
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (auto [d, lambda] : {std::pair{2, 1.0}, std::pair{4, 1.0}, std::pair{3, 5.0}, std::pair{2, 2.0}}) {
            const auto rate = regular_rate(d, lambda);
            for (int trial = 0; trial < 100; ++trial) {
                const double x = unit(rng), y = unit(rng), w = unit(rng);
                const double mid = rate(w * x + (1 - w) * y);
                CHECK(mid <= w * rate(x) + (1 - w) * rate(y) + 1e-12);
            }
        }
    }

    TEST_CASE("monotone away from the anchor and I(a)/a increasing above it") {
        for (auto [d, lambda] : {std::pair{2, 1.0}, std::pair{4, 1.0}, std::pair{3, 0.5}}) {
            const auto rate = regular_rate(d, lambda);
            const double v = rate.v_lambda();
            double prev_ratio = 0.0, prev = 0.0;
            for (int i = 1; i <= 200; ++i) {
                const double a = v + (1 - v) * i / 200.0;
                CHECK(rate(a) >= prev);
                CHECK(rate(a) / a > prev_ratio);
                prev = rate(a);
                prev_ratio = rate(a) / a;
            }
            prev = 0.0;
            for (int i = 1; i <= 200; ++i) {
                const double a = v - v * i / 200.0;
                CHECK(rate(a) >= prev);
                prev = rate(a);
            }
        }
    }

    TEST_CASE("Monte Carlo rate agrees with the exact tail") {
        check_mc_against_exact(4, 1.0, 0.8, 40, 200000);
        check_mc_against_exact(4, 1.0, 0.3, 40, 200000);
        check_mc_against_exact(2, 1.0, 0.6, 60, 200000);
    }

    TEST_CASE("Monte Carlo rate near the anchor and at the edge") {
        const auto env = TreeEnvironment::regular(4);
        const auto at_v = mc_rate_estimate(env, 1.0, 0.6, 200, 20000, 3);
        CHECK(at_v.reliable);
        CHECK(at_v.estimate < 0.01);

        const auto edge = mc_rate_estimate(env, 1.0, 1.0, 200, 10000, 3);
        CHECK_FALSE(edge.reliable);
        CHECK(edge.successes == 0);
        CHECK(edge.estimate == kInf);
    }

    TEST_CASE("tabulated rate on a random tree") {
        const auto env = TreeEnvironment::random(OffspringLaw::parse("2:0.5,3:0.5"), 4);
        const auto rate = tabulate_rate(env, 1.0, 11, 60, 20000, 8);
        const auto pts = rate.points();
        CHECK(rate.kind() == RateFunction::Kind::tabulated);
        CHECK(pts.front().a == 0.0);
        CHECK(pts.back().a == 1.0);
        CHECK(pts.front().source == RateFunction::Source::closed);
        CHECK(pts.back().source == RateFunction::Source::closed);
        CHECK(pts.front().value == doctest::Approx(rate_at_zero(env.law(), 1.0)));
        CHECK(pts.back().value == doctest::Approx(rate_at_one(env.law(), 1.0)));
        CHECK(rate(rate.v_lambda()) == 0.0);
        CHECK(rate.source_at(rate.v_lambda()) != RateFunction::Source::closed);
        // The anchor is the annealed speed, between the speeds of the 2- and 3-regular trees.
        CHECK(rate.v_lambda() > 1.0 / 3);
        CHECK(rate.v_lambda() < 0.5);
        bool any_mc = false;
        for (const auto& p : pts) any_mc |= p.source == RateFunction::Source::mc && p.a != rate.v_lambda();
        CHECK(any_mc);
        for (std::size_t i = 1; i < pts.size(); ++i) {
            if (pts[i].a <= rate.v_lambda())
                CHECK(pts[i].value <= pts[i - 1].value);
            else
                CHECK(pts[i].value >= pts[i - 1].value);
        }
    }

    TEST_CASE("tabulated rate is flat below the anchor when lambda >= d_min") {
        const auto env = TreeEnvironment::random(OffspringLaw::parse("1:0.5,4:0.5"), 4);
        const auto rate = tabulate_rate(env, 1.5, 6, 40, 5000, 8);
        for (const auto& p : rate.points())
            if (p.a <= rate.v_lambda()) CHECK(p.value == 0.0);
    }

    TEST_CASE("tabulated rate validation") {
        using S = RateFunction::Source;
        CHECK_THROWS_AS(RateFunction::tabulated({{0.0, 0.1, S::closed}}, 0.5), ConfigError);
        CHECK_THROWS_AS(RateFunction::tabulated({{0.1, 0.1, S::closed}, {1.0, 0.2, S::closed}}, 0.5), ConfigError);
        const auto rate = RateFunction::tabulated({{0.0, 0.2, S::closed}, {0.5, 0.0, S::mc}, {1.0, 0.4, S::closed}}, 0.5);
        CHECK(rate(0.25) == doctest::Approx(0.1));
        CHECK(rate(0.75) == doctest::Approx(0.2));
        CHECK(rate.source_at(0.75) == S::mc);
        CHECK(rate.source_at(1.0) == S::closed);
    }
}
