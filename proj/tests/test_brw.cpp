#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "brwlab/brw.hpp"
#include "doctest.h"

using namespace brwlab;

namespace {

BrwConfig config(const char* law, double lambda, WalkVariant variant = WalkVariant::standard) {
    BrwConfig cfg;
    cfg.branching_law = OffspringLaw::parse(law);
    cfg.lambda = lambda;
    cfg.variant = variant;
    return cfg;
}

BrwConfig single_walk(double lambda) {
    BrwConfig cfg;
    cfg.branching_law = OffspringLaw::unchecked_point_mass(1);
    cfg.lambda = lambda;
    return cfg;
}

std::set<std::pair<std::uint64_t, VertexKey>> snapshot(const Population& pop) {
    std::set<std::pair<std::uint64_t, VertexKey>> out;
    for (const auto& p : pop.particles()) out.insert({p.label, pop.arena().key(p.node)});
    return out;
}

double mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double std_error(const std::vector<double>& xs) {
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

}  // namespace

TEST_SUITE("brw") {
    TEST_CASE("configuration") {
        CHECK_NOTHROW(config("1:0.5,2:0.5", 1.0).validate());
        CHECK_NOTHROW(single_walk(1.0).validate());
        CHECK_THROWS_AS(config("2:1", 1.0, WalkVariant::lazy_at_root).validate(), ConfigError);
        CHECK_THROWS_AS(config("2:1", 0.0).validate(), ConfigError);
        auto capped = config("2:1", 1.0);
        capped.population_cap = 0;
        CHECK_THROWS_AS(capped.validate(), ConfigError);
    }

    TEST_CASE("a unit branching law keeps one particle") {
        const auto env = TreeEnvironment::regular(3);
        Population pop(env, single_walk(1.0), 4);
        for (int g = 0; g < 100; ++g) {
            const int before = pop.particles().empty() ? 0 : pop.depth(pop.particles().front());
            pop.branch_and_move();
            REQUIRE(pop.particles().size() == 1);
            CHECK(std::abs(pop.depth(pop.particles().front()) - before) == 1);
        }
        CHECK(pop.generation() == 100);
    }

    TEST_CASE("each child moves one step from its parent") {
        const auto env = TreeEnvironment::random(OffspringLaw::parse("1:0.3,2:0.4,3:0.3"), 6);
        const auto cfg = config("1:0.5,3:0.5", 1.5);
        Population pop(env, cfg, 10);
        for (int g = 0; g < 8; ++g) {
            std::unordered_map<std::uint64_t, int> parent_depth;
            for (const auto& p : pop.particles())
                for (int j = 0; j < cfg.branching_law.d_max(); ++j) parent_depth[child_label(p.label, j)] = pop.depth(p);
            pop.branch_and_move();
            for (const auto& p : pop.particles()) {
                REQUIRE(parent_depth.count(p.label) == 1);
                CHECK(std::abs(pop.depth(p) - parent_depth[p.label]) == 1);
            }
        }
    }

    TEST_CASE("mean population size is m^n") {
        const auto env = TreeEnvironment::regular(2);
        const auto cfg = config("1:0.5,2:0.5", 1.0);
        const int n = 10;
        std::vector<double> sizes;
        for (std::uint64_t r = 0; r < 4000; ++r) {
            Population pop(env, cfg, 21, r);
            for (int g = 0; g < n; ++g) pop.branch_and_move();
            sizes.push_back(static_cast<double>(pop.particles().size()));
        }
        CHECK(std::abs(mean(sizes) - std::pow(1.5, n)) <= 3 * std_error(sizes));
    }

    TEST_CASE("killing at the root removes the expected fraction") {
        const auto env = TreeEnvironment::regular(2);
        const auto cfg = config("2:1", 1.0, WalkVariant::killed_at_root);
        std::vector<double> survivors;
        for (std::uint64_t r = 0; r < 10000; ++r) {
            Population pop(env, cfg, 5, r);
            pop.branch_and_move();
            survivors.push_back(static_cast<double>(pop.particles().size()) / 2.0);
        }
        CHECK(std::abs(mean(survivors) - 2.0 / 3.0) <= 3 * std_error(survivors));
    }

    TEST_CASE("the killed population is a subset of the standard one") {
        const auto env = TreeEnvironment::random(OffspringLaw::parse("1:0.5,2:0.5"), 3);
        for (std::uint64_t r = 0; r < 20; ++r) {
            Population standard(env, config("1:0.6,2:0.4", 2.0), 31, r);
            Population killed(env, config("1:0.6,2:0.4", 2.0, WalkVariant::killed_at_root), 31, r);
            for (int g = 0; g < 12; ++g) {
                standard.branch_and_move();
                killed.branch_and_move();
                const auto big = snapshot(standard), small = snapshot(killed);
                CHECK(std::includes(big.begin(), big.end(), small.begin(), small.end()));
            }
        }
    }

    TEST_CASE("population cap") {
        const auto env = TreeEnvironment::regular(2);
        auto cfg = config("2:1", 1.0);
        cfg.population_cap = 10;
        Population pop(env, cfg, 1);
        for (int g = 0; g < 3; ++g) pop.branch_and_move();
        CHECK(pop.particles().size() == 8);
        CHECK_THROWS_AS(pop.branch_and_move(), PopulationCapExceeded);
        CHECK(pop.particles().size() == 8);
        CHECK(pop.generation() == 3);

        const auto result = simulate(env, cfg, 10, 1);
        CHECK(result.truncated);
        CHECK(result.generations.size() == 4);
        CHECK_FALSE(result.diagnostic.empty());
    }

    TEST_CASE("simulation statistics") {
        const auto env = TreeEnvironment::regular(3);
        const auto result = simulate(env, config("1:0.5,2:0.5", 1.0), 15, 2);
        REQUIRE(result.generations.size() == 16);
        const auto& first = result.generations.front();
        CHECK(first.population_size == 1);
        CHECK(first.max_depth == 0);
        CHECK(first.min_depth == 0);
        for (const auto& g : result.generations) {
            long total = 0;
            for (const auto& [depth, count] : g.depth_histogram) total += count;
            CHECK(total == g.population_size);
            CHECK(g.min_depth <= g.max_depth);
            CHECK(g.max_depth <= g.generation);
            CHECK((g.max_depth - g.generation) % 2 == 0);
        }
        CHECK(simulation_csv(result).rfind("generation,size,max_depth,min_depth\n0,1,0,0\n", 0) == 0);
        CHECK(simulation_csv(simulate(env, config("1:0.5,2:0.5", 1.0), 15, 2)) == simulation_csv(result));
    }

    TEST_CASE("extinction under killing") {
        const auto env = TreeEnvironment::regular(1);
        auto cfg = single_walk(3.0);
        cfg.variant = WalkVariant::killed_at_root;
        const auto result = simulate(env, cfg, 500, 9);
        CHECK(result.extinct);
        CHECK(result.generations.back().population_size == 0);
        CHECK(result.generations.back().max_depth == -1);
    }

    TEST_CASE("many-to-one identity") {
        const auto reg = TreeEnvironment::regular(2);
        const auto exact = many_to_one_check(reg, OffspringLaw::point_mass(2), 1.0, 0, 6, 10, 1);
        CHECK(exact.lhs == 64.0);
        CHECK(exact.rhs == doctest::Approx(64.0));
        CHECK(exact.z == 0.0);

        const auto mc = many_to_one_check(reg, OffspringLaw::parse("1:0.5,2:0.5"), 1.0, 3, 6, 20000, 7);
        CHECK(mc.rhs_exact);
        CHECK(std::abs(mc.z) < 3.0);

        const auto bgw = TreeEnvironment::random(OffspringLaw::parse("2:0.5,3:0.5"), 2);
        const auto random = many_to_one_check(bgw, OffspringLaw::parse("1:0.5,2:0.5"), 1.0, 3, 6, 5000, 7);
        CHECK_FALSE(random.rhs_exact);
        CHECK(random.rhs_stderr > 0.0);
        CHECK(std::abs(random.z) < 3.0);

        CHECK_THROWS_AS(many_to_one_check(reg, OffspringLaw::point_mass(2), 1.0, 0, 25, 10, 1), ConfigError);
    }

    TEST_CASE("stopping lines are nested") {
        const auto env = TreeEnvironment::regular(4);
        const auto cfg = config("1:0.9,2:0.1", 1.0);
        for (std::uint64_t r = 0; r < 50; ++r) {
            const auto counts = stopping_line_counts(env, cfg, 10, 1.5, 3, 0, r);
            CHECK(counts.count_Lc_star <= counts.count_Lc);
            CHECK(counts.count_Lc <= counts.count_L);
            CHECK(counts.count_W_tilde <= counts.count_L);
            CHECK((counts.count_L == 0) == (counts.count_W_tilde == 0));
            CHECK(counts.generations_run <= 30);
        }
        for (std::uint64_t r = 0; r < 50; ++r) {
            const auto one = stopping_line_counts(env, single_walk(1.0), 10, 2.0, 3, 0, r);
            CHECK(one.count_L <= 1);
        }
    }

    TEST_CASE("with c = 1 only ballistic lineages count") {
        const auto env = TreeEnvironment::regular(2);
        const auto cfg = config("1:0.5,2:0.5", 1.0);
        const int n = 10;
        for (std::uint64_t r = 0; r < 30; ++r) {
            Population pop(env, cfg, 17, r);
            for (int g = 0; g < n; ++g) pop.branch_and_move();
            long at_level = 0;
            for (const auto& p : pop.particles()) at_level += pop.depth(p) == n;
            const auto counts = stopping_line_counts(env, cfg, n, 1.0, 17, 0, r);
            CHECK(counts.count_Lc == at_level);
            CHECK(counts.count_Lc_star == at_level);
        }
    }

    TEST_CASE("median distinct hit vertices grow with the level in the transient regime") {
        const auto env = TreeEnvironment::regular(4);
        const auto cfg = config("1:0.95,2:0.05", 1.0);
        double prev = -1.0;
        for (int n : {5, 10, 15, 20}) {
            std::vector<long> w;
            for (std::uint64_t r = 0; r < 101; ++r) w.push_back(stopping_line_counts(env, cfg, n, 2.0, 44, 0, r).count_W_tilde);
            std::nth_element(w.begin(), w.begin() + 50, w.end());
            const double median = static_cast<double>(w[50]);
            CAPTURE(n);
            CHECK(median >= prev);
            prev = median;
        }
    }

    TEST_CASE("time windows") {
        WindowedSpec spec;
        spec.n = 10;
        spec.a = 0.6;
        spec.epsilon = 0.1;
        CHECK(spec.window().lo == 15);
        CHECK(spec.window().hi == 16);
        spec.mode = WindowMode::min;
        spec.a = 0.4;
        CHECK(spec.window().lo == 25);
        CHECK(spec.window().hi == 33);
        spec.stage_budget = 40;
        CHECK(spec.window().hi == 40);
        spec.min_reading = MinWindowReading::literal;
        CHECK(spec.window().hi < spec.window().lo);

        WindowedSpec slow;
        slow.mode = WindowMode::min;
        slow.a = 0.1;
        slow.epsilon = 0.1;
        CHECK_THROWS_AS(slow.validate(), ConfigError);
        slow.stage_budget = 300;
        CHECK_NOTHROW(slow.validate());
        CHECK_THROWS_AS(WindowedSpec{.n = 0}.validate(), ConfigError);
    }

    TEST_CASE("windowed process on a single walk is the window indicator") {
        const auto env = TreeEnvironment::regular(2);
        const auto cfg = single_walk(1.0);
        WindowedSpec spec;
        spec.n = 10;
        spec.a = 0.5;
        spec.epsilon = 0.2;
        spec.stages = 1;
        const auto window = spec.window();
        int hits = 0;
        for (std::uint64_t r = 0; r < 300; ++r) {
            Population pop(env, cfg, 12, r);
            long first = -1;
            bool returned = false;
            for (long t = 1; t <= window.hi && first < 0 && !returned; ++t) {
                pop.branch_and_move();
                const int depth = pop.depth(pop.particles().front());
                if (depth == 0) returned = true;
                if (depth == spec.n) first = t;
            }
            const long expected = first >= window.lo ? 1 : 0;
            const auto run = windowed_process(env, cfg, spec, 12, r);
            REQUIRE(run.counts.size() == 2);
            CHECK(run.counts[1] == expected);
            hits += static_cast<int>(expected);
        }
        CHECK(hits > 0);
    }

    TEST_CASE("speeds above one never reach the next level") {
        const auto env = TreeEnvironment::regular(3);
        WindowedSpec spec;
        spec.n = 10;
        spec.a = 1.2;
        spec.epsilon = 0.1;
        for (std::uint64_t r = 0; r < 10; ++r) CHECK(windowed_process(env, config("2:1", 1.0), spec, 4, r).counts[1] == 0);
        CHECK(survival_probability(env, config("2:1", 1.0), spec, 10, 4).estimate == 0.0);
    }

    TEST_CASE("a wider window never lowers the counts") {
        const auto env = TreeEnvironment::regular(2);
        const auto cfg = config("1:0.9,2:0.1", 1.0);
        WindowedSpec narrow;
        narrow.n = 10;
        narrow.a = 0.6;
        narrow.epsilon = 0.1;
        narrow.stages = 3;
        narrow.stage_cap = 1'000'000;
        WindowedSpec wide = narrow;
        wide.a = 0.5;
        wide.epsilon = 0.2;
        REQUIRE(wide.window().lo <= narrow.window().lo);
        REQUIRE(wide.window().hi >= narrow.window().hi);
        for (std::uint64_t r = 0; r < 40; ++r) {
            const auto a = windowed_process(env, cfg, narrow, 8, r);
            const auto b = windowed_process(env, cfg, wide, 8, r);
            CHECK(b.counts.size() >= a.counts.size());
            for (std::size_t i = 0; i < a.counts.size(); ++i) CHECK(b.counts[i] >= a.counts[i]);
        }
    }

    TEST_CASE("the literal minimal window is empty") {
        WindowedSpec spec;
        spec.mode = WindowMode::min;
        spec.min_reading = MinWindowReading::literal;
        spec.n = 10;
        spec.a = 0.4;
        const auto env = TreeEnvironment::regular(4);
        for (std::uint64_t r = 0; r < 10; ++r) CHECK(windowed_process(env, config("2:1", 1.0), spec, 1, r).counts[1] == 0);
    }

    TEST_CASE("truncated replicas count as surviving") {
        const auto env = TreeEnvironment::regular(2);
        WindowedSpec spec;
        spec.n = 4;
        spec.a = 0.5;
        spec.epsilon = 0.5;
        spec.stages = 5;
        spec.stage_cap = 3;
        const auto est = survival_probability(env, config("2:1", 1.0), spec, 20, 6);
        CHECK(est.truncated > 0);
        long survived = 0;
        for (int s : est.stages_survived) survived += s == spec.stages;
        CHECK(survived >= est.truncated);
        CHECK(est.estimate == doctest::Approx(static_cast<double>(survived) / 20));
    }

    TEST_CASE("survival is identical in serial and parallel") {
        const auto env = TreeEnvironment::random(OffspringLaw::parse("2:0.5,3:0.5"), 5);
        WindowedSpec spec;
        spec.n = 8;
        spec.stages = 4;
        const auto cfg = config("1:0.7,2:0.3", 1.0);
        const auto a = survival_probability(env, cfg, spec, 40, 3, Exec::serial);
        const auto b = survival_probability(env, cfg, spec, 40, 3, Exec::parallel);
        CHECK(survival_csv(a) == survival_csv(b));
        CHECK(survival_csv(a).rfind("replica,stages_survived\n", 0) == 0);
    }
}
