#include "brwlab/brw.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace brwlab {

PopulationCapExceeded::PopulationCapExceeded(long attempted, long cap)
    : std::runtime_error("population cap exceeded: more than " + std::to_string(cap) + " particles (reached " +
                         std::to_string(attempted) + ")"),
      attempted_(attempted),
      cap_(cap) {}

void BrwConfig::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be a positive finite number");
    if (variant == WalkVariant::lazy_at_root) throw ConfigError("the BRW supports the standard and killed_at_root variants");
    if (population_cap < 1) throw ConfigError("population cap must be >= 1");
    if (branching_law.mean() < 1.0) throw ConfigError("branching law must have mean >= 1");
}

// ---------------------------------------------------------------------------
// Population

Population::Population(const TreeEnvironment& env, BrwConfig cfg, std::uint64_t seed, std::uint64_t replica)
    : cfg_(std::move(cfg)), arena_(env) {
    cfg_.validate();
    particles_.push_back({arena_.reset(), root_label(seed, replica)});
}

void Population::branch_and_move() {
    scratch_.clear();
    const auto cap = static_cast<std::size_t>(cfg_.population_cap);
    for (const auto& p : particles_) {
        branch_particle(arena_, cfg_, p, [&](std::uint64_t label, PathArena::Node node, int) {
            if (scratch_.size() >= cap) throw PopulationCapExceeded(static_cast<long>(scratch_.size()) + 1, cfg_.population_cap);
            scratch_.push_back({node, label});
        });
    }
    particles_.swap(scratch_);
    ++generation_;
}

GenerationStats Population::stats() const {
    GenerationStats out;
    out.generation = generation_;
    out.population_size = static_cast<long>(particles_.size());
    if (particles_.empty()) return out;
    std::vector<long> counts;
    for (const auto& p : particles_) {
        const auto h = static_cast<std::size_t>(arena_.depth(p.node));
        if (h >= counts.size()) counts.resize(h + 1, 0);
        ++counts[h];
    }
    for (std::size_t h = 0; h < counts.size(); ++h) {
        if (counts[h] == 0) continue;
        if (out.min_depth < 0) out.min_depth = static_cast<int>(h);
        out.max_depth = static_cast<int>(h);
        out.depth_histogram.emplace(static_cast<int>(h), counts[h]);
    }
    return out;
}

SimulationResult simulate(const TreeEnvironment& env, const BrwConfig& cfg, int generations, std::uint64_t seed,
                          std::uint64_t replica) {
    if (generations < 0) throw ConfigError("generations must be >= 0");
    Population pop(env, cfg, seed, replica);
    SimulationResult out;
    out.generations.push_back(pop.stats());
    while (pop.generation() < generations) {
        try {
            pop.branch_and_move();
        } catch (const PopulationCapExceeded& e) {
            out.truncated = true;
            out.diagnostic = e.what();
            break;
        }
        out.generations.push_back(pop.stats());
        if (pop.extinct()) {
            out.extinct = true;
            break;
        }
    }
    return out;
}

std::string simulation_csv(const SimulationResult& result) {
    std::string out = "generation,size,max_depth,min_depth\n";
    for (const auto& g : result.generations)
        out += std::to_string(g.generation) + ',' + std::to_string(g.population_size) + ',' +
               std::to_string(g.max_depth) + ',' + std::to_string(g.min_depth) + '\n';
    return out;
}

// ---------------------------------------------------------------------------
// Many-to-one

ManyToOneResult many_to_one_check(const TreeEnvironment& env, const OffspringLaw& mu, double lambda, int k, int n,
                                  long reps, std::uint64_t seed, Exec exec) {
    if (n < 0 || k < 0) throw ConfigError("n and k must be >= 0");
    if (reps < 2) throw ConfigError("many-to-one check needs reps >= 2");
    BrwConfig cfg;
    cfg.branching_law = mu;
    cfg.lambda = lambda;
    cfg.validate();
    const double growth = std::pow(mu.mean(), n);
    if (growth > static_cast<double>(cfg.population_cap)) throw ConfigError("m^n exceeds the population cap");

    std::vector<long> counts(static_cast<std::size_t>(reps));
    for_each_index(exec, reps, [&](std::int64_t r) {
        Population pop(env, cfg, seed, static_cast<std::uint64_t>(r));
        for (int g = 0; g < n; ++g) pop.branch_and_move();
        long c = 0;
        for (const auto& p : pop.particles()) c += pop.depth(p) >= k ? 1 : 0;
        counts[static_cast<std::size_t>(r)] = c;
    });

    ManyToOneResult out{};
    out.reps = reps;
    double sum = 0.0;
    for (long c : counts) sum += static_cast<double>(c);
    out.lhs = sum / static_cast<double>(reps);
    double ss = 0.0;
    for (long c : counts) ss += (static_cast<double>(c) - out.lhs) * (static_cast<double>(c) - out.lhs);
    out.lhs_stderr = std::sqrt(ss / static_cast<double>(reps - 1) / static_cast<double>(reps));

    if (env.fixed_degree() > 0) {
        const auto dist = distance_chain_distribution(env.fixed_degree(), lambda, n);
        double tail = 0.0;
        for (int h = std::max(k, 0); h <= n; ++h) tail += dist.probability[static_cast<std::size_t>(h)];
        out.rhs = growth * tail;
        out.rhs_exact = true;
    } else {
        const long walks = 10 * reps;
        const WalkConfig wcfg{lambda, WalkVariant::standard};
        const auto dist = empirical_depth_distribution(env, wcfg, n, walks, seed ^ lanes::kMove, exec);
        double tail = 0.0;
        for (int h = std::max(k, 0); h <= n; ++h) tail += dist.probability[static_cast<std::size_t>(h)];
        out.rhs = growth * tail;
        out.rhs_stderr = growth * std::sqrt(tail * (1.0 - tail) / static_cast<double>(walks));
        out.rhs_exact = false;
    }
    const double se = std::hypot(out.lhs_stderr, out.rhs_stderr);
    const double gap = out.lhs - out.rhs;
    const bool equal = std::abs(gap) <= 1e-9 * std::max(1.0, std::abs(out.rhs));
    out.z = se > 0.0 ? gap / se : (equal ? 0.0 : std::copysign(INFINITY, gap));
    return out;
}

// ---------------------------------------------------------------------------
// Stopping lines

StoppingLineCounts stopping_line_counts(const TreeEnvironment& env, const BrwConfig& cfg, int n, double c,
                                        std::uint64_t seed, int generation_budget, std::uint64_t replica) {
    cfg.validate();
    if (n < 1) throw ConfigError("stopping level n must be >= 1");
    if (!(c >= 1.0)) throw ConfigError("speed factor c must be >= 1");
    const long fast = static_cast<long>(std::floor(c * n + 1e-9));
    const int budget = generation_budget > 0 ? generation_budget : static_cast<int>(2 * std::ceil(c * n - 1e-9));

    struct Tracked {
        Particle p;
        bool returned;
    };
    PathArena arena(env);
    std::vector<Tracked> live{{{arena.reset(), root_label(seed, replica)}, false}}, next;
    std::unordered_set<VertexKey> hit_vertices;
    StoppingLineCounts out;
    const auto cap = static_cast<std::size_t>(cfg.population_cap);

    for (int g = 1; g <= budget && !live.empty(); ++g) {
        next.clear();
        for (const auto& t : live) {
            branch_particle(arena, cfg, t.p, [&](std::uint64_t label, PathArena::Node node, int depth) {
                const bool returned = t.returned || depth == 0;
                if (depth == n) {
                    ++out.count_L;
                    if (g <= fast) {
                        ++out.count_Lc;
                        if (!returned) ++out.count_Lc_star;
                    }
                    hit_vertices.insert(arena.key(node));
                    return;
                }
                next.push_back({{node, label}, returned});
            });
        }
        out.generations_run = g;
        if (next.size() > cap) {
            out.truncated = true;
            break;
        }
        live.swap(next);
    }
    out.count_W_tilde = static_cast<long>(hit_vertices.size());
    return out;
}

}  // namespace brwlab
