#include <cmath>

#include "brwlab/brw.hpp"

namespace brwlab {

void WindowedSpec::validate() const {
    if (n < 1) throw ConfigError("window level n must be >= 1");
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("window speed a must be > 0");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("window width eps must be > 0");
    if (stages < 1) throw ConfigError("stages must be >= 1");
    if (stage_cap < 1) throw ConfigError("stage cap must be >= 1");
    if (stage_budget < 0) throw ConfigError("stage budget must be >= 0");
    if (mode == WindowMode::min && min_reading == MinWindowReading::slow && stage_budget == 0 && !(a > epsilon))
        throw ConfigError("min mode with a <= eps needs an explicit stage budget");
}

TimeWindow WindowedSpec::window() const {
    validate();
    const double len = n;
    if (mode == WindowMode::max)
        return {static_cast<long>(std::floor(len / (a + epsilon) + 1e-9)) + 1,
                static_cast<long>(std::floor(len / a + 1e-9))};
    const long lo = static_cast<long>(std::ceil(len / a - 1e-9));
    if (min_reading == MinWindowReading::literal)
        return {lo, static_cast<long>(std::ceil(len / (a + epsilon) - 1e-9)) - 1};
    return {lo, stage_budget > 0 ? stage_budget : static_cast<long>(std::floor(len / (a - epsilon) + 1e-9))};
}

WindowedRun windowed_process(const TreeEnvironment& env, const BrwConfig& cfg, const WindowedSpec& spec,
                             std::uint64_t seed, std::uint64_t replica) {
    cfg.validate();
    const TimeWindow window = spec.window();

    struct Starter {
        VertexKey key;
        int depth;
        std::uint64_t label;
    };
    WindowedRun out;
    out.counts.push_back(1);
    std::vector<Starter> starters{{kRootKey, 0, root_label(seed, replica)}}, accepted;
    PathArena arena(env);
    std::vector<Particle> live, next;
    const auto cap = static_cast<std::size_t>(cfg.population_cap);

    for (int stage = 0; stage < spec.stages; ++stage) {
        if (static_cast<long>(starters.size()) > spec.stage_cap) {
            out.truncated = true;
            out.stages_survived = spec.stages;
            return out;
        }
        const int base = stage * spec.n;
        const int target = base + spec.n;
        accepted.clear();
        for (const auto& s : starters) {
            live.assign(1, {arena.reset_at(s.key, s.depth), s.label});
            for (long t = 1; t <= window.hi && !live.empty(); ++t) {
                next.clear();
                for (const auto& p : live) {
                    branch_particle(arena, cfg, p, [&](std::uint64_t label, PathArena::Node node, int depth) {
                        if (depth <= base) return;
                        if (depth == target) {
                            if (t >= window.lo) accepted.push_back({arena.key(node), depth, label});
                            return;
                        }
                        next.push_back({node, label});
                    });
                }
                if (next.size() > cap) throw PopulationCapExceeded(static_cast<long>(next.size()), cfg.population_cap);
                live.swap(next);
            }
        }
        out.counts.push_back(static_cast<long>(accepted.size()));
        if (accepted.empty()) return out;
        out.stages_survived = stage + 1;
        starters.swap(accepted);
    }
    return out;
}

SurvivalEstimate survival_probability(const TreeEnvironment& env, const BrwConfig& cfg, const WindowedSpec& spec,
                                      long replicas, std::uint64_t seed, Exec exec) {
    if (replicas < 1) throw ConfigError("replicas must be >= 1");
    spec.validate();
    std::vector<WindowedRun> runs(static_cast<std::size_t>(replicas));
    for_each_index(exec, replicas, [&](std::int64_t r) {
        runs[static_cast<std::size_t>(r)] = windowed_process(env, cfg, spec, seed, static_cast<std::uint64_t>(r));
    });
    SurvivalEstimate out;
    out.replicas = replicas;
    long survived = 0;
    for (const auto& run : runs) {
        out.stages_survived.push_back(run.stages_survived);
        out.truncated += run.truncated ? 1 : 0;
        survived += run.stages_survived == spec.stages ? 1 : 0;
    }
    const double n = static_cast<double>(replicas);
    out.estimate = static_cast<double>(survived) / n;
    out.std_error = std::sqrt(out.estimate * (1.0 - out.estimate) / n);
    return out;
}

std::string survival_csv(const SurvivalEstimate& estimate) {
    std::string out = "replica,stages_survived\n";
    for (std::size_t r = 0; r < estimate.stages_survived.size(); ++r)
        out += std::to_string(r) + ',' + std::to_string(estimate.stages_survived[r]) + '\n';
    return out;
}

}  // namespace brwlab
