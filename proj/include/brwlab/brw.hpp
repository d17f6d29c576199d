#pragma once

// Branching random walk on a tree environment: generation stepping, extremal
// statistics, many-to-one checks, stopping lines and windowed first-passage
// processes.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "brwlab/env.hpp"
#include "brwlab/parallel.hpp"
#include "brwlab/rng.hpp"
#include "brwlab/walk.hpp"

namespace brwlab {

class PopulationCapExceeded : public std::runtime_error {
public:
    PopulationCapExceeded(long attempted, long cap);
    long attempted() const noexcept { return attempted_; }
    long cap() const noexcept { return cap_; }

private:
    long attempted_;
    long cap_;
};

struct BrwConfig {
    OffspringLaw branching_law = OffspringLaw::point_mass(2);
    double lambda = 1.0;
    WalkVariant variant = WalkVariant::standard;
    long population_cap = 2'000'000;

    /// Rejects the lazy variant, lambda <= 0, a cap < 1 and m < 1. The law
    /// {1: 1} is accepted so that a BRW can degenerate to a single walk.
    void validate() const;
    WalkConfig walk() const noexcept { return {lambda, variant}; }
};

/// A particle is a visit record in the owner's arena plus its genealogical
/// label. All randomness of the particle's children is keyed by the label, so
/// any two runs sharing a seed see the same family tree and the same moves.
struct Particle {
    PathArena::Node node;
    std::uint64_t label;
};

namespace lanes {
inline constexpr std::uint64_t kBrwRoot = 0xB12A0001ULL;
inline constexpr std::uint64_t kOffspring = 0xB12A0002ULL;
inline constexpr std::uint64_t kChild = 0xB12A0003ULL;
inline constexpr std::uint64_t kMove = 0xB12A0004ULL;
inline constexpr std::uint64_t kCoin = 0xB12A0005ULL;
}  // namespace lanes

inline std::uint64_t root_label(std::uint64_t seed, std::uint64_t replica) noexcept {
    return counter_hash(seed, lanes::kBrwRoot, replica);
}

inline std::uint64_t child_label(std::uint64_t label, int index) noexcept {
    return counter_hash(label, lanes::kChild, static_cast<std::uint64_t>(index));
}

/// Draws gamma ~ mu for the particle and moves each child one kernel step from
/// the particle's vertex. Calls emit(label, node, depth) for every child that
/// is not killed. A child stepping above a planted record gets node kNone.
template <class Emit>
void branch_particle(PathArena& arena, const BrwConfig& cfg, const Particle& p, Emit&& emit) {
    const int gamma = cfg.branching_law.sample(to_unit(hash_combine(p.label, lanes::kOffspring)));
    const int kappa = arena.child_count(p.node);
    const int depth = arena.depth(p.node);
    const bool at_root = depth == 0;
    const WalkConfig walk = cfg.walk();
    for (int j = 0; j < gamma; ++j) {
        const std::uint64_t label = child_label(p.label, j);
        StepDraw draw{to_unit(hash_combine(label, lanes::kMove)), 1.0};
        if (at_root && cfg.variant != WalkVariant::standard) draw.root_coin = to_unit(hash_combine(label, lanes::kCoin));
        const Move move = kernel_move(walk, at_root, kappa, draw);
        switch (move.kind) {
            case MoveKind::parent: emit(label, arena.parent(p.node), depth - 1); break;
            case MoveKind::child: emit(label, arena.descend(p.node, move.child), depth + 1); break;
            case MoveKind::stay: emit(label, p.node, depth); break;
            case MoveKind::cemetery: break;
        }
    }
}

struct GenerationStats {
    int generation = 0;
    long population_size = 0;
    int max_depth = -1;  // -1 for an empty population
    int min_depth = -1;
    std::map<int, long> depth_histogram;
};

/// One BRW population with its own arena, started from a single particle at the root.
class Population {
public:
    Population(const TreeEnvironment& env, BrwConfig cfg, std::uint64_t seed, std::uint64_t replica = 0);

    /// Advances one generation. Throws PopulationCapExceeded, leaving the
    /// population unchanged, when the new generation would exceed the cap.
    void branch_and_move();

    int generation() const noexcept { return generation_; }
    const std::vector<Particle>& particles() const noexcept { return particles_; }
    const PathArena& arena() const noexcept { return arena_; }
    const BrwConfig& config() const noexcept { return cfg_; }
    int depth(const Particle& p) const noexcept { return arena_.depth(p.node); }
    bool extinct() const noexcept { return particles_.empty(); }

    GenerationStats stats() const;

private:
    BrwConfig cfg_;
    PathArena arena_;
    std::vector<Particle> particles_;
    std::vector<Particle> scratch_;
    int generation_ = 0;
};

struct SimulationResult {
    std::vector<GenerationStats> generations;  // generation 0 first
    bool truncated = false;                    // population cap reached
    bool extinct = false;
    std::string diagnostic;
};

SimulationResult simulate(const TreeEnvironment& env, const BrwConfig& cfg, int generations, std::uint64_t seed,
                          std::uint64_t replica = 0);

/// Columns generation, size, max_depth, min_depth.
std::string simulation_csv(const SimulationResult& result);

struct ManyToOneResult {
    double lhs;          // mean of #{|u| = n : |X(u)| >= k}
    double lhs_stderr;
    double rhs;          // m^n P(|S_n| >= k)
    double rhs_stderr;   // 0 when exact
    double z;
    bool rhs_exact;      // depth-chain DP on regular trees, walk Monte Carlo otherwise
    long reps;
};

ManyToOneResult many_to_one_check(const TreeEnvironment& env, const OffspringLaw& mu, double lambda, int k, int n,
                                  long reps, std::uint64_t seed, Exec exec = Exec::parallel);

struct StoppingLineCounts {
    long count_L = 0;          // lineages first reaching depth n within the budget
    long count_Lc = 0;         // ... at generation <= c n
    long count_Lc_star = 0;    // ... and with no root visit after time 0
    long count_W_tilde = 0;    // distinct vertices among the L members
    bool truncated = false;    // population cap reached
    int generations_run = 0;
};

/// Particles are removed once they reach depth n. `generation_budget` = 0
/// means 2 ceil(c n).
StoppingLineCounts stopping_line_counts(const TreeEnvironment& env, const BrwConfig& cfg, int n, double c,
                                        std::uint64_t seed, int generation_budget = 0, std::uint64_t replica = 0);

// ---------------------------------------------------------------------------
// Windowed first-passage processes. Stage i starts from the particles that
// reached depth i n inside the time window; each starter runs its own sub-BRW
// with a local clock. Descendants that step to depth <= i n are dropped and a
// descendant reaching depth (i+1) n is kept iff its local time lies in the window.

enum class WindowMode { max, min };

/// slow: n/a <= t <= stage budget. literal: n/a <= t < n/(a+eps), which is
/// empty for eps > 0 and kept for comparison.
enum class MinWindowReading { slow, literal };

struct TimeWindow {
    long lo;  // accept local times t with lo <= t <= hi
    long hi;
};

struct WindowedSpec {
    int n = 20;
    double a = 0.6;
    double epsilon = 0.1;
    int stages = 30;
    WindowMode mode = WindowMode::max;
    MinWindowReading min_reading = MinWindowReading::slow;
    long stage_budget = 0;  // min mode upper cutoff; 0 means floor(n/(a-eps))
    long stage_cap = 1000;  // a stage with more starters ends the run as surviving

    void validate() const;
    TimeWindow window() const;
};

struct WindowedRun {
    std::vector<long> counts;  // Z_0 = 1, Z_1, ... up to the first zero or truncation
    bool truncated = false;
    int stages_survived = 0;
};

WindowedRun windowed_process(const TreeEnvironment& env, const BrwConfig& cfg, const WindowedSpec& spec,
                             std::uint64_t seed, std::uint64_t replica = 0);

struct SurvivalEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    long replicas = 0;
    long truncated = 0;
    std::vector<int> stages_survived;
};

SurvivalEstimate survival_probability(const TreeEnvironment& env, const BrwConfig& cfg, const WindowedSpec& spec,
                                      long replicas, std::uint64_t seed, Exec exec = Exec::parallel);

/// Columns replica, stages_survived.
std::string survival_csv(const SurvivalEstimate& estimate);

}  // namespace brwlab
