#pragma once

// The single-particle lambda-biased walk: kernel variants, trajectories,
// replica estimators, and exact depth-chain oracles on regular trees.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "brwlab/env.hpp"
#include "brwlab/parallel.hpp"

namespace brwlab {

/// standard: uniform child from the root. killed_at_root: from the root the
/// walker dies with probability lambda/(lambda+k). lazy_at_root: from the root
/// it stays put with that probability. Away from the root all three agree.
enum class WalkVariant { standard, killed_at_root, lazy_at_root };

WalkVariant parse_walk_variant(std::string_view name);
std::string_view to_string(WalkVariant variant) noexcept;

struct WalkConfig {
    double lambda = 1.0;
    WalkVariant variant = WalkVariant::standard;

    void validate() const;
};

/// Uniform draws consumed by one kernel step. `root_coin` is only read at the
/// root by the killed/lazy variants; `move` picks parent/child. Keeping the
/// coin separate couples the variants: they share the child choice and differ
/// only when the coin fires.
struct StepDraw {
    double move = 0.0;
    double root_coin = 1.0;
};

enum class MoveKind { parent, child, stay, cemetery };

struct Move {
    MoveKind kind;
    int child = -1;  // 0-based, valid for MoveKind::child

    friend bool operator==(const Move&, const Move&) = default;
};

Move kernel_move(const WalkConfig& cfg, bool at_root, int child_count, StepDraw draw) noexcept;

/// Transition probabilities out of one vertex.
struct KernelRow {
    double parent = 0.0;
    double stay = 0.0;
    double cemetery = 0.0;
    std::vector<double> child;

    double total() const noexcept;
};

KernelRow kernel_row(const WalkConfig& cfg, bool at_root, int child_count);

struct Cemetery {
    friend bool operator==(Cemetery, Cemetery) = default;
};
using WalkPosition = std::variant<VertexId, Cemetery>;

WalkPosition step(const TreeEnvironment& env, const WalkConfig& cfg, const VertexId& pos, StepDraw draw);

/// Draws for step `time` of replica `replica`; a pure function of its arguments.
StepDraw walk_draw(std::uint64_t seed, std::uint64_t replica, std::uint64_t time) noexcept;

/// Stateful walker over a path stack; the hot loop behind every walk kernel.
class Walker {
public:
    Walker(const TreeEnvironment& env, WalkConfig cfg, std::uint64_t seed, std::uint64_t replica);

    /// One kernel step with the draw for the current time. No-op once dead.
    MoveKind advance();

    int depth() const noexcept { return static_cast<int>(frames_.size()) - 1; }
    bool alive() const noexcept { return alive_; }
    bool at_root() const noexcept { return frames_.size() == 1; }
    long time() const noexcept { return time_; }
    VertexId position() const;

private:
    struct Frame {
        VertexKey key;
        int child_count;
        std::uint32_t index;
    };

    const TreeEnvironment* env_;
    WalkConfig cfg_;
    std::uint64_t stream_;
    std::vector<Frame> frames_;
    long time_ = 0;
    bool alive_ = true;
};

struct WalkOutcome {
    std::vector<int> depths;        // |S_0|, ..., up to n_steps or the killing step
    WalkPosition final_position;
    std::vector<long> hit_times;    // hit_times[level] = first k with |S_k| = level
    std::optional<long> root_return;
    std::optional<long> killed_at;  // step at which the walker entered the cemetery
};

WalkOutcome run_walk(const TreeEnvironment& env, const WalkConfig& cfg, long n_steps, std::uint64_t seed,
                     std::uint64_t replica = 0);

/// Quenched replicas share the given tree; annealed replicas each draw a fresh
/// tree from the same law (no effect on regular trees).
enum class EnvMode { quenched, annealed };

TreeEnvironment replica_environment(const TreeEnvironment& env, EnvMode mode, std::uint64_t seed,
                                    std::uint64_t replica);

struct SpeedEstimate {
    double mean = 0.0;    // mean of |S_n|/n over replicas
    double std_error = 0.0;  // standard error of that mean
    std::vector<long> checkpoints;
    std::vector<double> depth_mean;
    std::vector<double> depth_stderr;
};

/// `checkpoint_every` = 0 records only the final step.
SpeedEstimate estimate_speed(const TreeEnvironment& env, double lambda, long n_steps, long reps, std::uint64_t seed,
                             EnvMode mode = EnvMode::quenched, long checkpoint_every = 0,
                             Exec exec = Exec::parallel);

struct HittingEstimate {
    double c;
    double probability;
    double std_error;
    long successes;
};

/// Fraction of replicas with T_level <= min(c*level, max_steps) and no visit to
/// the root at any time in (0, T_level]. Truncation at max_steps is a failure.
std::vector<HittingEstimate> hitting_stats(const TreeEnvironment& env, const WalkConfig& cfg, int level,
                                           long max_steps, std::uint64_t seed, long reps,
                                           std::span<const double> c_values, Exec exec = Exec::parallel);

/// Distribution of |S_n| over depths 0..n plus cemetery mass.
struct DepthDistribution {
    std::vector<double> probability;
    double cemetery = 0.0;

    double total() const noexcept;
};

double total_variation(const DepthDistribution& a, const DepthDistribution& b);

/// Monte Carlo counterpart of distance_chain_distribution.
DepthDistribution empirical_depth_distribution(const TreeEnvironment& env, const WalkConfig& cfg, long n_steps,
                                               long reps, std::uint64_t seed, Exec exec = Exec::parallel);

// ---------------------------------------------------------------------------
// Exact oracles on the d-regular tree, where |S_n| is a birth-death chain
// with up-probability d/(d+lambda) away from the root.

/// With `absorb_at_root`, mass that returns to depth 0 after time 0 stays there.
DepthDistribution distance_chain_distribution(int d, double lambda, int n_steps,
                                              WalkVariant variant = WalkVariant::standard,
                                              bool absorb_at_root = false);

/// log P(S_n = root) for n = 0..n_max (standard variant); -inf at odd n.
std::vector<double> log_return_probabilities(int d, double lambda, int n_max);

/// P(S_n = root); 0 at odd n. Underflows to 0 for very large n, use the log form.
double return_probability(int d, double lambda, int n);

/// Least-squares slope of log P(S_n = root) against n over even n in [n_lo, n_hi].
double return_probability_slope(int d, double lambda, int n_lo, int n_hi);

/// P(T_level = t and no root visit in (0, t]) for t = 0..max_steps.
std::vector<double> first_passage_distribution(int d, double lambda, int level, long max_steps,
                                               WalkVariant variant = WalkVariant::standard);

}  // namespace brwlab
