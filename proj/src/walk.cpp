#include "brwlab/walk.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "brwlab/rng.hpp"

namespace brwlab {

namespace {

constexpr std::uint64_t kWalkLane = 0x3A1C0FFEE5ULL;
constexpr std::uint64_t kAnnealLane = 0xA22EA1ULL;

std::uint64_t walk_stream(std::uint64_t seed, std::uint64_t replica) noexcept {
    return counter_hash(seed, kWalkLane, replica);
}

double lane_draw(std::uint64_t stream, std::uint64_t time, std::uint64_t lane) noexcept {
    return to_unit(hash_combine(stream, 2 * time + lane));
}

struct Moments {
    double mean = 0.0;
    double std_error = 0.0;
};

// Two-pass mean and standard error of the mean, summed in index order.
template <class Get>
Moments moments(long count, Get&& get) {
    Moments out;
    if (count <= 0) return out;
    double sum = 0.0;
    for (long i = 0; i < count; ++i) sum += get(i);
    out.mean = sum / static_cast<double>(count);
    if (count < 2) return out;
    double ss = 0.0;
    for (long i = 0; i < count; ++i) {
        const double dev = get(i) - out.mean;
        ss += dev * dev;
    }
    out.std_error = std::sqrt(ss / static_cast<double>(count - 1) / static_cast<double>(count));
    return out;
}

}  // namespace

WalkVariant parse_walk_variant(std::string_view name) {
    if (name == "standard") return WalkVariant::standard;
    if (name == "killed" || name == "killed_at_root" || name == "killed-root") return WalkVariant::killed_at_root;
    if (name == "lazy" || name == "lazy_at_root" || name == "lazy-root") return WalkVariant::lazy_at_root;
    throw ConfigError("unknown walk variant '" + std::string(name) + "' (standard|killed_at_root|lazy_at_root)");
}

std::string_view to_string(WalkVariant variant) noexcept {
    switch (variant) {
        case WalkVariant::standard: return "standard";
        case WalkVariant::killed_at_root: return "killed_at_root";
        case WalkVariant::lazy_at_root: return "lazy_at_root";
    }
    return "standard";
}

void WalkConfig::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be a positive finite number");
}

Move kernel_move(const WalkConfig& cfg, bool at_root, int child_count, StepDraw draw) noexcept {
    const double k = child_count;
    const double lam = cfg.lambda;
    if (at_root) {
        if (cfg.variant != WalkVariant::standard && draw.root_coin < lam / (lam + k))
            return {cfg.variant == WalkVariant::killed_at_root ? MoveKind::cemetery : MoveKind::stay};
        return {MoveKind::child, std::min(static_cast<int>(draw.move * k), child_count - 1)};
    }
    const double x = draw.move * (lam + k);
    if (x < lam) return {MoveKind::parent};
    return {MoveKind::child, std::min(static_cast<int>(x - lam), child_count - 1)};
}

double KernelRow::total() const noexcept {
    double sum = parent + stay + cemetery;
    for (double p : child) sum += p;
    return sum;
}

KernelRow kernel_row(const WalkConfig& cfg, bool at_root, int child_count) {
    cfg.validate();
    if (child_count < 1) throw ConfigError("child count must be >= 1");
    const double k = child_count;
    const double lam = cfg.lambda;
    KernelRow row;
    if (!at_root) {
        row.parent = lam / (lam + k);
        row.child.assign(static_cast<std::size_t>(child_count), 1.0 / (lam + k));
    } else if (cfg.variant == WalkVariant::standard) {
        row.child.assign(static_cast<std::size_t>(child_count), 1.0 / k);
    } else {
        (cfg.variant == WalkVariant::killed_at_root ? row.cemetery : row.stay) = lam / (lam + k);
        row.child.assign(static_cast<std::size_t>(child_count), 1.0 / (lam + k));
    }
    return row;
}

WalkPosition step(const TreeEnvironment& env, const WalkConfig& cfg, const VertexId& pos, StepDraw draw) {
    const Move move = kernel_move(cfg, pos.is_root(), env.child_count(pos), draw);
    switch (move.kind) {
        case MoveKind::parent: return pos.parent();
        case MoveKind::child: return pos.child(static_cast<std::uint32_t>(move.child + 1));
        case MoveKind::stay: return pos;
        case MoveKind::cemetery: return Cemetery{};
    }
    return pos;
}

StepDraw walk_draw(std::uint64_t seed, std::uint64_t replica, std::uint64_t time) noexcept {
    const auto stream = walk_stream(seed, replica);
    return {lane_draw(stream, time, 0), lane_draw(stream, time, 1)};
}

// ---------------------------------------------------------------------------
// Walker

Walker::Walker(const TreeEnvironment& env, WalkConfig cfg, std::uint64_t seed, std::uint64_t replica)
    : env_(&env), cfg_(cfg), stream_(walk_stream(seed, replica)) {
    cfg_.validate();
    frames_.reserve(256);
    frames_.push_back({kRootKey, env.child_count_at(kRootKey), 0});
}

MoveKind Walker::advance() {
    if (!alive_) return MoveKind::cemetery;
    const bool root = frames_.size() == 1;
    StepDraw draw{lane_draw(stream_, static_cast<std::uint64_t>(time_), 0), 1.0};
    if (root && cfg_.variant != WalkVariant::standard)
        draw.root_coin = lane_draw(stream_, static_cast<std::uint64_t>(time_), 1);
    const Frame& top = frames_.back();
    const Move move = kernel_move(cfg_, root, top.child_count, draw);
    ++time_;
    switch (move.kind) {
        case MoveKind::parent: frames_.pop_back(); break;
        case MoveKind::child: {
            const auto index = static_cast<std::uint32_t>(move.child + 1);
            const VertexKey key = child_key(top.key, index);
            frames_.push_back({key, env_->child_count_at(key), index});
            break;
        }
        case MoveKind::stay: break;
        case MoveKind::cemetery: alive_ = false; break;
    }
    return move.kind;
}

VertexId Walker::position() const {
    std::vector<std::uint32_t> path;
    path.reserve(frames_.size() - 1);
    for (std::size_t i = 1; i < frames_.size(); ++i) path.push_back(frames_[i].index);
    return VertexId(std::move(path));
}

// ---------------------------------------------------------------------------
// Trajectories and replica estimators

WalkOutcome run_walk(const TreeEnvironment& env, const WalkConfig& cfg, long n_steps, std::uint64_t seed,
                     std::uint64_t replica) {
    if (n_steps < 0) throw ConfigError("n_steps must be >= 0");
    Walker walker(env, cfg, seed, replica);
    WalkOutcome out{{0}, VertexId::root(), {0}, std::nullopt, std::nullopt};
    out.depths.reserve(static_cast<std::size_t>(n_steps) + 1);
    while (walker.time() < n_steps) {
        if (walker.advance() == MoveKind::cemetery) {
            out.killed_at = walker.time();
            break;
        }
        const int depth = walker.depth();
        out.depths.push_back(depth);
        if (depth == static_cast<int>(out.hit_times.size())) out.hit_times.push_back(walker.time());
        if (depth == 0 && !out.root_return) out.root_return = walker.time();
    }
    if (walker.alive())
        out.final_position = walker.position();
    else
        out.final_position = Cemetery{};
    return out;
}

TreeEnvironment replica_environment(const TreeEnvironment& env, EnvMode mode, std::uint64_t seed,
                                    std::uint64_t replica) {
    if (mode == EnvMode::quenched || env.is_regular()) return env;
    return env.with_seed(counter_hash(seed, kAnnealLane, replica));
}

SpeedEstimate estimate_speed(const TreeEnvironment& env, double lambda, long n_steps, long reps, std::uint64_t seed,
                             EnvMode mode, long checkpoint_every, Exec exec) {
    const WalkConfig cfg{lambda, WalkVariant::standard};
    cfg.validate();
    if (n_steps < 1) throw ConfigError("speed estimation needs n_steps >= 1");
    if (reps < 2) throw ConfigError("speed estimation needs reps >= 2");
    if (checkpoint_every < 0) throw ConfigError("checkpoint interval must be >= 0");

    SpeedEstimate out;
    if (checkpoint_every > 0)
        for (long t = checkpoint_every; t < n_steps; t += checkpoint_every) out.checkpoints.push_back(t);
    out.checkpoints.push_back(n_steps);
    const auto n_check = out.checkpoints.size();

    std::vector<int> depth(static_cast<std::size_t>(reps) * n_check);
    for_each_index(exec, reps, [&](std::int64_t r) {
        const TreeEnvironment local = replica_environment(env, mode, seed, static_cast<std::uint64_t>(r));
        Walker walker(local, cfg, seed, static_cast<std::uint64_t>(r));
        int* row = depth.data() + static_cast<std::size_t>(r) * n_check;
        std::size_t next = 0;
        while (next < n_check) {
            walker.advance();
            if (walker.time() == out.checkpoints[next]) row[next++] = walker.depth();
        }
    });

    for (std::size_t c = 0; c < n_check; ++c) {
        const auto m = moments(reps, [&](long r) { return depth[static_cast<std::size_t>(r) * n_check + c]; });
        out.depth_mean.push_back(m.mean);
        out.depth_stderr.push_back(m.std_error);
    }
    const double n = static_cast<double>(n_steps);
    out.mean = out.depth_mean.back() / n;
    out.std_error = out.depth_stderr.back() / n;
    return out;
}

std::vector<HittingEstimate> hitting_stats(const TreeEnvironment& env, const WalkConfig& cfg, int level,
                                           long max_steps, std::uint64_t seed, long reps,
                                           std::span<const double> c_values, Exec exec) {
    cfg.validate();
    if (level < 1) throw ConfigError("hitting level must be >= 1");
    if (max_steps < level) throw ConfigError("max_steps must be >= level");
    if (reps < 1) throw ConfigError("reps must be >= 1");

    // hit[r] = T_level when the level is reached before any root visit, else -1.
    std::vector<long> hit(static_cast<std::size_t>(reps), -1);
    for_each_index(exec, reps, [&](std::int64_t r) {
        Walker walker(env, cfg, seed, static_cast<std::uint64_t>(r));
        while (walker.time() < max_steps) {
            if (walker.advance() == MoveKind::cemetery || walker.at_root()) return;
            if (walker.depth() == level) {
                hit[static_cast<std::size_t>(r)] = walker.time();
                return;
            }
        }
    });

    std::vector<HittingEstimate> out;
    for (double c : c_values) {
        const long budget = std::min(max_steps, static_cast<long>(std::floor(c * level + 1e-9)));
        long successes = 0;
        for (long t : hit) successes += (t >= 0 && t <= budget) ? 1 : 0;
        const double p = static_cast<double>(successes) / static_cast<double>(reps);
        out.push_back({c, p, std::sqrt(p * (1.0 - p) / static_cast<double>(reps)), successes});
    }
    return out;
}

double DepthDistribution::total() const noexcept {
    double sum = cemetery;
    for (double p : probability) sum += p;
    return sum;
}

double total_variation(const DepthDistribution& a, const DepthDistribution& b) {
    const auto n = std::max(a.probability.size(), b.probability.size());
    double sum = std::abs(a.cemetery - b.cemetery);
    for (std::size_t i = 0; i < n; ++i) {
        const double pa = i < a.probability.size() ? a.probability[i] : 0.0;
        const double pb = i < b.probability.size() ? b.probability[i] : 0.0;
        sum += std::abs(pa - pb);
    }
    return 0.5 * sum;
}

DepthDistribution empirical_depth_distribution(const TreeEnvironment& env, const WalkConfig& cfg, long n_steps,
                                               long reps, std::uint64_t seed, Exec exec) {
    cfg.validate();
    if (n_steps < 0) throw ConfigError("n_steps must be >= 0");
    if (reps < 1) throw ConfigError("reps must be >= 1");
    std::vector<int> final_depth(static_cast<std::size_t>(reps));
    for_each_index(exec, reps, [&](std::int64_t r) {
        Walker walker(env, cfg, seed, static_cast<std::uint64_t>(r));
        while (walker.time() < n_steps && walker.alive()) walker.advance();
        final_depth[static_cast<std::size_t>(r)] = walker.alive() ? walker.depth() : -1;
    });
    std::vector<long> counts(static_cast<std::size_t>(n_steps) + 1, 0);
    long dead = 0;
    for (int h : final_depth) {
        if (h < 0)
            ++dead;
        else
            ++counts[static_cast<std::size_t>(h)];
    }
    DepthDistribution out;
    const double n = static_cast<double>(reps);
    for (long c : counts) out.probability.push_back(static_cast<double>(c) / n);
    out.cemetery = static_cast<double>(dead) / n;
    return out;
}

}  // namespace brwlab
