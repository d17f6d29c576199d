#include <cmath>
#include <limits>

#include "brwlab/walk.hpp"

namespace brwlab {

namespace {

void check_chain(int d, double lambda) {
    if (d < 1) throw ConfigError("degree must be >= 1");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be a positive finite number");
}

double log_add(double a, double b) noexcept {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace

DepthDistribution distance_chain_distribution(int d, double lambda, int n_steps, WalkVariant variant,
                                              bool absorb_at_root) {
    check_chain(d, lambda);
    if (n_steps < 0) throw ConfigError("n_steps must be >= 0");
    const double up = d / (d + lambda);
    const double down = lambda / (d + lambda);
    const auto size = static_cast<std::size_t>(n_steps) + 1;

    DepthDistribution dist;
    dist.probability.assign(size, 0.0);
    dist.probability[0] = 1.0;
    std::vector<double> next(size);
    for (int t = 0; t < n_steps; ++t) {
        std::fill(next.begin(), next.end(), 0.0);
        const auto& cur = dist.probability;
        // Depth never exceeds t, so the band [0, t] is exact.
        const auto reach = std::min<std::size_t>(static_cast<std::size_t>(t), size - 1);
        for (std::size_t h = 0; h <= reach; ++h) {
            const double mass = cur[h];
            if (mass == 0.0) continue;
            if (h == 0) {
                if (absorb_at_root && t > 0) {
                    next[0] += mass;
                    continue;
                }
                switch (variant) {
                    case WalkVariant::standard: next[1] += mass; break;
                    case WalkVariant::killed_at_root:
                        next[1] += mass * up;
                        dist.cemetery += mass * down;
                        break;
                    case WalkVariant::lazy_at_root:
                        next[1] += mass * up;
                        next[0] += mass * down;
                        break;
                }
                continue;
            }
            next[h + 1] += mass * up;
            next[h - 1] += mass * down;
        }
        dist.probability.swap(next);
    }
    return dist;
}

std::vector<double> log_return_probabilities(int d, double lambda, int n_max) {
    check_chain(d, lambda);
    if (n_max < 0) throw ConfigError("n_max must be >= 0");
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    const double log_up = std::log(d / (d + lambda));
    const double log_down = std::log(lambda / (d + lambda));
    // Only depths from which the root is still reachable by n_max matter.
    const auto band = static_cast<std::size_t>(n_max / 2) + 1;

    std::vector<double> cur(band + 1, kNegInf), next(band + 1, kNegInf);
    std::vector<double> out(static_cast<std::size_t>(n_max) + 1, kNegInf);
    cur[0] = 0.0;
    out[0] = 0.0;
    for (int t = 0; t < n_max; ++t) {
        std::fill(next.begin(), next.end(), kNegInf);
        for (std::size_t h = 0; h < band; ++h) {
            const double lp = cur[h];
            if (lp == kNegInf) continue;
            if (h == 0) {
                next[1] = log_add(next[1], lp);
            } else {
                next[h + 1] = log_add(next[h + 1], lp + log_up);
                next[h - 1] = log_add(next[h - 1], lp + log_down);
            }
        }
        cur.swap(next);
        out[static_cast<std::size_t>(t) + 1] = cur[0];
    }
    return out;
}

double return_probability(int d, double lambda, int n) {
    if (n < 0) throw ConfigError("n must be >= 0");
    if (n % 2 != 0) return 0.0;
    return std::exp(log_return_probabilities(d, lambda, n).back());
}

double return_probability_slope(int d, double lambda, int n_lo, int n_hi) {
    if (n_lo < 0 || n_hi < n_lo + 2) throw ConfigError("slope range needs at least two even points");
    const auto logp = log_return_probabilities(d, lambda, n_hi);
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    long count = 0;
    for (int n = n_lo + (n_lo % 2); n <= n_hi; n += 2) {
        const double x = n;
        const double y = logp[static_cast<std::size_t>(n)];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    const double c = static_cast<double>(count);
    return (c * sxy - sx * sy) / (c * sxx - sx * sx);
}

std::vector<double> first_passage_distribution(int d, double lambda, int level, long max_steps,
                                               WalkVariant variant) {
    check_chain(d, lambda);
    if (level < 0) throw ConfigError("level must be >= 0");
    if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
    const double up = d / (d + lambda);
    const double down = lambda / (d + lambda);

    std::vector<double> out(static_cast<std::size_t>(max_steps) + 1, 0.0);
    if (level == 0) {
        out[0] = 1.0;
        return out;
    }
    if (max_steps == 0) return out;
    // First step leaves the root; staying or dying there ends the event.
    const double first = variant == WalkVariant::standard ? 1.0 : up;
    if (level == 1) {
        out[1] = first;
        return out;
    }
    // Taboo chain on depths 1..level-1.
    std::vector<double> cur(static_cast<std::size_t>(level), 0.0), next(cur.size());
    cur[1] = first;
    for (long t = 2; t <= max_steps; ++t) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int h = 1; h < level; ++h) {
            const double mass = cur[static_cast<std::size_t>(h)];
            if (mass == 0.0) continue;
            if (h + 1 == level)
                out[static_cast<std::size_t>(t)] += mass * up;
            else
                next[static_cast<std::size_t>(h) + 1] += mass * up;
            if (h > 1) next[static_cast<std::size_t>(h) - 1] += mass * down;
        }
        cur.swap(next);
    }
    return out;
}

}  // namespace brwlab
