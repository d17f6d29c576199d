#include "brwlab/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace brwlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double xlogy_ratio(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(x / y); }

void check_lambda(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be a positive finite number");
}

// Entropy branch J(b) = H((1+b)/2 | up) and its derivative in b.
double entropy_branch(double b, double up) { return relative_entropy(0.5 * (1.0 + b), up); }

double entropy_branch_slope(double b, double up) {
    const double s = 0.5 * (1.0 + b);
    return 0.5 * (std::log(s / up) - std::log((1.0 - s) / (1.0 - up)));
}

double closed_anchor(const TreeEnvironment& env, double lambda) {
    const int d = env.fixed_degree();
    return std::max(0.0, (d - lambda) / (d + lambda));
}

RateFunction::Source weaker(RateFunction::Source a, RateFunction::Source b) {
    return static_cast<int>(a) > static_cast<int>(b) ? a : b;
}

}  // namespace

double relative_entropy(double s, double t) {
    if (!(s >= 0.0 && s <= 1.0) || !(t >= 0.0 && t <= 1.0))
        throw std::domain_error("relative_entropy arguments must lie in [0, 1]");
    if (s == t) return 0.0;
    if (t == 0.0 || t == 1.0) return kInf;
    return xlogy_ratio(s, t) + xlogy_ratio(1.0 - s, 1.0 - t);
}

std::string_view to_string(RateFunction::Source source) noexcept {
    switch (source) {
        case RateFunction::Source::closed: return "closed";
        case RateFunction::Source::mc: return "mc";
        case RateFunction::Source::interpolated: return "interpolated";
    }
    return "closed";
}

RateFunction RateFunction::regular(int d, double lambda) {
    if (d < 1) throw ConfigError("degree must be >= 1");
    check_lambda(lambda);
    RateFunction rate;
    rate.kind_ = Kind::closed_form_regular;
    rate.degree_ = d;
    rate.lambda_ = lambda;
    rate.up_ = d / (d + lambda);
    rate.v_lambda_ = std::max(0.0, (d - lambda) / (d + lambda));
    if (lambda > d) {
        // b J'(b) - J(b) is increasing; its root is where the origin tangent touches J.
        double lo = 0.0, hi = 1.0;
        for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (mid * entropy_branch_slope(mid, rate.up_) - entropy_branch(mid, rate.up_) < 0.0)
                lo = mid;
            else
                hi = mid;
        }
        rate.tangent_ = 0.5 * (lo + hi);
        rate.slope_ = entropy_branch(rate.tangent_, rate.up_) / rate.tangent_;
    }
    return rate;
}

RateFunction RateFunction::tabulated(std::vector<Point> points, double v_lambda) {
    if (points.size() < 2) throw ConfigError("tabulated rate needs at least two points");
    std::sort(points.begin(), points.end(), [](const Point& x, const Point& y) { return x.a < y.a; });
    if (points.front().a != 0.0 || points.back().a != 1.0)
        throw ConfigError("tabulated rate must cover [0, 1]");
    for (const auto& p : points)
        if (!(p.value >= 0.0) || !std::isfinite(p.value)) throw ConfigError("tabulated rate values must be finite and >= 0");
    RateFunction rate;
    rate.kind_ = Kind::tabulated;
    rate.v_lambda_ = std::clamp(v_lambda, 0.0, 1.0);
    rate.points_ = std::move(points);
    return rate;
}

double RateFunction::operator()(double a) const {
    if (!(a >= -1e-15 && a <= 1.0 + 1e-15)) return kInf;
    a = std::clamp(a, 0.0, 1.0);
    if (kind_ == Kind::closed_form_regular) {
        if (tangent_ > 0.0 && a <= tangent_) return slope_ * a;
        return entropy_branch(a, up_);
    }
    const auto it = std::upper_bound(points_.begin(), points_.end(), a,
                                     [](double x, const Point& p) { return x < p.a; });
    if (it == points_.end()) return points_.back().value;
    const auto& right = *it;
    const auto& left = *(it - 1);
    const double w = (a - left.a) / (right.a - left.a);
    return left.value + w * (right.value - left.value);
}

RateFunction::Source RateFunction::source_at(double a) const {
    if (kind_ == Kind::closed_form_regular) return Source::closed;
    a = std::clamp(a, 0.0, 1.0);
    const auto it = std::lower_bound(points_.begin(), points_.end(), a,
                                     [](const Point& p, double x) { return p.a < x; });
    if (it == points_.end()) return points_.back().source;
    if (it->a == a || it == points_.begin()) return it->source;
    return weaker(it->source, (it - 1)->source);
}

RateFunction regular_rate(int d, double lambda) { return RateFunction::regular(d, lambda); }

double rate_at_one(const OffspringLaw& law, double lambda) {
    check_lambda(lambda);
    double sum = 0.0;
    for (const auto& atom : law.atoms()) sum += atom.count / (atom.count + lambda) * atom.probability;
    return -std::log(sum);
}

double rate_at_zero(const OffspringLaw& law, double lambda) {
    check_lambda(lambda);
    const double d = law.d_min();
    if (lambda >= d) return 0.0;
    return std::log((d + lambda) / (2.0 * std::sqrt(lambda * d)));
}

std::vector<int> final_depths(const TreeEnvironment& env, double lambda, long n, long reps, std::uint64_t seed,
                              Exec exec) {
    const WalkConfig cfg{lambda, WalkVariant::standard};
    cfg.validate();
    if (n < 1) throw ConfigError("n must be >= 1");
    if (reps < 1) throw ConfigError("reps must be >= 1");
    std::vector<int> out(static_cast<std::size_t>(reps));
    for_each_index(exec, reps, [&](std::int64_t r) {
        const auto replica = static_cast<std::uint64_t>(r);
        const TreeEnvironment local = replica_environment(env, EnvMode::annealed, seed, replica);
        Walker walker(local, cfg, seed, replica);
        while (walker.time() < n) walker.advance();
        out[static_cast<std::size_t>(r)] = walker.depth();
    });
    return out;
}

namespace {

double depth_anchor(const TreeEnvironment& env, double lambda, long n, const std::vector<int>& depths) {
    if (env.fixed_degree() > 0) return closed_anchor(env, lambda);
    double sum = 0.0;
    for (int h : depths) sum += h;
    return sum / static_cast<double>(depths.size()) / static_cast<double>(n);
}

McRateEstimate estimate_from_depths(const std::vector<int>& depths, double a, long n, double v) {
    McRateEstimate out{kInf, false, 0, static_cast<long>(depths.size()), a >= v, v};
    const double an = a * static_cast<double>(n);
    if (out.upper_tail) {
        const auto threshold = static_cast<long>(std::ceil(an - 1e-9));
        for (int h : depths) out.successes += h >= threshold ? 1 : 0;
    } else {
        const auto threshold = static_cast<long>(std::floor(an + 1e-9));
        for (int h : depths) out.successes += h <= threshold ? 1 : 0;
    }
    if (out.successes > 0) {
        const double freq = static_cast<double>(out.successes) / static_cast<double>(out.reps);
        out.estimate = -std::log(freq) / static_cast<double>(n);
    }
    out.reliable = out.successes >= McRateEstimate::kMinSuccesses;
    return out;
}

}  // namespace

McRateEstimate mc_rate_estimate(const TreeEnvironment& env, double lambda, double a, long n, long reps,
                                std::uint64_t seed, Exec exec) {
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("a must lie in [0, 1]");
    const auto depths = final_depths(env, lambda, n, reps, seed, exec);
    return estimate_from_depths(depths, a, n, depth_anchor(env, lambda, n, depths));
}

RateFunction tabulate_rate(const TreeEnvironment& env, double lambda, int grid, long n, long reps,
                           std::uint64_t seed, Exec exec) {
    using Source = RateFunction::Source;
    if (grid < 2) throw ConfigError("rate grid needs at least 2 points");
    const auto depths = final_depths(env, lambda, n, reps, seed, exec);
    const double v = std::clamp(depth_anchor(env, lambda, n, depths), 0.0, 1.0);
    const Source anchor_source = env.fixed_degree() > 0 ? Source::closed : Source::mc;
    const double at_zero = rate_at_zero(env.law(), lambda);
    const double at_one = rate_at_one(env.law(), lambda);
    const bool flat_below = lambda >= env.law().d_min();

    std::vector<RateFunction::Point> pts;
    for (int i = 0; i < grid; ++i) {
        const double a = static_cast<double>(i) / (grid - 1);
        if (i == 0) {
            pts.push_back({a, at_zero, Source::closed});
        } else if (i == grid - 1) {
            pts.push_back({a, at_one, Source::closed});
        } else if (std::abs(a - v) < 1e-12) {
            continue;
        } else if (a < v && flat_below) {
            pts.push_back({a, 0.0, Source::closed});
        } else {
            const auto est = estimate_from_depths(depths, a, n, v);
            if (est.reliable)
                pts.push_back({a, est.estimate, Source::mc});
            else
                pts.push_back({a, 0.0, Source::interpolated});
        }
    }
    if (v > 0.0 && v < 1.0) pts.push_back({v, 0.0, anchor_source});
    std::sort(pts.begin(), pts.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
    if (v == 0.0) pts.front().value = 0.0;
    if (v == 1.0) pts.back().value = 0.0;

    // Linear interpolation between the nearest known points.
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].source != Source::interpolated) continue;
        std::size_t lo = i, hi = i;
        while (pts[lo].source == Source::interpolated) --lo;
        while (pts[hi].source == Source::interpolated) ++hi;
        const double w = (pts[i].a - pts[lo].a) / (pts[hi].a - pts[lo].a);
        pts[i].value = pts[lo].value + w * (pts[hi].value - pts[lo].value);
    }

    // Monotone repair away from the anchor, bounded by the closed endpoints.
    const auto anchor = static_cast<std::size_t>(
        std::find_if(pts.begin(), pts.end(), [&](const auto& p) { return p.a >= v; }) - pts.begin());
    for (std::size_t i = anchor + 1; i < pts.size(); ++i)
        if (pts[i].source != Source::closed) pts[i].value = std::min(std::max(pts[i].value, pts[i - 1].value), at_one);
    for (std::size_t i = anchor; i-- > 0;)
        if (pts[i].source != Source::closed) pts[i].value = std::min(std::max(pts[i].value, pts[i + 1].value), at_zero);

    return RateFunction::tabulated(std::move(pts), v);
}

}  // namespace brwlab
