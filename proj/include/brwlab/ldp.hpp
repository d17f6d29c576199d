#pragma once

// Large-deviation rate functions for |S_n|/n: Bernoulli relative entropy, the
// closed form on regular trees, endpoint formulas for general laws, and Monte
// Carlo estimates.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "brwlab/env.hpp"
#include "brwlab/parallel.hpp"
#include "brwlab/walk.hpp"

namespace brwlab {

/// Bernoulli KL divergence s log(s/t) + (1-s) log((1-s)/(1-t)), with 0 log 0 = 0.
/// Returns +infinity when t is 0 or 1 and s != t.
double relative_entropy(double s, double t);

/// Rate function on [0, 1] anchored at its zero v_lambda.
class RateFunction {
public:
    enum class Kind { closed_form_regular, tabulated };
    enum class Source { closed, mc, interpolated };

    struct Point {
        double a;
        double value;
        Source source;
    };

    /// Closed form on the d-regular tree. For lambda <= d this is
    /// H((1+a)/2 | d/(d+lambda)). For lambda > d the walk is recurrent and the
    /// rate is the largest convex minorant through the origin of that entropy,
    /// a * min_{b in [a,1]} H((1+b)/2 | d/(d+lambda)) / b, which vanishes at 0.
    static RateFunction regular(int d, double lambda);

    /// Piecewise-linear rate through `points` (sorted by a, covering 0 and 1).
    static RateFunction tabulated(std::vector<Point> points, double v_lambda);

    double operator()(double a) const;

    Kind kind() const noexcept { return kind_; }
    double v_lambda() const noexcept { return v_lambda_; }
    int degree() const noexcept { return degree_; }
    double lambda() const noexcept { return lambda_; }
    std::span<const Point> points() const noexcept { return points_; }

    /// Provenance of the value at `a`: closed for the closed form; for a table,
    /// the weaker source of the two bracketing points.
    Source source_at(double a) const;

private:
    RateFunction() = default;

    Kind kind_ = Kind::closed_form_regular;
    double v_lambda_ = 0.0;
    int degree_ = 0;
    double lambda_ = 0.0;
    double up_ = 0.0;         // d/(d+lambda)
    double tangent_ = -1.0;   // contact point of the origin tangent, lambda > d only
    double slope_ = 0.0;      // slope of that tangent
    std::vector<Point> points_;
};

std::string_view to_string(RateFunction::Source source) noexcept;

RateFunction regular_rate(int d, double lambda);

/// -log sum_k k/(k+lambda) p_k.
double rate_at_one(const OffspringLaw& law, double lambda);

/// log((d_min+lambda)/(2 sqrt(lambda d_min))) for lambda < d_min, else 0.
double rate_at_zero(const OffspringLaw& law, double lambda);

struct McRateEstimate {
    double estimate;     // -(1/n) log(frequency); +inf with no successes
    bool reliable;       // at least kMinSuccesses successes
    long successes;
    long reps;
    bool upper_tail;     // event {|S_n| >= a n} rather than {|S_n| <= a n}
    double v_lambda;     // anchor used to pick the tail

    static constexpr long kMinSuccesses = 20;
};

/// Random environments are sampled afresh per replica (annealed) and the
/// anchor is the sample mean of |S_n|/n; regular trees use (d-lambda)/(d+lambda).
McRateEstimate mc_rate_estimate(const TreeEnvironment& env, double lambda, double a, long n, long reps,
                                std::uint64_t seed, Exec exec = Exec::parallel);

/// Final depths |S_n| of `reps` standard walks; annealed for random trees.
std::vector<int> final_depths(const TreeEnvironment& env, double lambda, long n, long reps, std::uint64_t seed,
                              Exec exec = Exec::parallel);

/// Tabulated rate on the grid a = i/(grid-1). Endpoints and the anchor are
/// closed-form; interior points are Monte Carlo where reliable and otherwise
/// linearly interpolated, then repaired to be monotone away from the anchor.
RateFunction tabulate_rate(const TreeEnvironment& env, double lambda, int grid, long n, long reps,
                           std::uint64_t seed, Exec exec = Exec::parallel);

}  // namespace brwlab
