#pragma once

// Velocities of the extremal particles, the spectral radius, and the
// recurrence/transience classification of (law, lambda, m).

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "brwlab/env.hpp"
#include "brwlab/ldp.hpp"
#include "brwlab/parallel.hpp"

namespace brwlab {

/// (d-lambda)/(d+lambda) clamped at 0.
double speed_regular(int d, double lambda);

/// sup{a in [v_lambda, 1] : I(a) <= log m}; exactly 1 when log m >= I(1).
double max_velocity(const RateFunction& rate, double m);

/// inf{a in [0, v_lambda] : I(a) <= log m}, or nullopt unless the BRW is
/// transient and d_min >= 2. Exactly 0 at m = critical_m.
std::optional<double> min_velocity(const RateFunction& rate, const OffspringLaw& law, double lambda, double m);

/// 1 for lambda >= d_min, else 2 sqrt(lambda d_min)/(d_min+lambda).
double spectral_radius(const OffspringLaw& law, double lambda);

/// (d_min+lambda)/(2 sqrt(lambda d_min)).
double critical_m(const OffspringLaw& law, double lambda);

enum class BrwPhase { transient, strongly_recurrent };
std::string_view to_string(BrwPhase phase) noexcept;

struct PhaseReport {
    bool walk_transient;   // lambda < mean of the environment law
    BrwPhase phase;
    bool critical;         // m equals critical_m, classified transient
    double spectral_radius;
    double critical_m;
    std::optional<double> v_lambda;
    std::optional<double> v_max;
    std::optional<double> v_min;
    std::string velocity_source;  // closed, tabulated, or none
};

/// Velocities come from the closed form for point-mass laws, from `rate` when
/// given, and are absent otherwise.
PhaseReport classify(const OffspringLaw& law, double lambda, double m, const RateFunction* rate = nullptr);

std::string phase_report_json(const PhaseReport& report, double lambda, double m);

struct PhaseGridSpec {
    double lambda_lo = 0.1;
    double lambda_hi = 3.0;
    int lambda_steps = 50;
    double m_lo = 1.001;
    double m_hi = 2.0;
    int m_steps = 50;

    double lambda_at(int i) const noexcept;
    double m_at(int j) const noexcept;
};

struct PhaseCell {
    double lambda;
    double m;
    PhaseReport report;
};

/// Row-major over lambda; rows are independent and may run in parallel.
std::vector<PhaseCell> phase_grid(const OffspringLaw& law, const PhaseGridSpec& spec, Exec exec = Exec::parallel);

/// Columns lambda, m, phase, rho, v_max, v_min, critical_m; absent values are empty.
std::string phase_grid_csv(const std::vector<PhaseCell>& cells);

}  // namespace brwlab
