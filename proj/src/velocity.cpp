#include "brwlab/velocity.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace brwlab {

namespace {

constexpr int kBisectionSteps = 80;

void check_growth(double m) {
    if (!(m > 1.0) || !std::isfinite(m)) throw ConfigError("mean offspring m must be a finite number > 1");
}

void check_lambda(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be a positive finite number");
}

std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string format_optional(const std::optional<double>& x) { return x ? format_number(*x) : std::string(); }

}  // namespace

double speed_regular(int d, double lambda) {
    if (d < 1) throw ConfigError("degree must be >= 1");
    check_lambda(lambda);
    return std::max(0.0, (d - lambda) / (d + lambda));
}

double max_velocity(const RateFunction& rate, double m) {
    check_growth(m);
    const double target = std::log(m);
    if (target >= rate(1.0)) return 1.0;
    double lo = rate.v_lambda(), hi = 1.0;
    for (int i = 0; i < kBisectionSteps; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (rate(mid) <= target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double critical_m(const OffspringLaw& law, double lambda) {
    check_lambda(lambda);
    const double d = law.d_min();
    return (d + lambda) / (2.0 * std::sqrt(lambda * d));
}

double spectral_radius(const OffspringLaw& law, double lambda) {
    check_lambda(lambda);
    const double d = law.d_min();
    if (lambda >= d) return 1.0;
    return 2.0 * std::sqrt(lambda * d) / (d + lambda);
}

std::optional<double> min_velocity(const RateFunction& rate, const OffspringLaw& law, double lambda, double m) {
    check_growth(m);
    const double crit = critical_m(law, lambda);
    if (law.d_min() < 2 || lambda >= law.d_min() || m > crit) return std::nullopt;
    const double target = std::log(m);
    if (m == crit || rate(0.0) <= target) return 0.0;
    double lo = 0.0, hi = rate.v_lambda();
    for (int i = 0; i < kBisectionSteps; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (rate(mid) <= target)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

std::string_view to_string(BrwPhase phase) noexcept {
    return phase == BrwPhase::transient ? "transient" : "strongly_recurrent";
}

PhaseReport classify(const OffspringLaw& law, double lambda, double m, const RateFunction* rate) {
    check_lambda(lambda);
    check_growth(m);
    PhaseReport report{};
    report.walk_transient = lambda < law.mean();
    report.critical_m = critical_m(law, lambda);
    report.spectral_radius = spectral_radius(law, lambda);
    const bool transient = lambda < law.d_min() && m <= report.critical_m;
    report.phase = transient ? BrwPhase::transient : BrwPhase::strongly_recurrent;
    report.critical = transient && m == report.critical_m;

    std::optional<RateFunction> closed;
    if (law.is_point_mass()) closed = regular_rate(law.d_min(), lambda);
    const RateFunction* source = closed ? &*closed : rate;
    report.velocity_source = closed ? "closed" : (rate ? "tabulated" : "none");
    if (source) {
        report.v_lambda = source->v_lambda();
        report.v_max = max_velocity(*source, m);
        report.v_min = min_velocity(*source, law, lambda, m);
    }
    return report;
}

std::string phase_report_json(const PhaseReport& report, double lambda, double m) {
    std::ostringstream out;
    out << "{\"lambda\": " << format_number(lambda) << ", \"m\": " << format_number(m)
        << ", \"walk_transient\": " << (report.walk_transient ? "true" : "false") << ", \"phase\": \""
        << to_string(report.phase) << "\", \"critical\": " << (report.critical ? "true" : "false")
        << ", \"spectral_radius\": " << format_number(report.spectral_radius)
        << ", \"critical_m\": " << format_number(report.critical_m);
    const auto field = [&](const char* name, const std::optional<double>& x) {
        out << ", \"" << name << "\": " << (x ? format_number(*x) : std::string("null"));
    };
    field("v_lambda", report.v_lambda);
    field("v_max", report.v_max);
    field("v_min", report.v_min);
    out << ", \"velocity_source\": \"" << report.velocity_source << "\"}";
    return out.str();
}

double PhaseGridSpec::lambda_at(int i) const noexcept {
    return lambda_steps == 1 ? lambda_lo : lambda_lo + (lambda_hi - lambda_lo) * i / (lambda_steps - 1);
}

double PhaseGridSpec::m_at(int j) const noexcept {
    return m_steps == 1 ? m_lo : m_lo + (m_hi - m_lo) * j / (m_steps - 1);
}

std::vector<PhaseCell> phase_grid(const OffspringLaw& law, const PhaseGridSpec& spec, Exec exec) {
    if (spec.lambda_steps < 1 || spec.m_steps < 1) throw ConfigError("phase grid needs at least one step per axis");
    if (!(spec.lambda_lo > 0.0) || spec.lambda_hi < spec.lambda_lo) throw ConfigError("lambda range must be positive and ordered");
    if (!(spec.m_lo > 1.0) || spec.m_hi < spec.m_lo) throw ConfigError("m range must lie above 1 and be ordered");
    const auto cols = static_cast<std::size_t>(spec.m_steps);
    std::vector<PhaseCell> cells(static_cast<std::size_t>(spec.lambda_steps) * cols);
    for_each_index(exec, spec.lambda_steps, [&](std::int64_t i) {
        const double lambda = spec.lambda_at(static_cast<int>(i));
        for (int j = 0; j < spec.m_steps; ++j) {
            const double m = spec.m_at(j);
            cells[static_cast<std::size_t>(i) * cols + static_cast<std::size_t>(j)] = {lambda, m, classify(law, lambda, m)};
        }
    });
    return cells;
}

std::string phase_grid_csv(const std::vector<PhaseCell>& cells) {
    std::string out = "lambda,m,phase,rho,v_max,v_min,critical_m\n";
    for (const auto& cell : cells) {
        out += format_number(cell.lambda) + ',' + format_number(cell.m) + ',' + std::string(to_string(cell.report.phase)) +
               ',' + format_number(cell.report.spectral_radius) + ',' + format_optional(cell.report.v_max) + ',' +
               format_optional(cell.report.v_min) + ',' + format_number(cell.report.critical_m) + '\n';
    }
    return out;
}

}  // namespace brwlab
