#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "brwlab/harness.hpp"
#include "brwlab/ldp.hpp"
#include "brwlab/velocity.hpp"

namespace brwlab {

namespace {

constexpr double kNoBudget = 0.0;

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.8g", x);
    return buf;
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [FAIL]");
    }
};

// Fine-grid scan for the sign change of f on [lo, hi]; returns the midpoint of
// the first bracketing cell. Independent of the bisection solver.
double scan_root(const std::function<double(double)>& f, double lo, double hi, double step) {
    double x = lo, fx = f(lo);
    while (x < hi) {
        const double next = std::min(hi, x + step);
        const double fn = f(next);
        if ((fx <= 0.0) != (fn <= 0.0)) return 0.5 * (x + next);
        x = next;
        fx = fn;
    }
    return std::nan("");
}

double bernoulli_kl(double s, double t) {
    const auto term = [](double x, double y) { return x == 0.0 ? 0.0 : x * std::log(x / y); };
    return term(s, t) + term(1.0 - s, 1.0 - t);
}

Outcome rate_endpoints() {
    Outcome out;
    const auto rate = regular_rate(2, 1.0);
    const double at_v = rate(1.0 / 3.0);
    out.check(at_v <= 1e-12, "I(1/3)=" + num(at_v));
    out.check(std::abs(rate(1.0) - std::log(1.5)) <= 1e-12, "I(1)=" + num(rate(1.0)));
    const double zero = std::log(3.0 / (2.0 * std::sqrt(2.0)));
    out.check(std::abs(rate(0.0) - zero) <= 1e-12, "I(0)=" + num(rate(0.0)));
    const double one = rate_at_one(OffspringLaw::from_entries({{2, 0.5}, {3, 0.5}}), 1.0);
    out.check(std::abs(one - std::log(24.0 / 17.0)) <= 1e-12, "I(1){2:.5,3:.5}=" + num(one));
    return out;
}

Outcome velocity_solver() {
    Outcome out;
    const auto r2 = regular_rate(2, 1.0);
    const double saturated = max_velocity(r2, 1.6);
    out.check(saturated == 1.0, "v_max(m=1.6)=" + num(saturated));
    const double scan_max = scan_root([](double a) { return bernoulli_kl(0.5 * (1 + a), 2.0 / 3.0) - std::log(1.2); },
                                      1.0 / 3.0, 1.0, 1e-7);
    const double v_max = max_velocity(r2, 1.2);
    out.check(std::abs(v_max - scan_max) <= 1e-6, "v_max(m=1.2)=" + num(v_max) + " scan=" + num(scan_max));

    const auto r4 = regular_rate(4, 1.0);
    const auto law4 = OffspringLaw::point_mass(4);
    const auto critical = min_velocity(r4, law4, 1.0, 1.25);
    out.check(critical && *critical == 0.0, "v_min(m=1.25)=" + (critical ? num(*critical) : std::string("n/a")));
    const double scan_min = scan_root([](double a) { return std::log(1.1) - bernoulli_kl(0.5 * (1 + a), 0.8); },
                                      0.0, 0.6, 1e-7);
    const auto v_min = min_velocity(r4, law4, 1.0, 1.1);
    out.check(v_min && std::abs(*v_min - scan_min) <= 1e-6,
              "v_min(m=1.1)=" + (v_min ? num(*v_min) : std::string("n/a")) + " scan=" + num(scan_min));
    return out;
}

Outcome phase_classifier(Exec exec) {
    Outcome out;
    const auto law = OffspringLaw::point_mass(2);
    const PhaseGridSpec spec;
    const auto cells = phase_grid(law, spec, exec);
    long mismatches = 0, boundary = 0, transient_cells = 0;
    const auto formula = [](double lambda, double m) {
        return lambda < 2.0 && m <= (2.0 + lambda) / (2.0 * std::sqrt(2.0 * lambda));
    };
    const auto rho = [](double lambda) { return lambda >= 2.0 ? 1.0 : 2.0 * std::sqrt(2.0 * lambda) / (2.0 + lambda); };
    for (const auto& c : cells) {
        const bool transient = c.report.phase == BrwPhase::transient;
        transient_cells += transient ? 1 : 0;
        if (transient != formula(c.lambda, c.m) || c.report.spectral_radius != rho(c.lambda)) ++mismatches;
    }
    // Cells placed exactly on the boundary curve.
    for (int i = 0; i < spec.lambda_steps; ++i) {
        const double lambda = spec.lambda_at(i);
        if (lambda >= 2.0) continue;
        const double m = (2.0 + lambda) / (2.0 * std::sqrt(2.0 * lambda));
        if (!(m > 1.0)) continue;
        const auto report = classify(law, lambda, m);
        ++boundary;
        if (report.phase != BrwPhase::transient || !report.critical) ++mismatches;
    }
    out.check(cells.size() == 2500, std::to_string(cells.size()) + " grid cells");
    out.check(mismatches == 0, std::to_string(mismatches) + " mismatches over grid and " + std::to_string(boundary) +
                                   " boundary cells (" + std::to_string(transient_cells) + " transient)");
    return out;
}

struct Stage {
    int id;
    std::vector<ExperimentConfig> configs;
};

ExperimentConfig make(const std::string& name, std::uint64_t seed,
                      std::initializer_list<std::pair<const char*, const char*>> values, Exec exec) {
    ExperimentConfig cfg(name);
    cfg.set("seed", std::to_string(seed));
    cfg.set("exec", exec == Exec::serial ? "serial" : "parallel");
    for (const auto& [k, v] : values) cfg.set(k, v);
    return cfg;
}

// Experiment configurations behind criteria 4-11, with fixed seeds.
std::vector<ExperimentConfig> statistical_configs(int id, Exec exec) {
    switch (id) {
        case 4:
            return {make("speed-regular-2-1", 401,
                         {{"env", "regular:2"}, {"lambda", "1"}, {"steps", "100000"}, {"reps", "200"}, {"tolerance", "0.005"}},
                         exec)};
        case 5:
            return {make("dp-vs-mc", 501, {{"d", "2"}, {"lambda", "1"}, {"steps", "30"}, {"reps", "1000000"}}, exec)};
        case 6:
            return {make("spectral-slope", 0, {{"d", "4"}, {"lambda", "1"}, {"n_lo", "2000"}, {"n_hi", "4000"}}, exec),
                    make("spectral-slope", 0, {{"d", "2"}, {"lambda", "2"}, {"n_lo", "2000"}, {"n_hi", "4000"}}, exec)};
        case 7:
            return {make("many-to-one", 701,
                         {{"env", "regular:3"}, {"mu", "1:0.8,2:0.2"}, {"lambda", "1"}, {"n", "12"}, {"k", "8"}, {"reps", "10000"}},
                         exec)};
        case 8:
            return {make("rate-mc", 801,
                         {{"env", "regular:2"}, {"lambda", "1"}, {"a", "0.6"}, {"n", "60"}, {"reps", "1000000"}}, exec)};
        case 9:
            return {make("max-displacement", 901,
                         {{"env", "regular:2"}, {"mu", "1:0.8,2:0.2"}, {"lambda", "1"}, {"gens", "70"}, {"from", "60"},
                          {"to", "70"}, {"seeds", "20"}, {"cap", "2000000"}},
                         exec)};
        case 10:
            return {make("min-displacement", 1001,
                         {{"env", "regular:4"}, {"mu", "1:0.95,2:0.05"}, {"lambda", "1"}, {"gens", "250"}, {"from", "200"},
                          {"to", "250"}, {"seeds", "20"}, {"cap", "2000000"}},
                         exec)};
        case 11:
            return {make("windowed-survival", 1101,
                         {{"env", "regular:2"}, {"mu", "1:0.8,2:0.2"}, {"lambda", "1"}, {"n", "20"}, {"stages", "30"},
                          {"reps", "500"}, {"a", "0.6"}, {"eps", "0.1"}, {"mode", "max"}, {"min_survival", "0.02"}},
                         exec),
                    make("windowed-survival", 1102,
                         {{"env", "regular:2"}, {"mu", "1:0.8,2:0.2"}, {"lambda", "1"}, {"n", "20"}, {"stages", "30"},
                          {"reps", "500"}, {"a", "0.95"}, {"eps", "0.04"}, {"mode", "max"}, {"max_survival", "0.01"}},
                         exec)};
        default: return {};
    }
}

std::string describe(const ResultRecord& rec) {
    std::string out;
    for (const auto& m : rec.metrics) {
        if (!out.empty()) out += ", ";
        out += m.name + "=" + num(m.value) + " vs " + num(m.oracle) + (m.pass ? "" : " [FAIL]");
    }
    if (!rec.diagnostic.empty()) out += " (" + rec.diagnostic + ")";
    return out;
}

bool selected(std::string_view filter, const CriterionInfo& info) {
    if (filter.empty()) return true;
    while (!filter.empty()) {
        const auto comma = filter.find(',');
        const auto token = filter.substr(0, comma);
        if (!token.empty() && (token == std::to_string(info.id) || std::string_view(info.name).starts_with(token)))
            return true;
        if (comma == std::string_view::npos) break;
        filter.remove_prefix(comma + 1);
    }
    return false;
}

}  // namespace

const std::vector<CriterionInfo>& acceptance_criteria() {
    static const std::vector<CriterionInfo> table{
        {1, "rate-endpoints", 1.0},     {2, "velocity-solver", 5.0},   {3, "phase-classifier", 1.0},
        {4, "walk-speed", 30.0},        {5, "dp-vs-mc", 60.0},         {6, "spectral-slope", 30.0},
        {7, "many-to-one", 60.0},       {8, "mc-rate", 120.0},         {9, "max-displacement", 300.0},
        {10, "min-displacement", 300.0}, {11, "windowed-survival", 300.0}, {12, "determinism", kNoBudget},
    };
    return table;
}

AcceptanceSummary run_acceptance_suite(std::string_view filter, std::ostream& log, Exec exec) {
    AcceptanceSummary summary;
    std::map<int, std::vector<std::string>> first_csv;

    for (const auto& info : acceptance_criteria()) {
        if (!selected(filter, info)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            if (info.id == 1) {
                outcome = rate_endpoints();
            } else if (info.id == 2) {
                outcome = velocity_solver();
            } else if (info.id == 3) {
                outcome = phase_classifier(exec);
            } else if (info.id <= 11) {
                for (const auto& cfg : statistical_configs(info.id, exec)) {
                    const auto rec = run_experiment(cfg);
                    first_csv[info.id].push_back(rec.csv);
                    outcome.check(rec.passed(), describe(rec));
                }
            } else {
                long compared = 0, differing = 0;
                for (int id = 4; id <= 11; ++id) {
                    const auto configs = statistical_configs(id, exec);
                    for (std::size_t i = 0; i < configs.size(); ++i) {
                        const auto cached = first_csv.find(id);
                        const std::string first =
                            cached != first_csv.end() ? cached->second[i] : run_experiment(configs[i]).csv;
                        const std::string again = run_experiment(configs[i]).csv;
                        ++compared;
                        if (first != again) {
                            ++differing;
                            outcome.check(false, configs[i].name() + " CSV differs on rerun");
                        }
                    }
                }
                outcome.check(differing == 0, std::to_string(compared) + " CSVs compared, " +
                                                  std::to_string(differing) + " differ");
            }
        } catch (const std::exception& e) {
            outcome.check(false, std::string("error: ") + e.what());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (info.budget_seconds > 0.0)
            outcome.check(seconds < info.budget_seconds,
                          "runtime " + num(seconds) + " s < " + num(info.budget_seconds) + " s");
        CriterionResult result{info.id, info.name, outcome.pass, outcome.detail, seconds, info.budget_seconds};
        log << (result.pass ? "PASS" : "FAIL") << "  [" << result.id << "] " << result.name << ": " << result.detail
            << std::endl;
        summary.results.push_back(std::move(result));
    }
    log << (summary.all_passed() ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED") << " (" << summary.results.size()
        << " criteria)" << std::endl;
    return summary;
}

}  // namespace brwlab
