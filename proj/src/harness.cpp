#include "brwlab/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "brwlab/brw.hpp"
#include "brwlab/env.hpp"
#include "brwlab/ldp.hpp"
#include "brwlab/rng.hpp"
#include "brwlab/velocity.hpp"
#include "brwlab/walk.hpp"
#include "json.hpp"

namespace brwlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kFallbackSeed = 20240601;

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

double median(std::vector<double> xs) {
    if (xs.empty()) return std::nan("");
    std::sort(xs.begin(), xs.end());
    const auto mid = xs.size() / 2;
    return xs.size() % 2 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
}

}  // namespace

// ---------------------------------------------------------------------------
// ExperimentConfig

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
    ExperimentConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        if (line.find('=') == std::string::npos)
            throw ConfigError("config line " + std::to_string(number) + " is not key=value: '" + trim(line) + "'");
        cfg.apply_override(line);
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str());
}

void ExperimentConfig::apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void ExperimentConfig::set(std::string key, std::string value) {
    if (key.empty()) throw ConfigError("empty config key");
    if (key == "name")
        name_ = std::move(value);
    else
        values_[std::move(key)] = std::move(value);
}

std::string ExperimentConfig::text(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double ExperimentConfig::real(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const auto& s = it->second;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("config key '" + key + "' is not a number: '" + s + "'");
    return value;
}

long ExperimentConfig::integer(const std::string& key, long fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const double value = real(key, 0.0);
    if (value != std::floor(value) || std::abs(value) > 9e15)
        throw ConfigError("config key '" + key + "' is not an integer: '" + it->second + "'");
    return static_cast<long>(value);
}

std::uint64_t ExperimentConfig::seed(std::uint64_t fallback) const {
    const auto it = values_.find("seed");
    if (it == values_.end()) return fallback;
    std::uint64_t value = 0;
    const auto& s = it->second;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("seed is not an unsigned integer: '" + s + "'");
    return value;
}

Exec ExperimentConfig::exec() const {
    const auto mode = text("exec", "parallel");
    if (mode == "parallel") return Exec::parallel;
    if (mode == "serial") return Exec::serial;
    throw ConfigError("exec must be serial or parallel, got '" + mode + "'");
}

std::string ExperimentConfig::canonical() const {
    std::string out = "name=" + name_ + '\n';
    for (const auto& [key, value] : values_)
        if (key != "output" && key != "exec") out += key + '=' + value + '\n';
    return out;
}

std::string ExperimentConfig::digest() const {
    std::uint64_t h = 0x0DDBA11ULL;
    for (unsigned char c : canonical()) h = hash_combine(h, c);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("BRWLAB_SEED"); env && *env) {
        std::uint64_t value = 0;
        const std::string_view s(env);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
        if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("BRWLAB_SEED is not an unsigned integer");
        return value;
    }
    return kFallbackSeed;
}

// ---------------------------------------------------------------------------
// Metrics and records

std::string_view to_string(OracleTag tag) noexcept {
    switch (tag) {
        case OracleTag::closed_form: return "closed_form";
        case OracleTag::dp_oracle: return "dp_oracle";
        case OracleTag::mc: return "mc";
    }
    return "mc";
}

Metric Metric::within(std::string name, double value, double oracle, double tolerance, OracleTag tag, double std_error) {
    return band(std::move(name), value, oracle, tolerance, tolerance, tag, std_error);
}

Metric Metric::band(std::string name, double value, double oracle, double below, double above, OracleTag tag,
                    double std_error) {
    Metric m;
    m.name = std::move(name);
    m.value = value;
    m.std_error = std_error;
    m.oracle = oracle;
    m.tolerance_below = below;
    m.tolerance_above = above;
    m.tag = tag;
    m.pass = std::isfinite(value) && value >= oracle - below && value <= oracle + above;
    return m;
}

bool ResultRecord::passed() const {
    return diagnostic.empty() && std::all_of(metrics.begin(), metrics.end(), [](const Metric& m) { return m.pass; });
}

std::string ResultRecord::to_json() const {
    const auto finite_or_null = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["experiment"] = experiment;
    j["config_digest"] = config_digest;
    j["wall_seconds"] = wall_seconds;
    j["passed"] = passed();
    if (!diagnostic.empty()) j["diagnostic"] = diagnostic;
    j["metrics"] = nlohmann::json::array();
    for (const auto& m : metrics)
        j["metrics"].push_back({{"name", m.name},
                                {"value", finite_or_null(m.value)},
                                {"stderr", finite_or_null(m.std_error)},
                                {"oracle", finite_or_null(m.oracle)},
                                {"tolerance_below", finite_or_null(m.tolerance_below)},
                                {"tolerance_above", finite_or_null(m.tolerance_above)},
                                {"pass", m.pass},
                                {"oracle_tag", std::string(to_string(m.tag))}});
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Built-in experiments

namespace {

using Runner = std::function<void(const ExperimentConfig&, ResultRecord&)>;

OffspringLaw branching(const ExperimentConfig& cfg, const std::string& fallback) {
    return OffspringLaw::parse(cfg.text("mu", fallback));
}

int regular_degree(const TreeEnvironment& env, const char* experiment) {
    if (env.fixed_degree() < 1)
        throw ConfigError(std::string(experiment) + " needs a regular environment for its closed-form oracle");
    return env.fixed_degree();
}

void run_speed(const ExperimentConfig& cfg, ResultRecord& rec) {
    const auto env = TreeEnvironment::parse(cfg.text("env", "regular:2"));
    const double lambda = cfg.real("lambda", 1.0);
    const long steps = cfg.integer("steps", 100000);
    const long reps = cfg.integer("reps", 200);
    const auto mode = cfg.text("mode", "quenched");
    if (mode != "quenched" && mode != "annealed") throw ConfigError("mode must be quenched or annealed");
    const long every = cfg.integer("checkpoint", std::max(1L, steps / 10));
    const double tol = cfg.real("tolerance", 0.005);
    const auto est = estimate_speed(env, lambda, steps, reps, cfg.seed(default_seed()),
                                    mode == "annealed" ? EnvMode::annealed : EnvMode::quenched, every, cfg.exec());
    rec.csv = "step,depth_mean,depth_stderr\n";
    for (std::size_t i = 0; i < est.checkpoints.size(); ++i)
        rec.csv += std::to_string(est.checkpoints[i]) + ',' + num(est.depth_mean[i]) + ',' + num(est.depth_stderr[i]) + '\n';
    if (env.fixed_degree() > 0)
        rec.metrics.push_back(Metric::within("speed", est.mean, speed_regular(env.fixed_degree(), lambda), tol,
                                             OracleTag::closed_form, est.std_error));
    else
        rec.metrics.push_back(Metric::within("speed", est.mean, est.mean, kInf, OracleTag::mc, est.std_error));
}

void run_phase_figure(const ExperimentConfig& cfg, ResultRecord& rec) {
    const auto law = OffspringLaw::parse(cfg.text("law", "2:1"));
    PhaseGridSpec spec;
    spec.lambda_lo = cfg.real("lambda_lo", spec.lambda_lo);
    spec.lambda_hi = cfg.real("lambda_hi", spec.lambda_hi);
    spec.lambda_steps = static_cast<int>(cfg.integer("lambda_steps", spec.lambda_steps));
    spec.m_lo = cfg.real("m_lo", spec.m_lo);
    spec.m_hi = cfg.real("m_hi", spec.m_hi);
    spec.m_steps = static_cast<int>(cfg.integer("m_steps", spec.m_steps));
    const auto cells = phase_grid(law, spec, cfg.exec());
    rec.csv = phase_grid_csv(cells);
    const double d = law.d_min();
    long mismatches = 0;
    for (const auto& c : cells) {
        const bool transient = c.lambda < d && c.m <= (d + c.lambda) / (2.0 * std::sqrt(c.lambda * d));
        const double rho = c.lambda >= d ? 1.0 : 2.0 * std::sqrt(c.lambda * d) / (d + c.lambda);
        if (transient != (c.report.phase == BrwPhase::transient) || rho != c.report.spectral_radius) ++mismatches;
    }
    rec.metrics.push_back(Metric::within("formula_mismatches", static_cast<double>(mismatches), 0.0, 0.0,
                                         OracleTag::closed_form));
}

void run_dp_vs_mc(const ExperimentConfig& cfg, ResultRecord& rec) {
    const int d = static_cast<int>(cfg.integer("d", 2));
    const double lambda = cfg.real("lambda", 1.0);
    const int steps = static_cast<int>(cfg.integer("steps", 30));
    const long reps = cfg.integer("reps", 1000000);
    const auto variant = parse_walk_variant(cfg.text("variant", "standard"));
    const double tol = cfg.real("tolerance", 0.005);
    const auto dp = distance_chain_distribution(d, lambda, steps, variant);
    const auto mc = empirical_depth_distribution(TreeEnvironment::regular(d), {lambda, variant}, steps, reps,
                                                 cfg.seed(default_seed()), cfg.exec());
    rec.csv = "depth,dp,mc\n";
    for (int h = 0; h <= steps; ++h)
        rec.csv += std::to_string(h) + ',' + num(dp.probability[static_cast<std::size_t>(h)]) + ',' +
                   num(mc.probability[static_cast<std::size_t>(h)]) + '\n';
    rec.csv += "cemetery," + num(dp.cemetery) + ',' + num(mc.cemetery) + '\n';
    rec.metrics.push_back(Metric::band("total_variation", total_variation(dp, mc), 0.0, 0.0, tol, OracleTag::dp_oracle));
}

void run_spectral_slope(const ExperimentConfig& cfg, ResultRecord& rec) {
    const int d = static_cast<int>(cfg.integer("d", 4));
    const double lambda = cfg.real("lambda", 1.0);
    const int lo = static_cast<int>(cfg.integer("n_lo", 2000));
    const int hi = static_cast<int>(cfg.integer("n_hi", 4000));
    const double tol = cfg.real("tolerance", 0.02);
    const auto logp = log_return_probabilities(d, lambda, hi);
    const double slope = return_probability_slope(d, lambda, lo, hi);
    rec.csv = "n,log_return_probability\n";
    for (int n = lo + (lo % 2); n <= hi; n += 100) rec.csv += std::to_string(n) + ',' + num(logp[static_cast<std::size_t>(n)]) + '\n';
    const double rho = spectral_radius(OffspringLaw::unchecked_point_mass(d), lambda);
    rec.metrics.push_back(Metric::within("slope", slope, std::log(rho), tol, OracleTag::dp_oracle));
}

void run_many_to_one(const ExperimentConfig& cfg, ResultRecord& rec) {
    const auto env = TreeEnvironment::parse(cfg.text("env", "regular:3"));
    const auto mu = branching(cfg, "1:0.8,2:0.2");
    const auto res = many_to_one_check(env, mu, cfg.real("lambda", 1.0), static_cast<int>(cfg.integer("k", 8)),
                                       static_cast<int>(cfg.integer("n", 12)), cfg.integer("reps", 10000),
                                       cfg.seed(default_seed()), cfg.exec());
    rec.csv = "lhs,lhs_stderr,rhs,rhs_stderr,z,rhs_exact\n" + num(res.lhs) + ',' + num(res.lhs_stderr) + ',' +
              num(res.rhs) + ',' + num(res.rhs_stderr) + ',' + num(res.z) + ',' + (res.rhs_exact ? "1" : "0") + '\n';
    rec.metrics.push_back(Metric::within("z", res.z, 0.0, cfg.real("tolerance", 3.0),
                                         res.rhs_exact ? OracleTag::dp_oracle : OracleTag::mc));
}

void run_rate_mc(const ExperimentConfig& cfg, ResultRecord& rec) {
    const auto env = TreeEnvironment::parse(cfg.text("env", "regular:2"));
    const double lambda = cfg.real("lambda", 1.0);
    const double a = cfg.real("a", 0.6);
    const long n = cfg.integer("n", 60);
    const auto est = mc_rate_estimate(env, lambda, a, n, cfg.integer("reps", 1000000), cfg.seed(default_seed()),
                                      cfg.exec());
    rec.csv = "a,estimate,successes,reps,reliable\n" + num(a) + ',' + num(est.estimate) + ',' +
              std::to_string(est.successes) + ',' + std::to_string(est.reps) + ',' + (est.reliable ? "1" : "0") + '\n';
    const double oracle = regular_rate(regular_degree(env, "rate-mc"), lambda)(a);
    rec.metrics.push_back(Metric::within("rate", est.estimate, oracle, cfg.real("tolerance", 0.05), OracleTag::closed_form));
    rec.metrics.push_back(Metric::within("reliable", est.reliable ? 1.0 : 0.0, 1.0, 0.0, OracleTag::mc));
}

struct DisplacementRuns {
    std::vector<SimulationResult> runs;
    std::string diagnostic;
};

DisplacementRuns displacement_runs(const TreeEnvironment& env, const BrwConfig& bcfg, int gens, long seeds,
                                   std::uint64_t seed, Exec exec) {
    DisplacementRuns out;
    out.runs.resize(static_cast<std::size_t>(seeds));
    for_each_index(exec, seeds, [&](std::int64_t r) {
        out.runs[static_cast<std::size_t>(r)] = simulate(env, bcfg, gens, seed, static_cast<std::uint64_t>(r));
    });
    for (std::size_t r = 0; r < out.runs.size(); ++r)
        if (out.runs[r].truncated && out.diagnostic.empty())
            out.diagnostic = "replica " + std::to_string(r) + ": " + out.runs[r].diagnostic;
    return out;
}

void run_displacement(const ExperimentConfig& cfg, ResultRecord& rec, bool maximal) {
    const auto env = TreeEnvironment::parse(cfg.text("env", maximal ? "regular:2" : "regular:4"));
    BrwConfig bcfg;
    bcfg.branching_law = branching(cfg, maximal ? "1:0.8,2:0.2" : "1:0.95,2:0.05");
    bcfg.lambda = cfg.real("lambda", 1.0);
    bcfg.population_cap = cfg.integer("cap", 2000000);
    const int gens = static_cast<int>(cfg.integer("gens", maximal ? 70 : 250));
    const int from = static_cast<int>(cfg.integer("from", maximal ? 60 : 200));
    const int to = static_cast<int>(cfg.integer("to", gens));
    if (from < 1 || from > to || to > gens) throw ConfigError("window must satisfy 1 <= from <= to <= gens");
    const long seeds = cfg.integer("seeds", 20);
    const int d = regular_degree(env, maximal ? "max-displacement" : "min-displacement");
    const auto rate = regular_rate(d, bcfg.lambda);
    const double m = bcfg.branching_law.mean();
    double oracle = 0.0;
    if (maximal) {
        oracle = max_velocity(rate, m);
    } else {
        const auto v = min_velocity(rate, OffspringLaw::unchecked_point_mass(d), bcfg.lambda, m);
        if (!v) throw ConfigError("min-displacement needs a transient configuration with d >= 2");
        oracle = *v;
    }
    const auto res = displacement_runs(env, bcfg, gens, seeds, cfg.seed(default_seed()), cfg.exec());
    rec.diagnostic = res.diagnostic;

    rec.csv = std::string("replica,generation,size,") + (maximal ? "max_depth" : "min_depth") + ",ratio\n";
    std::vector<double> ratios;
    double lowest = kInf;
    for (std::size_t r = 0; r < res.runs.size(); ++r) {
        for (const auto& g : res.runs[r].generations) {
            if (g.generation < from || g.generation > to) continue;
            const int depth = maximal ? g.max_depth : g.min_depth;
            const double ratio = static_cast<double>(depth) / g.generation;
            ratios.push_back(ratio);
            lowest = std::min(lowest, ratio);
            rec.csv += std::to_string(r) + ',' + std::to_string(g.generation) + ',' + std::to_string(g.population_size) +
                       ',' + std::to_string(depth) + ',' + num(ratio) + '\n';
        }
    }
    const double below = cfg.real("below", maximal ? 0.10 : 0.12);
    const double above = cfg.real("above", maximal ? 0.05 : 0.12);
    rec.metrics.push_back(Metric::band("median_ratio", median(ratios), oracle, below, above, OracleTag::closed_form));
    if (!maximal) rec.metrics.push_back(Metric::band("lowest_ratio", lowest, oracle, below, kInf, OracleTag::closed_form));
}

void run_windowed(const ExperimentConfig& cfg, ResultRecord& rec) {
    const auto env = TreeEnvironment::parse(cfg.text("env", "regular:2"));
    BrwConfig bcfg;
    bcfg.branching_law = branching(cfg, "1:0.8,2:0.2");
    bcfg.lambda = cfg.real("lambda", 1.0);
    bcfg.variant = parse_walk_variant(cfg.text("variant", "standard"));
    bcfg.population_cap = cfg.integer("cap", 2000000);
    WindowedSpec spec;
    spec.n = static_cast<int>(cfg.integer("n", 20));
    spec.a = cfg.real("a", 0.6);
    spec.epsilon = cfg.real("eps", 0.1);
    spec.stages = static_cast<int>(cfg.integer("stages", 30));
    const auto mode = cfg.text("mode", "max");
    if (mode != "max" && mode != "min") throw ConfigError("mode must be max or min");
    spec.mode = mode == "max" ? WindowMode::max : WindowMode::min;
    const auto reading = cfg.text("min_reading", "slow");
    if (reading != "slow" && reading != "literal") throw ConfigError("min_reading must be slow or literal");
    spec.min_reading = reading == "slow" ? MinWindowReading::slow : MinWindowReading::literal;
    spec.stage_budget = cfg.integer("stage_budget", 0);
    spec.stage_cap = cfg.integer("stage_cap", 1000);
    if (cfg.has("min_survival") && cfg.has("max_survival")) throw ConfigError("set only one of min_survival and max_survival");
    const auto est = survival_probability(env, bcfg, spec, cfg.integer("reps", 500), cfg.seed(default_seed()), cfg.exec());
    rec.csv = survival_csv(est);
    if (cfg.has("max_survival"))
        rec.metrics.push_back(Metric::band("survival", est.estimate, cfg.real("max_survival", 0.0), kInf, 0.0,
                                           OracleTag::mc, est.std_error));
    else
        rec.metrics.push_back(Metric::band("survival", est.estimate, cfg.real("min_survival", 0.02), 0.0, kInf,
                                           OracleTag::mc, est.std_error));
}

const std::vector<std::pair<std::string, Runner>>& registry() {
    static const std::vector<std::pair<std::string, Runner>> table{
        {"speed-regular-2-1", run_speed},
        {"phase-figure", run_phase_figure},
        {"dp-vs-mc", run_dp_vs_mc},
        {"spectral-slope", run_spectral_slope},
        {"many-to-one", run_many_to_one},
        {"rate-mc", run_rate_mc},
        {"max-displacement", [](const ExperimentConfig& c, ResultRecord& r) { run_displacement(c, r, true); }},
        {"min-displacement", [](const ExperimentConfig& c, ResultRecord& r) { run_displacement(c, r, false); }},
        {"windowed-survival", run_windowed},
    };
    return table;
}

}  // namespace

std::vector<std::string> experiment_names() {
    std::vector<std::string> out;
    for (const auto& [name, runner] : registry()) out.push_back(name);
    return out;
}

ResultRecord run_experiment(const ExperimentConfig& config) {
    const auto& table = registry();
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == config.name(); });
    if (it == table.end()) throw ConfigError("unknown experiment '" + config.name() + "'");
    ResultRecord rec;
    rec.experiment = config.name();
    rec.config_digest = config.digest();
    const auto start = std::chrono::steady_clock::now();
    try {
        it->second(config, rec);
    } catch (const PopulationCapExceeded& e) {
        rec.diagnostic = e.what();
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (config.has("output")) {
        const std::filesystem::path dir = config.text("output", ".");
        std::filesystem::create_directories(dir);
        std::ofstream(dir / (rec.experiment + ".csv")) << rec.csv;
        std::ofstream(dir / (rec.experiment + ".json")) << rec.to_json() << '\n';
    }
    return rec;
}

bool AcceptanceSummary::all_passed() const {
    return std::all_of(results.begin(), results.end(), [](const CriterionResult& r) { return r.pass; });
}

}  // namespace brwlab
