#pragma once

// Named experiments, result records and the acceptance-suite runner.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "brwlab/parallel.hpp"

namespace brwlab {

/// Flat key=value configuration. '#' starts a comment; blank lines are ignored.
class ExperimentConfig {
public:
    ExperimentConfig() = default;
    explicit ExperimentConfig(std::string name) : name_(std::move(name)) {}

    static ExperimentConfig parse(std::string_view text);
    static ExperimentConfig load(const std::filesystem::path& path);

    /// Applies "key=value"; the key "name" renames the experiment.
    void apply_override(std::string_view assignment);
    void set(std::string key, std::string value);

    const std::string& name() const noexcept { return name_; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::string text(const std::string& key, const std::string& fallback) const;
    double real(const std::string& key, double fallback) const;
    long integer(const std::string& key, long fallback) const;
    std::uint64_t seed(std::uint64_t fallback) const;
    Exec exec() const;

    /// Sorted "key=value" lines, name first.
    std::string canonical() const;
    /// 16 hex digits identifying canonical().
    std::string digest() const;

private:
    std::string name_;
    std::map<std::string, std::string> values_;
};

/// Default seed: BRWLAB_SEED when set, else a fixed constant.
std::uint64_t default_seed();

enum class OracleTag { closed_form, dp_oracle, mc };
std::string_view to_string(OracleTag tag) noexcept;

/// A metric passes when oracle - tolerance_below <= value <= oracle + tolerance_above.
struct Metric {
    std::string name;
    double value = 0.0;
    double std_error = 0.0;
    double oracle = 0.0;
    double tolerance_below = 0.0;
    double tolerance_above = 0.0;
    bool pass = false;
    OracleTag tag = OracleTag::closed_form;

    static Metric within(std::string name, double value, double oracle, double tolerance, OracleTag tag,
                         double std_error = 0.0);
    static Metric band(std::string name, double value, double oracle, double below, double above, OracleTag tag,
                       double std_error = 0.0);
};

struct ResultRecord {
    std::string experiment;
    std::string config_digest;
    std::vector<Metric> metrics;
    std::string csv;             // canonical output, byte-stable for a fixed config
    std::string diagnostic;
    double wall_seconds = 0.0;

    bool passed() const;
    std::string to_json() const;
};

std::vector<std::string> experiment_names();

/// Runs a built-in experiment; unknown names and malformed parameters raise
/// ConfigError before any output is produced. When the config has `output`,
/// writes <output>/<name>.csv and <output>/<name>.json.
ResultRecord run_experiment(const ExperimentConfig& config);

struct CriterionResult {
    int id;
    std::string name;
    bool pass;
    std::string detail;
    double seconds;
    double budget_seconds;
};

struct AcceptanceSummary {
    std::vector<CriterionResult> results;

    bool all_passed() const;
    int exit_status() const { return all_passed() ? 0 : 1; }
};

struct CriterionInfo {
    int id;
    std::string name;
    double budget_seconds;
};

const std::vector<CriterionInfo>& acceptance_criteria();

/// Runs every criterion selected by `filter` and prints one line per criterion
/// to `log`. The filter is a comma-separated list of criterion ids or name
/// prefixes; empty selects all.
AcceptanceSummary run_acceptance_suite(std::string_view filter, std::ostream& log, Exec exec = Exec::parallel);

}  // namespace brwlab
