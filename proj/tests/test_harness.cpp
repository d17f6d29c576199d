#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "brwlab/env.hpp"
#include "brwlab/harness.hpp"
#include "doctest.h"

using namespace brwlab;

namespace {

ExperimentConfig small(const std::string& name, std::initializer_list<const char*> overrides) {
    ExperimentConfig cfg(name);
    for (const auto* o : overrides) cfg.apply_override(o);
    return cfg;
}

std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("brwlab_test_" + tag);
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_SUITE("harness") {
    TEST_CASE("config parsing") {
        const auto cfg = ExperimentConfig::parse("name=dp-vs-mc\n# comment\n\nd = 3\nlambda=0.5 # trailing\n");
        CHECK(cfg.name() == "dp-vs-mc");
        CHECK(cfg.integer("d", 0) == 3);
        CHECK(cfg.real("lambda", 0.0) == 0.5);
        CHECK(cfg.text("variant", "standard") == "standard");
        CHECK_FALSE(cfg.has("variant"));
        CHECK(cfg.canonical() == "name=dp-vs-mc\nd=3\nlambda=0.5\n");
        CHECK_THROWS_AS(ExperimentConfig::parse("just words"), ConfigError);
        CHECK_THROWS_AS(cfg.integer("lambda", 0), ConfigError);
        CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/brwlab.cfg"), ConfigError);
    }

    TEST_CASE("overrides and digests") {
        auto a = ExperimentConfig::parse("name=rate-mc\na=0.6\n");
        auto b = ExperimentConfig::parse("a=0.6\nname=rate-mc\n");
        CHECK(a.digest() == b.digest());
        CHECK(a.digest().size() == 16);
        b.apply_override("a=0.7");
        CHECK(a.digest() != b.digest());
        b.apply_override("a=0.6");
        CHECK(a.digest() == b.digest());
        // Output location and execution policy do not identify the experiment.
        b.apply_override("output=/tmp/x");
        b.apply_override("exec=serial");
        CHECK(a.digest() == b.digest());
        CHECK(b.exec() == Exec::serial);
        b.apply_override("name=other");
        CHECK(b.name() == "other");
        CHECK_THROWS_AS(b.apply_override("no-equals"), ConfigError);
        CHECK_THROWS_AS(small("x", {"exec=sideways"}).exec(), ConfigError);
    }

    TEST_CASE("seeds") {
        CHECK(small("x", {"seed=42"}).seed(1) == 42);
        CHECK(small("x", {}).seed(9) == 9);
        ::unsetenv("BRWLAB_SEED");
        const auto fallback = default_seed();
        ::setenv("BRWLAB_SEED", "7", 1);
        CHECK(default_seed() == 7);
        ::setenv("BRWLAB_SEED", "junk", 1);
        CHECK_THROWS_AS(default_seed(), ConfigError);
        ::unsetenv("BRWLAB_SEED");
        CHECK(default_seed() == fallback);
    }

    TEST_CASE("metric bands") {
        const auto m = Metric::within("x", 1.04, 1.0, 0.05, OracleTag::closed_form);
        CHECK(m.pass);
        CHECK_FALSE(Metric::within("x", 1.06, 1.0, 0.05, OracleTag::closed_form).pass);
        CHECK(Metric::band("x", 0.91, 1.0, 0.1, 0.0, OracleTag::mc).pass);
        CHECK_FALSE(Metric::band("x", 1.01, 1.0, 0.1, 0.0, OracleTag::mc).pass);
        CHECK(to_string(OracleTag::dp_oracle) == "dp_oracle");
    }

    TEST_CASE("unknown experiments and malformed parameters") {
        CHECK_THROWS_AS(run_experiment(ExperimentConfig("no-such-experiment")), ConfigError);
        const auto dir = scratch_dir("bad");
        auto bad = small("phase-figure", {"law=0:0.1,2:0.9"});
        bad.set("output", dir.string());
        CHECK_THROWS_AS(run_experiment(bad), ConfigError);
        CHECK_FALSE(std::filesystem::exists(dir / "phase-figure.csv"));
    }

    TEST_CASE("every experiment is registered") {
        const auto names = experiment_names();
        for (const char* name : {"speed-regular-2-1", "phase-figure", "dp-vs-mc", "spectral-slope", "many-to-one",
                                 "rate-mc", "max-displacement", "min-displacement", "windowed-survival"})
            CHECK(std::find(names.begin(), names.end(), name) != names.end());
    }

    TEST_CASE("small experiments pass and are byte-stable") {
        const std::vector<ExperimentConfig> configs{
            small("speed-regular-2-1", {"steps=20000", "reps=40", "tolerance=0.02"}),
            small("phase-figure", {"lambda_steps=10", "m_steps=10"}),
            small("dp-vs-mc", {"reps=100000", "steps=20", "tolerance=0.01"}),
            small("spectral-slope", {"n_lo=500", "n_hi=1000", "tolerance=0.03"}),
            small("many-to-one", {"n=6", "k=3", "reps=4000"}),
            small("rate-mc", {"n=40", "a=0.6", "reps=100000", "tolerance=0.05"}),
            small("windowed-survival", {"a=1.2", "stages=2", "reps=20", "max_survival=0"}),
        };
        for (const auto& cfg : configs) {
            CAPTURE(cfg.name());
            const auto first = run_experiment(cfg);
            CHECK(first.passed());
            CHECK(first.config_digest == cfg.digest());
            CHECK_FALSE(first.csv.empty());
            auto serial = cfg;
            serial.set("exec", "serial");
            CHECK(run_experiment(serial).csv == first.csv);
        }
    }

    TEST_CASE("outputs are written as csv and json") {
        const auto dir = scratch_dir("out");
        auto cfg = small("dp-vs-mc", {"reps=20000", "steps=10", "tolerance=0.02"});
        cfg.set("output", dir.string());
        const auto rec = run_experiment(cfg);
        std::ifstream csv(dir / "dp-vs-mc.csv"), js(dir / "dp-vs-mc.json");
        REQUIRE(csv.good());
        REQUIRE(js.good());
        std::stringstream csv_text;
        csv_text << csv.rdbuf();
        CHECK(csv_text.str() == rec.csv);
        const auto doc = nlohmann::json::parse(js);
        CHECK(doc["experiment"] == "dp-vs-mc");
        CHECK(doc["config_digest"] == rec.config_digest);
        CHECK(doc["passed"] == rec.passed());
        REQUIRE(doc["metrics"].size() == rec.metrics.size());
        CHECK(doc["metrics"][0].contains("oracle_tag"));
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("acceptance catalogue and filters") {
        const auto& criteria = acceptance_criteria();
        REQUIRE(criteria.size() == 12);
        for (std::size_t i = 0; i < criteria.size(); ++i) CHECK(criteria[i].id == static_cast<int>(i) + 1);
        std::ostringstream log;
        const auto summary = run_acceptance_suite("rate-endpoints,3", log);
        REQUIRE(summary.results.size() == 2);
        CHECK(summary.results[0].id == 1);
        CHECK(summary.results[1].id == 3);
        CHECK(summary.all_passed());
        CHECK(summary.exit_status() == 0);
        CHECK(log.str().find("PASS  [1] rate-endpoints") != std::string::npos);
        CHECK(log.str().find("ACCEPTANCE PASSED (2 criteria)") != std::string::npos);
    }
}
