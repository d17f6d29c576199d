// brwlab: command-line front end for the simulation and analysis library.
// Exit status: 0 success, 1 acceptance or experiment failure, 2 configuration error.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "brwlab/brw.hpp"
#include "brwlab/env.hpp"
#include "brwlab/harness.hpp"
#include "brwlab/ldp.hpp"
#include "brwlab/velocity.hpp"
#include "brwlab/walk.hpp"
#include "json.hpp"

using namespace brwlab;

namespace {

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

Exec exec_of(bool serial) { return serial ? Exec::serial : Exec::parallel; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and analysis lab for lambda-biased branching random walks on Galton-Watson trees"};
    app.require_subcommand(1);
    int status = 0;

    std::uint64_t seed = 0;
    try {
        seed = default_seed();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    bool serial = false;

    // walk ------------------------------------------------------------------
    auto* walk = app.add_subcommand("walk", "single lambda-biased walk")->require_subcommand(1);

    std::string env_spec = "regular:2";
    double lambda = 1.0;
    long steps = 100000, reps = 200, checkpoint = 0;
    std::string mode = "quenched";
    auto* speed = walk->add_subcommand("speed", "estimate |S_n|/n over replicas (CSV: step, depth_mean, depth_stderr)");
    speed->add_option("--env", env_spec, "regular:d or bgw:<law>:<seed>")->capture_default_str();
    speed->add_option("--lambda", lambda)->capture_default_str();
    speed->add_option("--steps", steps)->capture_default_str();
    speed->add_option("--reps", reps)->capture_default_str();
    speed->add_option("--seed", seed, "defaults to $BRWLAB_SEED");
    speed->add_option("--mode", mode, "quenched or annealed")->check(CLI::IsMember({"quenched", "annealed"}))->capture_default_str();
    speed->add_option("--checkpoint", checkpoint, "record every k steps (0: final only)");
    speed->add_flag("--serial", serial, "run replicas serially");
    speed->callback([&] {
        const auto env = TreeEnvironment::parse(env_spec);
        const auto est = estimate_speed(env, lambda, steps, reps, seed,
                                        mode == "annealed" ? EnvMode::annealed : EnvMode::quenched, checkpoint,
                                        exec_of(serial));
        std::cout << "step,depth_mean,depth_stderr\n";
        for (std::size_t i = 0; i < est.checkpoints.size(); ++i)
            std::cout << est.checkpoints[i] << ',' << num(est.depth_mean[i]) << ',' << num(est.depth_stderr[i]) << '\n';
        std::cerr << "speed " << num(est.mean) << " +- " << num(est.std_error) << '\n';
    });

    int degree = 2;
    int dp_steps = 30;
    bool absorb = false;
    std::string variant = "standard";
    auto* dp = walk->add_subcommand("dp", "exact depth distribution on the d-regular tree (CSV: depth, probability)");
    dp->add_option("--d", degree)->capture_default_str();
    dp->add_option("--lambda", lambda)->capture_default_str();
    dp->add_option("--steps", dp_steps)->capture_default_str();
    dp->add_flag("--absorb-root", absorb, "mass returning to the root stays there");
    dp->add_option("--variant", variant, "standard, killed_at_root or lazy_at_root")->capture_default_str();
    dp->callback([&] {
        const auto dist = distance_chain_distribution(degree, lambda, dp_steps, parse_walk_variant(variant), absorb);
        std::cout << "depth,probability\n";
        for (std::size_t h = 0; h < dist.probability.size(); ++h) std::cout << h << ',' << num(dist.probability[h]) << '\n';
        if (parse_walk_variant(variant) == WalkVariant::killed_at_root) std::cout << "cemetery," << num(dist.cemetery) << '\n';
    });

    // ldp -------------------------------------------------------------------
    auto* ldp = app.add_subcommand("ldp", "rate functions")->require_subcommand(1);
    bool closed_form = false;
    int grid = 21;
    long rate_n = 60, rate_reps = 100000;
    auto* rate = ldp->add_subcommand("rate", "tabulate I(a) on [0,1] (CSV: a, I_a, source)");
    rate->add_option("--env", env_spec)->capture_default_str();
    rate->add_option("--lambda", lambda)->capture_default_str();
    rate->add_flag("--closed-form", closed_form, "closed form (regular trees only)");
    rate->add_option("--grid", grid, "number of grid points")->capture_default_str();
    rate->add_option("--n", rate_n, "walk length for Monte Carlo points")->capture_default_str();
    rate->add_option("--reps", rate_reps)->capture_default_str();
    rate->add_option("--seed", seed);
    rate->add_flag("--serial", serial);
    rate->callback([&] {
        const auto env = TreeEnvironment::parse(env_spec);
        if (grid < 2) throw ConfigError("--grid must be >= 2");
        if (closed_form && env.fixed_degree() < 1) throw ConfigError("--closed-form needs a regular environment");
        const auto fn = closed_form ? regular_rate(env.fixed_degree(), lambda)
                                    : tabulate_rate(env, lambda, grid, rate_n, rate_reps, seed, exec_of(serial));
        std::cout << "a,I_a,source\n";
        if (closed_form) {
            for (int i = 0; i < grid; ++i) {
                const double a = static_cast<double>(i) / (grid - 1);
                std::cout << num(a) << ',' << num(fn(a)) << ",closed\n";
            }
        } else {
            for (const auto& p : fn.points()) std::cout << num(p.a) << ',' << num(p.value) << ',' << to_string(p.source) << '\n';
        }
    });

    // phase -----------------------------------------------------------------
    auto* phase = app.add_subcommand("phase", "phase classification")->require_subcommand(1);
    std::string law_spec = "2:1";
    double m = 1.05;
    auto* classify_cmd = phase->add_subcommand("classify", "JSON phase report");
    classify_cmd->add_option("--law", law_spec, "environment law k1:w1,k2:w2,...")->capture_default_str();
    classify_cmd->add_option("--lambda", lambda)->capture_default_str();
    classify_cmd->add_option("--m", m, "mean offspring of the BRW")->capture_default_str();
    classify_cmd->callback([&] {
        std::cout << phase_report_json(classify(OffspringLaw::parse(law_spec), lambda, m), lambda, m) << '\n';
    });

    PhaseGridSpec grid_spec;
    auto* grid_cmd = phase->add_subcommand("grid", "CSV: lambda, m, phase, rho, v_max, v_min, critical_m");
    grid_cmd->add_option("--law", law_spec)->capture_default_str();
    grid_cmd->add_option("--lambda-lo", grid_spec.lambda_lo)->capture_default_str();
    grid_cmd->add_option("--lambda-hi", grid_spec.lambda_hi)->capture_default_str();
    grid_cmd->add_option("--lambda-steps", grid_spec.lambda_steps)->capture_default_str();
    grid_cmd->add_option("--m-lo", grid_spec.m_lo)->capture_default_str();
    grid_cmd->add_option("--m-hi", grid_spec.m_hi)->capture_default_str();
    grid_cmd->add_option("--m-steps", grid_spec.m_steps)->capture_default_str();
    grid_cmd->add_flag("--serial", serial);
    grid_cmd->callback([&] {
        std::cout << phase_grid_csv(phase_grid(OffspringLaw::parse(law_spec), grid_spec, exec_of(serial)));
    });

    // brw -------------------------------------------------------------------
    auto* brw = app.add_subcommand("brw", "branching random walk")->require_subcommand(1);
    std::string mu_spec = "1:0.8,2:0.2";
    int gens = 30;
    long cap = 2000000;
    bool killed = false;
    auto* sim = brw->add_subcommand("simulate", "CSV: generation, size, max_depth, min_depth");
    sim->add_option("--env", env_spec)->capture_default_str();
    sim->add_option("--mu", mu_spec, "branching law")->capture_default_str();
    sim->add_option("--lambda", lambda)->capture_default_str();
    sim->add_option("--gens", gens)->capture_default_str();
    sim->add_option("--cap", cap)->capture_default_str();
    sim->add_option("--seed", seed);
    sim->add_flag("--killed-root", killed, "kill children of root particles with probability lambda/(lambda+k)");
    sim->callback([&] {
        BrwConfig cfg{OffspringLaw::parse(mu_spec), lambda,
                      killed ? WalkVariant::killed_at_root : WalkVariant::standard, cap};
        const auto res = simulate(TreeEnvironment::parse(env_spec), cfg, gens, seed);
        std::cout << simulation_csv(res);
        if (res.truncated) std::cerr << "truncated: " << res.diagnostic << '\n';
        if (res.extinct) std::cerr << "population extinct\n";
    });

    std::string window_mode = "max";
    WindowedSpec wspec;
    long wreps = 100;
    bool literal = false;
    auto* windowed = brw->add_subcommand("windowed", "CSV: replica, stages_survived");
    windowed->add_option("--env", env_spec)->capture_default_str();
    windowed->add_option("--mu", mu_spec)->capture_default_str();
    windowed->add_option("--lambda", lambda)->capture_default_str();
    windowed->add_option("--mode", window_mode)->check(CLI::IsMember({"max", "min"}))->capture_default_str();
    windowed->add_option("--a", wspec.a)->capture_default_str();
    windowed->add_option("--eps", wspec.epsilon)->capture_default_str();
    windowed->add_option("--n", wspec.n)->capture_default_str();
    windowed->add_option("--stages", wspec.stages)->capture_default_str();
    windowed->add_option("--reps", wreps)->capture_default_str();
    windowed->add_option("--stage-budget", wspec.stage_budget, "min mode upper cutoff (0: floor(n/(a-eps)))");
    windowed->add_option("--stage-cap", wspec.stage_cap)->capture_default_str();
    windowed->add_flag("--literal-min-window", literal, "min mode: n/a <= t < n/(a+eps)");
    windowed->add_option("--cap", cap)->capture_default_str();
    windowed->add_option("--seed", seed);
    windowed->add_flag("--serial", serial);
    windowed->callback([&] {
        wspec.mode = window_mode == "max" ? WindowMode::max : WindowMode::min;
        wspec.min_reading = literal ? MinWindowReading::literal : MinWindowReading::slow;
        BrwConfig cfg{OffspringLaw::parse(mu_spec), lambda, WalkVariant::standard, cap};
        const auto est = survival_probability(TreeEnvironment::parse(env_spec), cfg, wspec, wreps, seed, exec_of(serial));
        std::cout << survival_csv(est);
        std::cerr << "survival " << num(est.estimate) << " +- " << num(est.std_error) << " (" << est.truncated
                  << " truncated)\n";
    });

    int m2o_n = 12, m2o_k = 8;
    long m2o_reps = 10000;
    auto* m2o = brw->add_subcommand("m2o", "many-to-one check (JSON: lhs, rhs, z)");
    m2o->add_option("--env", env_spec)->capture_default_str();
    m2o->add_option("--mu", mu_spec)->capture_default_str();
    m2o->add_option("--lambda", lambda)->capture_default_str();
    m2o->add_option("--n", m2o_n)->capture_default_str();
    m2o->add_option("--k", m2o_k)->capture_default_str();
    m2o->add_option("--reps", m2o_reps)->capture_default_str();
    m2o->add_option("--seed", seed);
    m2o->add_flag("--serial", serial);
    m2o->callback([&] {
        const auto res = many_to_one_check(TreeEnvironment::parse(env_spec), OffspringLaw::parse(mu_spec), lambda, m2o_k,
                                           m2o_n, m2o_reps, seed, exec_of(serial));
        nlohmann::json j{{"lhs", res.lhs}, {"lhs_stderr", res.lhs_stderr}, {"rhs", res.rhs},
                         {"rhs_stderr", res.rhs_stderr}, {"z", res.z}, {"rhs_exact", res.rhs_exact}};
        std::cout << j.dump(2) << '\n';
    });

    // run / accept ------------------------------------------------------------
    std::string experiment, config_path, output;
    std::vector<std::string> overrides;
    auto* run = app.add_subcommand("run", "run a built-in experiment and print its JSON record");
    run->add_option("experiment", experiment, "experiment name")->required();
    run->add_option("--config", config_path, "key=value config file");
    run->add_option("--set", overrides, "key=value override (repeatable)");
    run->add_option("--output", output, "directory for <name>.csv and <name>.json");
    run->add_option("--seed", seed);
    run->callback([&] {
        auto cfg = config_path.empty() ? ExperimentConfig() : ExperimentConfig::load(config_path);
        cfg.set("name", experiment);
        if (!cfg.has("seed") || run->count("--seed")) cfg.set("seed", std::to_string(seed));
        for (const auto& o : overrides) cfg.apply_override(o);
        if (!output.empty()) cfg.set("output", output);
        const auto rec = run_experiment(cfg);
        std::cout << rec.to_json() << '\n';
        if (!rec.passed()) status = 1;
    });

    std::string filter;
    auto* accept = app.add_subcommand("accept", "run the acceptance suite");
    accept->add_option("--filter", filter, "comma-separated criterion ids or name prefixes");
    accept->add_flag("--serial", serial);
    accept->callback([&] { status = run_acceptance_suite(filter, std::cout, exec_of(serial)).exit_status(); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const PopulationCapExceeded& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return status;
}
