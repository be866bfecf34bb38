#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "kexp/errors.hpp"
#include "kexp/experiment.hpp"
#include "kexp/mdp.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonFlags {
    std::string config;
    kexp::ConfigOverrides overrides;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
    auto* opt = cmd->add_option("--config", flags.config, "experiment config file");
    if (config_required) opt->required();
    cmd->add_option("--out", flags.overrides.output_dir, "output directory");
    cmd->add_option("--seed", flags.overrides.seed, "base seed for trial seeds");
    cmd->add_option("--trials", flags.overrides.trials, "number of trials");
    cmd->add_option("--budget", flags.overrides.budget, "environment steps per trial");
    cmd->add_option("--workers", flags.overrides.workers, "trials run concurrently");
    cmd->add_flag("--full-scale", flags.overrides.full_scale, "use full-size grids and budgets");
}

// Random 5-state 2-action MDP explored by the episodic planner with kappa = 2.
kexp::ExperimentConfig default_convergence_config() {
    kexp::ExperimentConfig cfg;
    cfg.environment.kind = "random";
    cfg.environment.n_states = 5;
    cfg.environment.n_actions = 2;
    cfg.environment.branching = 3;
    cfg.budget = 300000;
    cfg.n_trials = 1;
    kexp::ExplorerConfig x;
    x.algorithm = kexp::Algorithm::FrankWolfe;
    x.kappa = 2.0;
    x.eta = 0.01;
    x.tau1 = 50;
    cfg.policies.push_back({"fw", x});
    return cfg;
}

kexp::ExperimentConfig default_environment_config() {
    kexp::ExperimentConfig cfg;
    cfg.policies.push_back({"random", kexp::ExplorerConfig{.algorithm = kexp::Algorithm::Random}});
    return cfg;
}

kexp::ExperimentConfig resolve(const CommonFlags& flags, kexp::ExperimentConfig fallback) {
    kexp::ExperimentConfig cfg = flags.config.empty() ? std::move(fallback) : kexp::load_config(flags.config);
    kexp::apply_overrides(cfg, flags.overrides);
    return cfg;
}

std::string optional_text(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : "--"; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Complexity-weighted exploration of tabular MDPs"};
    app.require_subcommand(1);

    CommonFlags run_flags, compare_flags, converge_flags, export_flags;
    auto* run = app.add_subcommand("run", "run the first policy of a config");
    add_common(run, run_flags, true);
    auto* compare = app.add_subcommand("compare", "run every policy of a config and print a table");
    add_common(compare, compare_flags, true);
    auto* converge = app.add_subcommand("converge", "record the optimality gap of one run");
    add_common(converge, converge_flags, false);
    auto* export_env = app.add_subcommand("export-env", "write the environment kernel");
    add_common(export_env, export_flags, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) {
            const auto cfg = resolve(run_flags, {});
            const auto report = kexp::run_experiment(cfg);
            kexp::write_report_csv(std::cout, {report.summary()});
        } else if (*compare) {
            const auto cfg = resolve(compare_flags, {});
            std::cout << kexp::emit_table(kexp::run_comparison(cfg));
        } else if (*converge) {
            const auto cfg = resolve(converge_flags, default_convergence_config());
            const auto result = kexp::run_convergence(cfg);
            std::cout << fmt::format("points {}\nloglog_slope {}\n", result.trace.gap_history.size(),
                                     optional_text(result.slope));
        } else if (*export_env) {
            const auto cfg = resolve(export_flags, default_environment_config());
            const auto kernel = kexp::build_environment(cfg.environment);
            if (cfg.output_dir.empty()) {
                kexp::write_kernel(std::cout, kernel);
            } else {
                std::filesystem::create_directories(cfg.output_dir);
                const auto path = std::filesystem::path(cfg.output_dir) / "kernel.txt";
                kexp::save_kernel(path.string(), kernel);
                std::cout << path.string() << '\n';
            }
        }
    } catch (const kexp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
