#include <CLI11.hpp>

#include "audit/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Black-box compliance auditing toolkit"};
    app.require_subcommand(1);

    audit::cli::CommonOptions options;
    std::uint64_t seed = 0;
    int workers = 0;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out-dir", options.out_dir, "Directory for report files");
        cmd->add_option("--format", options.format,
                        "Comma-separated artifact formats: json,markdown,csv");
        cmd->add_option("--seed", seed, "Override the config seed")->expected(1);
        cmd->add_option("--workers", workers, "Worker threads for parallel sections");
        cmd->add_flag("--strict,!--no-strict", options.strict,
                      "Reject unknown config keys (default on)");
    };

    std::string config_path, data_path;
    std::size_t simulate_trials = 400;

    CLI::App* run = app.add_subcommand("run", "Run an audit from a config file");
    run->add_option("--config", config_path, "Audit config (JSON)")->required();
    add_common(run);

    CLI::App* power = app.add_subcommand(
        "power", "Estimate FPR/TPR over a synthetic grid from a config file");
    power->add_option("--config", config_path, "Power config (JSON)")->required();
    add_common(power);

    CLI::App* ll144 = app.add_subcommand("ll144", "Run the LL144 bias-audit workflow");
    ll144->add_option("--data", data_path, "Historical data CSV")->required();
    ll144->add_option("--config", config_path, "LL144 config (JSON)")->required();
    add_common(ll144);

    CLI::App* simulate =
        app.add_subcommand("simulate", "Synthetic-zoo calibration suite");
    simulate->add_option("--trials", simulate_trials, "Monte Carlo trials per zoo point");
    add_common(simulate);

    CLI11_PARSE(app, argc, argv);

    for (CLI::App* cmd : {run, power, ll144, simulate}) {
        if (cmd->parsed()) {
            if (cmd->count("--seed") > 0) options.seed_override = seed;
            if (cmd->count("--workers") > 0) options.workers_override = workers;
        }
    }

    if (run->parsed()) return audit::cli::cmd_run(config_path, options);
    if (power->parsed()) return audit::cli::cmd_power(config_path, options);
    if (ll144->parsed()) return audit::cli::cmd_ll144(data_path, config_path, options);
    if (simulate->parsed()) return audit::cli::cmd_simulate(options, simulate_trials);
    return 2;
}
