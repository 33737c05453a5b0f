#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#ifdef SMELAB_HAS_OPENMP
#include <omp.h>
#endif

#include "smelab/config.hpp"
#include "smelab/experiments.hpp"
#include "smelab/types.hpp"

namespace {

struct CommandArgs {
    std::string config_path;
    smelab::CliOverrides overrides;
    int threads = 0;
};

void add_common_flags(CLI::App* cmd, CommandArgs& args, bool with_config) {
    if (with_config)
        cmd->add_option("-c,--config", args.config_path,
                        "Config file (key = value sections or JSON; a manifest re-runs itself)")
            ->required();
    cmd->add_option("--seed", args.overrides.seed, "Override the config seed");
    cmd->add_option("--out", args.overrides.out_dir, "Output directory for artifacts");
    cmd->add_option("--replicas", args.overrides.replicas, "Override the replica count");
    cmd->add_option("--threads", args.threads, "Worker threads for ensemble execution");
}

void apply_threads(int threads) {
    if (threads <= 0) return;
#ifdef SMELAB_HAS_OPENMP
    omp_set_num_threads(threads);
#else
    std::cerr << "warning: built without OpenMP; --threads has no effect\n";
#endif
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"smelab: SGD dynamics, stochastic modified equations, and"
                 " control-derived adaptive optimizers"};
    app.set_version_flag("--version", std::string(smelab::kVersion));
    app.require_subcommand(1);

    std::string figure_name;
    CommandArgs figure_args, simulate_args, train_args, sweep_args;

    CLI::App* figure =
        app.add_subcommand("figure", "Run a pinned desk-scale figure configuration");
    figure->add_option("name", figure_name, "One of: fig1, fig2, fig4, sm-fig7")->required();
    add_common_flags(figure, figure_args, false);

    CLI::App* simulate =
        app.add_subcommand("simulate", "Simulate an optimizer or its modified equation");
    add_common_flags(simulate, simulate_args, true);

    CLI::App* train = app.add_subcommand("train", "Train a named optimizer on an objective");
    add_common_flags(train, train_args, true);

    CLI::App* sweep = app.add_subcommand("sweep", "Run a learning-rate sweep per optimizer");
    add_common_flags(sweep, sweep_args, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (figure->parsed()) {
            figure_args.overrides.has_seed = figure->count("--seed") > 0;
            apply_threads(figure_args.threads);
            return smelab::cmd_figure(figure_name, figure_args.overrides);
        }
        if (simulate->parsed()) {
            simulate_args.overrides.has_seed = simulate->count("--seed") > 0;
            apply_threads(simulate_args.threads);
            const smelab::Json config = smelab::load_config_file(simulate_args.config_path);
            return smelab::cmd_simulate(config, simulate_args.overrides);
        }
        if (train->parsed()) {
            train_args.overrides.has_seed = train->count("--seed") > 0;
            apply_threads(train_args.threads);
            const smelab::Json config = smelab::load_config_file(train_args.config_path);
            return smelab::cmd_train(config, train_args.overrides);
        }
        sweep_args.overrides.has_seed = sweep->count("--seed") > 0;
        apply_threads(sweep_args.threads);
        const smelab::Json config = smelab::load_config_file(sweep_args.config_path);
        return smelab::cmd_sweep(config, sweep_args.overrides);
    } catch (const smelab::DivergenceError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 3;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}
