#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "toprank/config.hpp"
#include "toprank/error.hpp"
#include "toprank/experiment.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", flags.seed, "Master seed, overrides the config");
    cmd->add_option("--out", flags.out, "Output directory, overrides the config");
    cmd->add_option("--threads", flags.threads, "Worker threads (artifacts do not depend on it)")
        ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"TopRank / TopRank+ lab: online learning to rank with self-normalized confidence boundaries"};
    app.set_version_flag("--version", toprank::version());
    app.require_subcommand(1);

    CommonFlags flags;
    struct Command {
        const char* name;
        const char* help;
    };
    const Command commands[] = {
        {"run", "Run TopRank episodes; writes regret.csv and summary.json"},
        {"boundary", "Tabulate thresholds per variant; writes boundary.csv"},
        {"validate", "Monte Carlo boundary-crossing checks; writes validate.json"},
        {"bounds", "Regret bounds over a horizon grid; writes bounds.csv"},
        {"constants", "Estimate C0, C1, C2 for the configured delta; writes constants.json"},
        {"assumptions", "Check click-model Assumptions 1-4; writes assumptions.json"},
    };
    for (const auto& c : commands) add_common(app.add_subcommand(c.name, c.help), flags);

    CLI11_PARSE(app, argc, argv);

    try {
        toprank::ExperimentConfig config = toprank::load_config(flags.config_path);
        if (flags.seed) config.seed = *flags.seed;
        if (flags.out) config.output_dir = *flags.out;
        const std::size_t threads = flags.threads.value_or(config.threads);

        const std::string name = app.get_subcommands().front()->get_name();
        toprank::ArtifactSet set;
        if (name == "run") {
            set = toprank::run_experiment(config, threads);
        } else if (name == "boundary") {
            set = toprank::boundary_table(config);
        } else if (name == "validate") {
            set = toprank::validate_boundaries(config, threads);
        } else if (name == "bounds") {
            set = toprank::bounds_table(config);
        } else if (name == "constants") {
            set = toprank::constants_report(config);
        } else {
            set = toprank::assumptions_report(config);
        }

        toprank::write_artifacts(set, config.output_dir);
        for (const auto& file : set.files) std::cout << "wrote " << config.output_dir << "/" << file.name << "\n";
        if (!set.ok) {
            std::cerr << "self-check failed:\n" << set.message;
            return 2;
        }
        return 0;
    } catch (const toprank::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
