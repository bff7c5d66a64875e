#include "seqcmc/bench/config.hpp"
#include "seqcmc/bench/emit.hpp"
#include "seqcmc/bench/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;
/// Share of excluded repetitions above which the run reports failure.
constexpr double kMaxExcludedFraction = 0.10;

struct RunArgs {
    std::string config;
    std::string out;
    std::string seeds;
    std::string format;
};

int run(seqcmc::bench::ExperimentKind expected, const RunArgs& args) {
    using namespace seqcmc::bench;
    ScenarioConfig config;
    try {
        config = load_config(args.config);
        if (config.kind != expected) {
            throw ConfigError("config describes a '" + to_string(config.kind) + "' experiment, not '" +
                              to_string(expected) + "'");
        }
        if (!args.seeds.empty()) {
            config.seeds = parse_seed_list(args.seeds);
            config.repetitions = static_cast<seqcmc::Index>(config.seeds.size());
        }
        if (!args.out.empty()) config.output_dir = args.out;
        if (args.format == "csv") config.format = OutputFormat::csv;
        if (args.format == "json") config.format = OutputFormat::json;
        config.validate();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    prepare_output_dir(config.output_dir);
    const RunResult result = run_experiment(config);
    const auto path = emit_results(result, config.format, config.output_dir);
    std::cout << "wrote " << path.string() << " (" << result.metadata.runs_used << " runs used, "
              << result.metadata.runs_excluded << " excluded)\n";
    for (const auto& [seed, reason] : result.metadata.exclusions) {
        std::cerr << "excluded seed " << seed << ": " << reason << '\n';
    }
    return result.excluded_fraction() > kMaxExcludedFraction ? kExitDegenerate : kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential Monte Carlo filtering experiments with conditional Monte Carlo estimators"};
    app.require_subcommand(1);

    RunArgs args;
    std::optional<seqcmc::bench::ExperimentKind> kind;
    for (const auto k : {seqcmc::bench::ExperimentKind::single, seqcmc::bench::ExperimentKind::jmss,
                         seqcmc::bench::ExperimentKind::phd}) {
        const auto name = seqcmc::bench::to_string(k);
        auto* sub = app.add_subcommand(name, "Run a " + name + " experiment");
        sub->add_option("--config", args.config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", args.out, "Output directory (overrides the config)");
        sub->add_option("--seeds", args.seeds, "Comma-separated seeds (overrides the config)");
        sub->add_option("--format", args.format, "Output format (overrides the config)")
            ->check(CLI::IsMember({"csv", "json"}));
        sub->callback([&kind, k] { kind = k; });
    }
    std::string validate_config;
    auto* validate = app.add_subcommand("validate", "Check a scenario file against the schema");
    validate->add_option("--config", validate_config, "Scenario JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (validate->parsed()) {
            const auto config = seqcmc::bench::load_config(validate_config);
            std::cout << validate_config << ": valid " << seqcmc::bench::to_string(config.kind) << " scenario '"
                      << config.name << "'\n";
            return kExitOk;
        }
        return run(*kind, args);
    } catch (const seqcmc::bench::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
