#pragma once

#include "seqcmc/core/particles.hpp"
#include "seqcmc/phd/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqcmc::bench {

/// Invalid or inconsistent scenario file.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { single, jmss, phd };

ExperimentKind parse_kind(const std::string& name);
std::string to_string(ExperimentKind kind);

// --------------------------------------------------------------------------- single target

enum class SingleModelType { linear_gaussian, arch, stochastic_volatility };

struct SingleModelConfig {
    SingleModelType type = SingleModelType::linear_gaussian;
    // linear_gaussian: x' = F x + N(0, Q), y = H x + N(0, R)
    double F = 0.9;
    double Q = 10.0;
    double H = 1.0;
    double R = 1.0;
    // arch
    double beta0 = 1.0;
    double beta1 = 0.1;
    // stochastic_volatility
    double phi = 0.8;
    double sigma = 0.18;
    double beta = 0.6;
    // prior N(prior_mean, prior_var)
    double prior_mean = 0.0;
    double prior_var = 1.0;
};

enum class SingleAlgorithm { kalman, sir, fa, bootstrap, sv_taylor };

/// Importance distribution of the sv_taylor filter.
enum class SvProposal { taylor, transition };

struct SingleFilterConfig {
    std::string name;
    SingleAlgorithm algorithm = SingleAlgorithm::sir;
    Index particles = 1000;
    SvProposal proposal = SvProposal::taylor;
    /// sv_taylor only: linearize the kernel moment at its mode rather than at phi x_prev.
    bool mode_expansion = true;
};

// --------------------------------------------------------------------------- JMSS

struct JmssModelConfig {
    std::vector<double> omegas{0.0, 0.05235987755982988, -0.05235987755982988};
    double T = 2.0;
    double sigma_v = 3.0;
    double sigma_xy = 10.0;
    /// Self-transition probability; the rest is spread evenly.
    double stay = 0.4;
    Vector prior_mean;
    Vector prior_sd;
};

enum class JmssAlgorithm { rbpf, general };

struct JmssFilterConfig {
    std::string name;
    JmssAlgorithm algorithm = JmssAlgorithm::rbpf;
    Index particles = 1000;
};

// --------------------------------------------------------------------------- PHD

struct TargetSchedule {
    Index birth_step = 0;
    /// Exclusive; absent means the target lives to the horizon.
    std::optional<Index> death_step;
    /// Birth component the initial state is drawn from.
    Index site = 0;
};

struct PhdScenarioConfig {
    double T = 2.0;
    double sigma_v = 3.0;
    double sigma_xy = 0.3;
    double p_d = 0.95;
    double p_s = 0.98;
    double clutter_rate = 10.0;
    Vector region_lower;
    Vector region_upper;
    phd::GaussianMixture birth;
    std::vector<TargetSchedule> targets;
};

enum class PhdAlgorithm { smc, cmc, gm };

struct PhdFilterConfig {
    std::string name;
    PhdAlgorithm algorithm = PhdAlgorithm::cmc;
    Index particles_per_target = 200;
    Index birth_particles = 20;
    /// cmc only: closed-form Gaussian-mixture birth terms or birth samples.
    bool closed_form_birth = true;
    double prune_threshold = 1e-5;
    double merge_threshold = 4.0;
    Index max_components = 100;
    double extraction_threshold = 0.5;
};

struct OspaConfig {
    double p = 1.0;
    double c = 100.0;
};

// --------------------------------------------------------------------------- scenario

enum class OutputFormat { csv, json };

struct ScenarioConfig {
    ExperimentKind kind = ExperimentKind::single;
    std::string name = "experiment";
    Index horizon = 50;
    Index repetitions = 1;
    std::vector<std::uint64_t> seeds;
    Index reference_particles = 100000;
    ResamplePolicy resampling;
    /// Measure per-step cost. Without timing the cost and efficiency columns
    /// are omitted and outputs are fully reproducible.
    bool timing = true;
    std::filesystem::path output_dir = "results";
    OutputFormat format = OutputFormat::csv;

    SingleModelConfig single_model;
    std::vector<SingleFilterConfig> single_filters;
    JmssModelConfig jmss_model;
    std::vector<JmssFilterConfig> jmss_filters;
    PhdScenarioConfig phd_model;
    std::vector<PhdFilterConfig> phd_filters;
    OspaConfig ospa;

    /// Checks invariants; throws ConfigError.
    void validate() const;
    [[nodiscard]] Index n_filters() const;
};

/// Parses and validates a scenario. Unknown keys are rejected.
[[nodiscard]] ScenarioConfig parse_config(const nlohmann::json& document);
[[nodiscard]] ScenarioConfig load_config(const std::filesystem::path& path);

/// Comma-separated unsigned seeds.
[[nodiscard]] std::vector<std::uint64_t> parse_seed_list(const std::string& text);

} // namespace seqcmc::bench
