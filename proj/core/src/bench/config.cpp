#include "seqcmc/bench/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace seqcmc::bench {

namespace {

using nlohmann::json;

/// Typed access to one JSON object that rejects keys nobody asked for.
class ObjectReader {
public:
    ObjectReader(const json& object, std::string where) : object_(object), where_(std::move(where)) {
        if (!object_.is_object()) throw ConfigError(where_ + ": expected an object");
    }

    ~ObjectReader() = default;
    ObjectReader(const ObjectReader&) = delete;
    ObjectReader& operator=(const ObjectReader&) = delete;

    [[nodiscard]] bool has(const std::string& key) {
        seen_.insert(key);
        return object_.contains(key) && !object_.at(key).is_null();
    }

    [[nodiscard]] const json& at(const std::string& key) {
        if (!has(key)) throw ConfigError(where_ + ": missing '" + key + "'");
        return object_.at(key);
    }

    double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
        if (!has(key)) {
            if (fallback) return *fallback;
            throw ConfigError(where_ + ": missing '" + key + "'");
        }
        const auto& v = object_.at(key);
        if (!v.is_number()) throw ConfigError(where_ + "." + key + ": expected a number");
        return v.get<double>();
    }

    Index integer(const std::string& key, std::optional<Index> fallback = std::nullopt) {
        if (!has(key)) {
            if (fallback) return *fallback;
            throw ConfigError(where_ + ": missing '" + key + "'");
        }
        const auto& v = object_.at(key);
        if (!v.is_number_integer()) throw ConfigError(where_ + "." + key + ": expected an integer");
        return v.get<Index>();
    }

    std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
        if (!has(key)) {
            if (fallback) return *fallback;
            throw ConfigError(where_ + ": missing '" + key + "'");
        }
        const auto& v = object_.at(key);
        if (!v.is_string()) throw ConfigError(where_ + "." + key + ": expected a string");
        return v.get<std::string>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const auto& v = object_.at(key);
        if (!v.is_boolean()) throw ConfigError(where_ + "." + key + ": expected true or false");
        return v.get<bool>();
    }

    Vector vector(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_array()) throw ConfigError(where_ + "." + key + ": expected an array of numbers");
        Vector out(static_cast<Index>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ConfigError(where_ + "." + key + ": expected an array of numbers");
            out(static_cast<Index>(i)) = v[i].get<double>();
        }
        return out;
    }

    /// Throws on keys that were never queried.
    void finish() const {
        for (const auto& item : object_.items()) {
            if (!seen_.contains(item.key())) throw ConfigError(where_ + ": unknown key '" + item.key() + "'");
        }
    }

    [[nodiscard]] const std::string& where() const { return where_; }

private:
    const json& object_;
    std::string where_;
    std::set<std::string> seen_;
};

SingleModelConfig parse_single_model(const json& j) {
    ObjectReader r(j, "model");
    SingleModelConfig m;
    const auto type = r.string("type");
    if (type == "linear_gaussian") {
        m.type = SingleModelType::linear_gaussian;
        m.F = r.number("F", m.F);
        m.Q = r.number("Q", m.Q);
        m.H = r.number("H", m.H);
        m.R = r.number("R", m.R);
    } else if (type == "arch") {
        m.type = SingleModelType::arch;
        m.beta0 = r.number("beta0", m.beta0);
        m.beta1 = r.number("beta1", m.beta1);
        m.R = r.number("R", 3.0);
    } else if (type == "stochastic_volatility") {
        m.type = SingleModelType::stochastic_volatility;
        m.phi = r.number("phi", m.phi);
        m.sigma = r.number("sigma", m.sigma);
        m.beta = r.number("beta", m.beta);
    } else {
        throw ConfigError("model.type: unknown single-target model '" + type + "'");
    }
    m.prior_mean = r.number("prior_mean", m.prior_mean);
    m.prior_var = r.number("prior_var", m.prior_var);
    r.finish();
    return m;
}

SingleFilterConfig parse_single_filter(const json& j, std::size_t index) {
    ObjectReader r(j, "filters[" + std::to_string(index) + "]");
    SingleFilterConfig f;
    const auto algorithm = r.string("algorithm");
    if (algorithm == "kalman") f.algorithm = SingleAlgorithm::kalman;
    else if (algorithm == "sir") f.algorithm = SingleAlgorithm::sir;
    else if (algorithm == "fa") f.algorithm = SingleAlgorithm::fa;
    else if (algorithm == "bootstrap") f.algorithm = SingleAlgorithm::bootstrap;
    else if (algorithm == "sv_taylor") f.algorithm = SingleAlgorithm::sv_taylor;
    else throw ConfigError(r.where() + ".algorithm: unknown algorithm '" + algorithm + "'");
    f.name = r.string("name", algorithm);
    f.particles = r.integer("particles", f.algorithm == SingleAlgorithm::kalman ? 1 : f.particles);
    if (f.algorithm == SingleAlgorithm::sv_taylor) {
        const auto proposal = r.string("proposal", "taylor");
        if (proposal == "taylor") f.proposal = SvProposal::taylor;
        else if (proposal == "transition") f.proposal = SvProposal::transition;
        else throw ConfigError(r.where() + ".proposal: expected 'taylor' or 'transition'");
        const auto expansion = r.string("kernel_expansion", "kernel_mode");
        if (expansion == "kernel_mode") f.mode_expansion = true;
        else if (expansion == "transition_mean") f.mode_expansion = false;
        else throw ConfigError(r.where() + ".kernel_expansion: expected 'kernel_mode' or 'transition_mean'");
    }
    r.finish();
    return f;
}

JmssModelConfig parse_jmss_model(const json& j) {
    ObjectReader r(j, "model");
    JmssModelConfig m;
    const auto type = r.string("type", "coordinated_turn");
    if (type != "coordinated_turn") throw ConfigError("model.type: unknown JMSS model '" + type + "'");
    if (r.has("omegas")) {
        const Vector w = r.vector("omegas");
        m.omegas.assign(w.data(), w.data() + w.size());
    }
    m.T = r.number("T", m.T);
    m.sigma_v = r.number("sigma_v", m.sigma_v);
    m.sigma_xy = r.number("sigma_xy", m.sigma_xy);
    m.stay = r.number("stay", m.stay);
    m.prior_mean = r.has("prior_mean") ? r.vector("prior_mean") : Vector{{0.0, 50.0, 0.0, 0.0}};
    m.prior_sd = r.has("prior_sd") ? r.vector("prior_sd") : Vector{{10.0, 5.0, 10.0, 5.0}};
    r.finish();
    return m;
}

JmssFilterConfig parse_jmss_filter(const json& j, std::size_t index) {
    ObjectReader r(j, "filters[" + std::to_string(index) + "]");
    JmssFilterConfig f;
    const auto algorithm = r.string("algorithm");
    if (algorithm == "rbpf") f.algorithm = JmssAlgorithm::rbpf;
    else if (algorithm == "general") f.algorithm = JmssAlgorithm::general;
    else throw ConfigError(r.where() + ".algorithm: unknown algorithm '" + algorithm + "'");
    f.name = r.string("name", algorithm);
    f.particles = r.integer("particles", f.particles);
    r.finish();
    return f;
}

phd::GaussianComponent parse_birth_component(const json& j, std::size_t index) {
    ObjectReader r(j, "model.birth[" + std::to_string(index) + "]");
    const double w = r.number("weight");
    const Vector mean = r.vector("mean");
    const Vector sd = r.vector("sd");
    r.finish();
    if (mean.size() != 4 || sd.size() != 4) throw ConfigError(r.where() + ": mean and sd need 4 entries");
    if ((sd.array() <= 0.0).any()) throw ConfigError(r.where() + ".sd: entries must be positive");
    return {w, GaussianBelief(mean, sd.array().square().matrix().asDiagonal())};
}

TargetSchedule parse_target(const json& j, std::size_t index) {
    ObjectReader r(j, "model.targets[" + std::to_string(index) + "]");
    TargetSchedule t;
    t.birth_step = r.integer("birth_step");
    if (r.has("death_step")) t.death_step = r.integer("death_step");
    t.site = r.integer("site", 0);
    r.finish();
    return t;
}

PhdScenarioConfig parse_phd_model(const json& j) {
    ObjectReader r(j, "model");
    PhdScenarioConfig m;
    const auto type = r.string("type", "linear_multi_target");
    if (type != "linear_multi_target") throw ConfigError("model.type: unknown PHD model '" + type + "'");
    m.T = r.number("T", m.T);
    m.sigma_v = r.number("sigma_v", m.sigma_v);
    m.sigma_xy = r.number("sigma_xy", m.sigma_xy);
    m.p_d = r.number("p_d", m.p_d);
    m.p_s = r.number("p_s", m.p_s);
    m.clutter_rate = r.number("clutter_rate", m.clutter_rate);
    {
        ObjectReader region(r.at("region"), "model.region");
        m.region_lower = region.vector("lower");
        m.region_upper = region.vector("upper");
        region.finish();
    }
    const auto& birth = r.at("birth");
    if (!birth.is_array()) throw ConfigError("model.birth: expected an array");
    for (std::size_t i = 0; i < birth.size(); ++i) m.birth.components.push_back(parse_birth_component(birth[i], i));
    const auto& targets = r.at("targets");
    if (!targets.is_array()) throw ConfigError("model.targets: expected an array");
    for (std::size_t i = 0; i < targets.size(); ++i) m.targets.push_back(parse_target(targets[i], i));
    r.finish();
    return m;
}

PhdFilterConfig parse_phd_filter(const json& j, std::size_t index) {
    ObjectReader r(j, "filters[" + std::to_string(index) + "]");
    PhdFilterConfig f;
    const auto algorithm = r.string("algorithm");
    if (algorithm == "smc_phd") f.algorithm = PhdAlgorithm::smc;
    else if (algorithm == "cmc_phd") f.algorithm = PhdAlgorithm::cmc;
    else if (algorithm == "gm_phd") f.algorithm = PhdAlgorithm::gm;
    else throw ConfigError(r.where() + ".algorithm: unknown algorithm '" + algorithm + "'");
    f.name = r.string("name", algorithm);
    if (f.algorithm != PhdAlgorithm::gm) {
        f.particles_per_target = r.integer("particles_per_target", f.particles_per_target);
        f.birth_particles = r.integer("birth_particles", f.birth_particles);
    }
    if (f.algorithm == PhdAlgorithm::cmc) {
        const auto birth = r.string("birth", "closed_form");
        if (birth == "closed_form") f.closed_form_birth = true;
        else if (birth == "sampled") f.closed_form_birth = false;
        else throw ConfigError(r.where() + ".birth: expected 'closed_form' or 'sampled'");
    }
    if (f.algorithm == PhdAlgorithm::gm) {
        f.prune_threshold = r.number("prune_threshold", f.prune_threshold);
        f.merge_threshold = r.number("merge_threshold", f.merge_threshold);
        f.max_components = r.integer("max_components", f.max_components);
    }
    f.extraction_threshold = r.number("extraction_threshold", f.extraction_threshold);
    r.finish();
    return f;
}

void require(bool condition, const std::string& message) {
    if (!condition) throw ConfigError(message);
}

} // namespace

ExperimentKind parse_kind(const std::string& name) {
    if (name == "single") return ExperimentKind::single;
    if (name == "jmss") return ExperimentKind::jmss;
    if (name == "phd") return ExperimentKind::phd;
    throw ConfigError("unknown experiment kind '" + name + "'");
}

std::string to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::single: return "single";
    case ExperimentKind::jmss: return "jmss";
    case ExperimentKind::phd: return "phd";
    }
    return "unknown";
}

Index ScenarioConfig::n_filters() const {
    switch (kind) {
    case ExperimentKind::single: return static_cast<Index>(single_filters.size());
    case ExperimentKind::jmss: return static_cast<Index>(jmss_filters.size());
    case ExperimentKind::phd: return static_cast<Index>(phd_filters.size());
    }
    return 0;
}

void ScenarioConfig::validate() const {
    require(horizon >= 1, "horizon must be at least 1");
    require(repetitions >= 1, "repetitions must be at least 1");
    require(static_cast<Index>(seeds.size()) == repetitions, "one seed per repetition is required");
    require(reference_particles >= 1, "reference_particles must be at least 1");
    require(resampling.ess_threshold >= 0.0, "resampling.ess_threshold must be nonnegative");
    require(n_filters() >= 1, "at least one filter is required");
    std::set<std::string> names;
    auto check_name = [&](const std::string& n) {
        require(!n.empty(), "filter names must be nonempty");
        require(names.insert(n).second, "duplicate filter name '" + n + "'");
    };
    switch (kind) {
    case ExperimentKind::single: {
        const auto& m = single_model;
        require(m.prior_var > 0.0, "model.prior_var must be positive");
        if (m.type == SingleModelType::linear_gaussian) require(m.Q > 0.0 && m.R > 0.0, "model: Q and R must be positive");
        if (m.type == SingleModelType::arch) require(m.beta0 > 0.0 && m.beta1 >= 0.0 && m.R > 0.0, "model: invalid ARCH parameters");
        if (m.type == SingleModelType::stochastic_volatility) require(m.sigma > 0.0 && m.beta > 0.0, "model: invalid SV parameters");
        for (const auto& f : single_filters) {
            check_name(f.name);
            require(f.particles >= 1, "filter '" + f.name + "': particles must be at least 1");
            if (f.algorithm == SingleAlgorithm::kalman) {
                require(m.type == SingleModelType::linear_gaussian, "kalman needs the linear_gaussian model");
            }
            if (f.algorithm == SingleAlgorithm::sv_taylor) {
                require(m.type == SingleModelType::stochastic_volatility, "sv_taylor needs the stochastic_volatility model");
            }
            if (f.algorithm == SingleAlgorithm::sir || f.algorithm == SingleAlgorithm::fa) {
                require(m.type != SingleModelType::stochastic_volatility, "sir and fa need a semi-linear Gaussian model");
            }
        }
        break;
    }
    case ExperimentKind::jmss: {
        const auto& m = jmss_model;
        require(m.omegas.size() >= 1, "model.omegas must be nonempty");
        require(m.T > 0.0 && m.sigma_v > 0.0 && m.sigma_xy > 0.0, "model: T, sigma_v, sigma_xy must be positive");
        require(m.stay >= 0.0 && m.stay <= 1.0, "model.stay must be in [0, 1]");
        require(m.prior_mean.size() == 4 && m.prior_sd.size() == 4, "model: prior_mean and prior_sd need 4 entries");
        require((m.prior_sd.array() > 0.0).all(), "model.prior_sd entries must be positive");
        for (const auto& f : jmss_filters) {
            check_name(f.name);
            require(f.particles >= 1, "filter '" + f.name + "': particles must be at least 1");
        }
        break;
    }
    case ExperimentKind::phd: {
        const auto& m = phd_model;
        require(m.T > 0.0 && m.sigma_v > 0.0 && m.sigma_xy > 0.0, "model: T, sigma_v, sigma_xy must be positive");
        require(m.p_d >= 0.0 && m.p_d <= 1.0 && m.p_s >= 0.0 && m.p_s <= 1.0, "model: probabilities must be in [0, 1]");
        require(m.clutter_rate >= 0.0, "model.clutter_rate must be nonnegative");
        require(m.region_lower.size() == 2 && m.region_upper.size() == 2, "model.region needs 2-d bounds");
        require((m.region_upper.array() > m.region_lower.array()).all(), "model.region: upper must exceed lower");
        require(!m.birth.components.empty(), "model.birth must be nonempty");
        for (const auto& c : m.birth.components) require(c.weight >= 0.0, "model.birth weights must be nonnegative");
        for (const auto& t : m.targets) {
            require(t.birth_step >= 0 && t.birth_step < horizon, "target birth_step outside the horizon");
            require(!t.death_step || *t.death_step > t.birth_step, "target death_step must follow birth_step");
            require(t.site >= 0 && t.site < static_cast<Index>(m.birth.components.size()), "target site out of range");
        }
        require(ospa.p >= 1.0 && ospa.c > 0.0, "ospa: need p >= 1 and c > 0");
        for (const auto& f : phd_filters) {
            check_name(f.name);
            require(f.particles_per_target >= 1 && f.birth_particles >= 1, "filter '" + f.name + "': counts must be at least 1");
            require(f.max_components >= 1, "filter '" + f.name + "': max_components must be at least 1");
        }
        break;
    }
    }
}

ScenarioConfig parse_config(const nlohmann::json& document) {
    ObjectReader r(document, "config");
    ScenarioConfig c;
    c.kind = parse_kind(r.string("kind"));
    c.name = r.string("name", c.name);
    c.horizon = r.integer("horizon", c.horizon);
    c.reference_particles = r.integer("reference_particles", c.reference_particles);
    c.timing = r.boolean("timing", c.timing);

    if (r.has("seeds")) {
        const auto& s = r.at("seeds");
        if (!s.is_array()) throw ConfigError("config.seeds: expected an array");
        for (const auto& v : s) {
            if (!v.is_number_unsigned()) throw ConfigError("config.seeds: expected unsigned integers");
            c.seeds.push_back(v.get<std::uint64_t>());
        }
        c.repetitions = r.integer("repetitions", static_cast<Index>(c.seeds.size()));
    } else {
        c.repetitions = r.integer("repetitions", c.repetitions);
        const auto base = static_cast<std::uint64_t>(r.integer("seed", 1));
        for (Index k = 0; k < std::max<Index>(c.repetitions, 0); ++k) c.seeds.push_back(base + static_cast<std::uint64_t>(k));
    }

    if (r.has("resampling")) {
        ObjectReader rs(r.at("resampling"), "config.resampling");
        try {
            c.resampling.scheme = parse_resample_scheme(rs.string("scheme", "multinomial"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config.resampling: ") + e.what());
        }
        c.resampling.ess_threshold = rs.number("ess_threshold", c.resampling.ess_threshold);
        rs.finish();
    }
    if (r.has("output")) {
        ObjectReader out(r.at("output"), "config.output");
        c.output_dir = out.string("directory", c.output_dir.string());
        const auto format = out.string("format", "csv");
        if (format == "csv") c.format = OutputFormat::csv;
        else if (format == "json") c.format = OutputFormat::json;
        else throw ConfigError("config.output.format: expected 'csv' or 'json'");
        out.finish();
    }
    if (r.has("ospa")) {
        ObjectReader o(r.at("ospa"), "config.ospa");
        c.ospa.p = o.number("p", c.ospa.p);
        c.ospa.c = o.number("c", c.ospa.c);
        o.finish();
    }

    const auto& filters = r.at("filters");
    if (!filters.is_array()) throw ConfigError("config.filters: expected an array");
    switch (c.kind) {
    case ExperimentKind::single:
        c.single_model = parse_single_model(r.at("model"));
        for (std::size_t i = 0; i < filters.size(); ++i) c.single_filters.push_back(parse_single_filter(filters[i], i));
        break;
    case ExperimentKind::jmss:
        c.jmss_model = parse_jmss_model(r.at("model"));
        for (std::size_t i = 0; i < filters.size(); ++i) c.jmss_filters.push_back(parse_jmss_filter(filters[i], i));
        break;
    case ExperimentKind::phd:
        c.phd_model = parse_phd_model(r.at("model"));
        for (std::size_t i = 0; i < filters.size(); ++i) c.phd_filters.push_back(parse_phd_filter(filters[i], i));
        break;
    }
    r.finish();
    c.validate();
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    nlohmann::json document;
    try {
        document = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return parse_config(document);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
            throw ConfigError("invalid seed '" + item + "'");
        }
        try {
            seeds.push_back(std::stoull(item));
        } catch (const std::out_of_range&) {
            throw ConfigError("seed out of range '" + item + "'");
        }
    }
    if (seeds.empty()) throw ConfigError("empty seed list");
    return seeds;
}

} // namespace seqcmc::bench
