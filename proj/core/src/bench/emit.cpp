#include "seqcmc/bench/emit.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace seqcmc::bench {

namespace {

using Field = std::vector<double> EstimatorSeries::*;

struct Column {
    const char* name;
    Field field;
};

constexpr std::array<Column, 7> kColumns{{
    {"mse", &EstimatorSeries::mse},
    {"cost_s", &EstimatorSeries::cost_s},
    {"efficiency", &EstimatorSeries::efficiency},
    {"ospa_mean", &EstimatorSeries::ospa_mean},
    {"ospa_sd", &EstimatorSeries::ospa_sd},
    {"count_mean", &EstimatorSeries::count_mean},
    {"count_sd", &EstimatorSeries::count_sd},
}};

std::vector<Column> present_columns(const RunResult& result) {
    std::vector<Column> out;
    for (const auto& c : kColumns) {
        for (const auto& s : result.estimators) {
            if (!(s.*c.field).empty()) {
                out.push_back(c);
                break;
            }
        }
    }
    return out;
}

std::string json_number(double v) { return std::isfinite(v) ? format_number(v) : "null"; }

} // namespace

std::string format_number(double value) {
    if (std::isnan(value)) return {};
    std::array<char, 32> buffer{};
    std::snprintf(buffer.data(), buffer.size(), "%.17g", value);
    return buffer.data();
}

std::string to_csv(const RunResult& result) {
    const auto columns = present_columns(result);
    std::ostringstream out;
    out << "step,estimator";
    for (const auto& c : columns) out << ',' << c.name;
    out << '\n';
    for (const auto& s : result.estimators) {
        for (std::size_t n = 0; n < result.steps.size(); ++n) {
            out << result.steps[n] << ',' << s.name;
            for (const auto& c : columns) {
                const auto& v = s.*c.field;
                out << ',' << (n < v.size() ? format_number(v[n]) : std::string());
            }
            out << '\n';
        }
    }
    return out.str();
}

std::string to_json(const RunResult& result) {
    const auto& m = result.metadata;
    nlohmann::ordered_json meta;
    meta["scenario"] = m.scenario;
    meta["kind"] = to_string(m.kind);
    meta["seeds"] = m.seeds;
    meta["runs_used"] = m.runs_used;
    meta["runs_excluded"] = m.runs_excluded;
    auto exclusions = nlohmann::ordered_json::array();
    for (const auto& [seed, reason] : m.exclusions) exclusions.push_back({{"seed", seed}, {"reason", reason}});
    meta["exclusions"] = exclusions;
    meta["timing"] = m.timing;
    meta["git_revision"] = m.git_revision;
    meta["decisions"] = m.decisions;

    // Series are written by hand so every number carries 17 significant digits.
    const auto columns = present_columns(result);
    std::ostringstream out;
    out << "{\n  \"metadata\": " << meta.dump(2) << ",\n  \"steps\": [";
    for (std::size_t n = 0; n < result.steps.size(); ++n) out << (n ? ", " : "") << result.steps[n];
    out << "],\n  \"estimators\": [";
    for (std::size_t e = 0; e < result.estimators.size(); ++e) {
        const auto& s = result.estimators[e];
        out << (e ? "," : "") << "\n    {\n      \"name\": " << nlohmann::json(s.name).dump();
        for (const auto& c : columns) {
            const auto& v = s.*c.field;
            if (v.empty()) continue;
            out << ",\n      \"" << c.name << "\": [";
            for (std::size_t n = 0; n < v.size(); ++n) out << (n ? ", " : "") << json_number(v[n]);
            out << ']';
        }
        out << "\n    }";
    }
    out << "\n  ]\n}\n";
    return out.str();
}

void prepare_output_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw EmitError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

std::filesystem::path emit_results(const RunResult& result, OutputFormat format, const std::filesystem::path& dir) {
    prepare_output_dir(dir);
    const auto path = dir / (result.metadata.scenario + (format == OutputFormat::csv ? ".csv" : ".json"));
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw EmitError("cannot write '" + path.string() + "'");
    file << (format == OutputFormat::csv ? to_csv(result) : to_json(result));
    file.close();
    if (!file) throw EmitError("failed writing '" + path.string() + "'");
    return path;
}

} // namespace seqcmc::bench
