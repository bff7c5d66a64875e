#pragma once

#include "seqcmc/bench/experiment.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace seqcmc::bench {

class EmitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Decimal with 17 significant digits; NaN gives an empty string.
[[nodiscard]] std::string format_number(double value);

/// Columns step, estimator, mse, cost_s, efficiency, ospa_mean, ospa_sd,
/// count_mean, count_sd; columns empty for every estimator are omitted.
[[nodiscard]] std::string to_csv(const RunResult& result);

/// Metadata block plus one object per estimator holding the same series.
[[nodiscard]] std::string to_json(const RunResult& result);

/// Creates `dir` if needed; throws EmitError when that fails. The CLI calls
/// it before running so a bad path fails fast.
void prepare_output_dir(const std::filesystem::path& dir);

/// Writes <dir>/<scenario>.csv or .json and returns the path. Throws
/// EmitError when the directory or file cannot be written.
std::filesystem::path emit_results(const RunResult& result, OutputFormat format, const std::filesystem::path& dir);

} // namespace seqcmc::bench
