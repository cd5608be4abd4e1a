#pragma once

// Command-line front end: `run`, `predict`, `stats`, `folds export|import`.

#include "aefrc/eval.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace aefrc {

/// Environment variable naming the fallback directory for relative data paths.
inline constexpr const char* kDataDirEnv = "FRC_DATA_DIR";

struct RunConfig {
    std::filesystem::path dataset_path;
    CsvSchema schema;
    std::string dataset_name;
    PipelineConfig pipeline;
    std::optional<std::filesystem::path> expert_path;
    CvOptions cv;
    std::optional<std::filesystem::path> fold_file;
    /// Empty: one cross-validation at pipeline.ae.rho. Otherwise a sweep.
    std::vector<double> rho_grid;
    std::filesystem::path output_dir = "aefrc_out";
    bool write_trace = false;
};

/// Reads a run configuration. Every problem found is appended to
/// `problems`; the returned value is only meaningful when none were.
RunConfig run_config_from_json(const Json& j, std::vector<std::string>& problems);

/// The fully resolved configuration, in the format run_config_from_json reads.
Json to_json(const RunConfig& rc);

/// Relative paths that do not exist are retried under $FRC_DATA_DIR.
std::filesystem::path resolve_data_path(const std::filesystem::path& p);

/// Entry point shared by the `aefrc` binary and the tests. Returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace aefrc
