#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "ddlqr/error.hpp"
#include "ddlqr/experiments.hpp"

namespace ddlqr {

inline constexpr const char* kVersion = "0.1.0";

/// Process exit statuses of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitSolver = 4,
};

int exit_code_for(ErrorCode code);

/// Entry point of the `ddlqr` tool. Commands: simulate, synthesize,
/// experiment, koopman-demo, version.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Parses a JSON document; syntax errors become ConfigInvalid naming the
/// line. `source` labels messages.
nlohmann::json parse_config_text(const std::string& text, const std::string& source);

/// Applies an experiment config object on top of `base`. Unknown keys and
/// type mismatches raise ConfigInvalid with the key path (and line when
/// `text` is given).
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, ExperimentConfig base,
                                             const std::string& text = {});

/// Output directory: `flag` when nonempty, else $DDLQR_OUTPUT_DIR, else
/// "ddlqr-out".
std::filesystem::path output_directory(const std::string& flag);

}  // namespace ddlqr
