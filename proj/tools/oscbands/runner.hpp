#pragma once

#include "schema.hpp"

#include <iosfwd>
#include <string>

namespace oscbands::cli {

enum ExitCode { kPass = 0, kVerdictFail = 1, kConfigError = 2, kNumericError = 3 };

struct RunResult {
    Json report;
    int code = kPass;
};

/// Executes one normalized run. Module exceptions become status "error", code 3.
RunResult execute(const Json& cfg);

/// Reads and normalizes a config file; violations go to err.
bool load_config(const std::string& path, Json& cfg, std::ostream& err);

/// `oscbands validate`: prints "ok" and the normalized config, or the violations.
int validate_file(const std::string& path, std::ostream& out, std::ostream& err);

/// `oscbands run`: writes the report (and CSV tables) under out_dir.
/// threads > 1 runs batch entries concurrently; the report order is fixed.
int run_file(const std::string& path, const std::string& out_dir, int threads, std::ostream& out, std::ostream& err);

/// Tool version string.
const char* version();

} // namespace oscbands::cli
