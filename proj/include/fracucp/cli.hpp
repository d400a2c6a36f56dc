#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace fracucp::cli {

struct RunOptions {
  std::filesystem::path out_dir = "out";
  /// Overrides the config's "seed" field when set.
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

struct RunResult {
  bool pass = false;
  nlohmann::json summary;
};

/// Names accepted by run().
const std::vector<std::string>& commands();

/// Validates `config` for `command` (SchemaError naming the offending path),
/// executes it and writes <out>/<command>.csv, <out>/<command>.xy and
/// <out>/summary.json. Numbers in CSV carry 17 significant digits.
RunResult run(const std::string& command, const nlohmann::json& config, const RunOptions& options);

/// argv front end: `fracucp <command> --config <path> --out <dir> --seed <u64> --threads <n>`.
/// Exit status 0 when every configured check passes, 1 on a failed check, 2 on a
/// configuration error, 3 on any other error.
int main_entry(int argc, char** argv);

}  // namespace fracucp::cli
