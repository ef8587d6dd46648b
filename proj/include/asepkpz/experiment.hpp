#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asepkpz/config.hpp"

namespace asepkpz {

// params | simulate | kernel | identities | she | compare | audit-all
const std::vector<std::string>& run_kinds();

struct RunOptions {
  std::string kind;
  std::string out_dir = "runs";
  bool force = false;
  int threads = 1;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct FileEntry {
  std::string path;  // relative to the run directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunResult {
  std::string run_dir;
  std::string config_hash;
  std::vector<CheckResult> checks;
  std::vector<FileEntry> files;
  bool complete = false;
  std::string error;  // set when the run stopped early

  bool pass() const;
  // 0 pass, 1 assertion failure or aborted run
  int exit_code() const { return pass() ? 0 : 1; }
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

// Hash of the kind and the canonical config; threads and output location are excluded.
std::string config_hash(const std::string& kind, const RunConfig& cfg);

// Runs into <out_dir>/<kind>-<hash prefix>. Throws ConfigError for an unknown kind or an
// existing run directory without force. The manifest is written even when the run aborts.
RunResult run_experiment(const RunConfig& cfg, const RunOptions& options);

std::string tool_version();

}  // namespace asepkpz
