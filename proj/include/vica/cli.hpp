#pragma once

// The `vica` command line: plan, run, train, score, curve and judge
// subcommands over the library, with artifact manifests.

#include "vica/error.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vica::cli {

inline constexpr const char* kVersion = "1.0.0";

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;    // bad flags, bad config document
inline constexpr int kExitRuntime = 3;  // failures while running
inline constexpr int kExitService = 4;  // judge transport / service

int exit_code_for(ErrorCode code);

// Entry point; returns the process exit code. Diagnostics are single lines on
// `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

std::string sha256_hex(std::string_view bytes);

// Files written by one command plus the manifest describing them. The
// manifest carries the configuration hash, seed, tool and library versions and
// a hash per output file; no timestamps or absolute paths, so identical runs
// produce identical manifests.
class Artifacts {
 public:
  Artifacts(std::string command, std::string config_canonical, unsigned long long seed);

  void add(const std::string& name, std::string bytes);
  // Writes every file and manifest.json under `dir` (created if absent).
  void write(const std::filesystem::path& dir) const;
  std::string manifest() const;

 private:
  std::string command_;
  std::string config_;
  unsigned long long seed_;
  std::vector<std::pair<std::string, std::string>> files_;
};

} // namespace vica::cli
