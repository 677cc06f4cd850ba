#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "noma/harness.hpp"

namespace noma {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Flat key = value text config. Lines starting with '#' and blank lines are
/// ignored; values are SI-unit numbers, comma lists, or names.
struct RunConfig {
  Scenario scenario;
  int n_trials = 100;
  std::uint64_t seed = 1;
  std::vector<Scheme> schemes = {Scheme::Proposed, Scheme::SNoma, Scheme::SOma,
                                 Scheme::Benchmark};
  double eps = 1e-4;
  int n_max = 50;
  int threads = 0;
  int oracle_resolution = 64;

  /// Keys in file order, for echoing into manifests.
  std::vector<std::pair<std::string, std::string>> echo;
};

/// Throws ConfigError naming the offending key on unknown keys or bad values.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

std::string render_run_config(const RunConfig& cfg);

}  // namespace noma
