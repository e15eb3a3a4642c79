// Flat key-value experiment configuration with [section] headers.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qlab/linalg.hpp"

namespace qlab {

inline constexpr Index kMaxConfigDimension = 8192;

struct ExperimentConfig {
  std::string kind = "verify";  // sweep | verify | gen | report
  std::uint64_t seed = 1;
  double epsilon = 1.0 / 12.0;
  Index workers = 1;
  std::string out = "out";

  std::vector<Index> d{4000};
  std::vector<Index> r{1};
  std::vector<double> gap{0.4, 0.1, 0.025};
  std::vector<std::string> solver{"block_krylov", "power_method"};
  std::vector<Index> budget{1000};
  std::vector<Index> batch{1};

  Index trials = 5;

  std::vector<std::string> claims;  // empty: every registered claim
  std::map<std::string, std::string> params;  // "<claim>.<name>" overrides

  bool operator==(const ExperimentConfig&) const = default;
};

// [experiment] kind, seed, epsilon, workers, out
// [grid]       d, r, gap, solver, budget, batch   (comma lists)
// [trials]     n
// [verify]     claims, and free "<claim>.<name>" keys
// '#' and ';' start comments. The seed key is mandatory.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);
void validate_config(const ExperimentConfig& cfg);

// FNV-1a 64 of the canonical serialization, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

// Applies a single "section.key=value" style override.
void set_config_value(ExperimentConfig& cfg, const std::string& section,
                      const std::string& key, const std::string& value);

}  // namespace qlab
