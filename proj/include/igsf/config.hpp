// JSON configuration for the benchmark CLI: experiment selection (by name or
// by an inline model block), per-filter parameter overrides, run controls and
// output location. Parsing resolves every default so the serialized form is a
// complete, reproducible record of a run.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "igsf/experiments.hpp"

namespace igsf {

struct Config {
  ExperimentSetup setup;            // fully resolved experiment
  std::vector<FilterSpec> filters;  // fully resolved filter selections
  int runs = 1;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int threads = 1;
};

// Parses configuration text (JSON). Unknown experiments, malformed fields and
// constraint violations raise ConfigError with the offending field named.
Config parse_config(const std::string& text);

// Canonical JSON of the resolved configuration. parse_config(serialize_config(c))
// reproduces an equal Config.
std::string serialize_config(const Config& config);

// Equality through the canonical serialization.
bool config_equal(const Config& a, const Config& b);

}  // namespace igsf
