#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "qesp/netsim.hpp"

namespace qesp {

// Experiment configuration as read from JSON. Unknown keys are rejected;
// errors carry Errc::ConfigError with the dotted path of the bad field
// (e.g. "link.capacity: missing required field").
struct ExperimentConfig {
  netsim::SimConfig sim;
  std::optional<std::string> output;
};

// With `need_simulation` false, "sources", "link" and "duration" become
// optional (the one-shot encap/decap/classify tools only need SAs and rules).
ExperimentConfig parse_experiment_config(std::string_view json_text, bool need_simulation = true);
ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        bool need_simulation = true);

// Seed precedence: explicit flag, then QESP_LAB_SEED, then the config value.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t config_seed);

// Selector JSON: {"src": "10.0.0.0/8", "dst": "any", "protocol": 17 | "any",
// "src_ports": [lo, hi] | "any", "dst_ports": ...}; absent keys mean any.
Selector parse_selector_json(std::string_view json_text);

}  // namespace qesp
