#pragma once

// Run configuration for the command-line tool. The JSON layout is described
// by run_config_schema(); unknown keys are rejected before any work starts.

#include "hrlf/data.hpp"
#include "hrlf/encoder.hpp"
#include "hrlf/eval.hpp"
#include "hrlf/fusion.hpp"
#include "hrlf/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hrlf::cli {

struct EvalSettings {
  /// Empty means the task default (binary F1 or macro F1).
  std::optional<eval::Metric> metric;
  std::string split = "test";
  std::vector<msm::TestingCondition> sweep_conditions{msm::TestingCondition::lav};
};

struct RunConfig {
  std::uint64_t seed = 0;
  /// Dataset directory, relative to --out.
  std::string data_path = "data";
  data::SyntheticConfig synthetic;
  encoder::EncoderConfig encoder;
  fusion::ScaleCombine combine = fusion::ScaleCombine::mean;
  Index stats_hidden = 0;
  train::TrainConfig train;
  EvalSettings eval;
};

/// JSON Schema (draft 2020-12 subset) for the config file.
const std::string& run_config_schema();

/// Validates `instance` against `schema`. Supports type, properties,
/// additionalProperties, enum, minimum, maximum, exclusiveMinimum, items,
/// minItems and maxItems. Returns one message per violation.
std::vector<std::string> validate_against_schema(const std::string& instance, const std::string& schema);

/// Parses and validates a config document; throws ConfigError listing
/// every schema violation. `seed_override` replaces the top-level seed.
RunConfig parse_run_config(const std::string& text, std::optional<std::uint64_t> seed_override = std::nullopt);

/// Reads `path` (defaults when empty) and applies HRLF_SEED if set.
RunConfig load_run_config(const std::filesystem::path& path);

/// HRLF_SEED as a seed, if present. Throws ConfigError when malformed.
std::optional<std::uint64_t> seed_from_env();

/// The effective configuration as JSON, for run records.
std::string to_json(const RunConfig& config);

}  // namespace hrlf::cli
