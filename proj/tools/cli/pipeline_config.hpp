#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermadl/eval.hpp"

namespace thermadl::cli {

struct EvalProtocol {
  std::string protocol = "loso";  // "loso" | "kfold"
  std::size_t k = 10;
  std::uint64_t seed = 42;
  std::string fall_label = "fall";
};

// Everything a subcommand needs to run the pipeline. Loaded from a JSON file
// and then patched with flat dotted-key overrides such as
// `--features.temporal_k 5`.
struct PipelineConfig {
  std::size_t target_len = kDefaultTargetLength;
  std::size_t temporal_k = kDefaultTemporalK;
  std::size_t spatial_block = kDefaultSpatialBlock;
  SvmConfig svm;
  EvalProtocol eval;

  void validate() const;
  PipelineSettings settings() const;
  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

// Dotted keys accepted in config files and as CLI overrides.
const std::vector<std::string>& config_keys();

// Unknown keys and type mismatches are rejected.
PipelineConfig config_from_json(const nlohmann::json& doc);
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const PipelineConfig& cfg);

// Applies one override given as text, e.g. ("svm.regularization_c", "0.5").
void apply_override(PipelineConfig& cfg, std::string_view key, std::string_view value);

// FNV-1a 64 of the canonical (sorted-key) JSON dump, as 16 hex digits.
std::string config_hash(const PipelineConfig& cfg);

}  // namespace thermadl::cli
