#include "pipeline_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

#include "thermadl/error.hpp"

namespace thermadl::cli {

using json = nlohmann::json;

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "preprocess.target_len", "features.temporal_k", "features.spatial_block",
      "svm.regularization_c",  "svm.max_epochs",      "svm.tolerance",
      "svm.seed",              "eval.protocol",       "eval.k",
      "eval.seed",             "eval.fall_label"};
  return keys;
}

void PipelineConfig::validate() const {
  settings().feature_config().validate();
  svm.validate();
  if (eval.protocol != "loso" && eval.protocol != "kfold")
    throw InvalidArgument("eval.protocol must be \"loso\" or \"kfold\", got \"" + eval.protocol + "\"");
  if (eval.protocol == "kfold" && eval.k < 2) throw InvalidArgument("eval.k must be at least 2");
}

PipelineSettings PipelineConfig::settings() const {
  PipelineSettings s;
  s.target_len = target_len;
  s.temporal_k = temporal_k;
  s.spatial_block = spatial_block;
  s.svm = svm;
  s.fall_label = eval.fall_label;
  return s;
}

namespace {

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end)
    throw InvalidArgument("invalid value '" + std::string(text) + "' for " + std::string(key));
  return value;
}

template <typename T>
T json_value(const json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw InvalidArgument("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0))
        throw InvalidArgument("");
    } else {
      if (!v.is_number()) throw InvalidArgument("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw InvalidArgument("config key " + key + " has the wrong type: " + v.dump());
  }
}

}  // namespace

void apply_override(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "preprocess.target_len") cfg.target_len = parse_number<std::size_t>(key, value);
  else if (key == "features.temporal_k") cfg.temporal_k = parse_number<std::size_t>(key, value);
  else if (key == "features.spatial_block") cfg.spatial_block = parse_number<std::size_t>(key, value);
  else if (key == "svm.regularization_c") cfg.svm.regularization_c = parse_number<double>(key, value);
  else if (key == "svm.max_epochs") cfg.svm.max_epochs = parse_number<std::size_t>(key, value);
  else if (key == "svm.tolerance") cfg.svm.tolerance = parse_number<double>(key, value);
  else if (key == "svm.seed") cfg.svm.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "eval.protocol") cfg.eval.protocol = std::string(value);
  else if (key == "eval.k") cfg.eval.k = parse_number<std::size_t>(key, value);
  else if (key == "eval.seed") cfg.eval.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "eval.fall_label") cfg.eval.fall_label = std::string(value);
  else throw InvalidArgument("unknown config key \"" + std::string(key) + "\"");
}

PipelineConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw InvalidArgument("config must be a JSON object");
  PipelineConfig cfg;
  for (const auto& [section, body] : doc.items()) {
    if (!body.is_object())
      throw InvalidArgument("config section \"" + section + "\" must be an object");
    for (const auto& [name, v] : body.items()) {
      const std::string key = section + "." + name;
      if (key == "preprocess.target_len") cfg.target_len = json_value<std::size_t>(v, key);
      else if (key == "features.temporal_k") cfg.temporal_k = json_value<std::size_t>(v, key);
      else if (key == "features.spatial_block") cfg.spatial_block = json_value<std::size_t>(v, key);
      else if (key == "svm.regularization_c") cfg.svm.regularization_c = json_value<double>(v, key);
      else if (key == "svm.max_epochs") cfg.svm.max_epochs = json_value<std::size_t>(v, key);
      else if (key == "svm.tolerance") cfg.svm.tolerance = json_value<double>(v, key);
      else if (key == "svm.seed") cfg.svm.seed = json_value<std::uint64_t>(v, key);
      else if (key == "eval.protocol") cfg.eval.protocol = json_value<std::string>(v, key);
      else if (key == "eval.k") cfg.eval.k = json_value<std::size_t>(v, key);
      else if (key == "eval.seed") cfg.eval.seed = json_value<std::uint64_t>(v, key);
      else if (key == "eval.fall_label") cfg.eval.fall_label = json_value<std::string>(v, key);
      else throw InvalidArgument("unknown config key \"" + key + "\"");
    }
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  try {
    return config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path.string() + ": invalid JSON: " + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

json config_to_json(const PipelineConfig& cfg) {
  return json{
      {"preprocess", {{"target_len", cfg.target_len}}},
      {"features", {{"temporal_k", cfg.temporal_k}, {"spatial_block", cfg.spatial_block}}},
      {"svm",
       {{"regularization_c", cfg.svm.regularization_c},
        {"max_epochs", cfg.svm.max_epochs},
        {"tolerance", cfg.svm.tolerance},
        {"seed", cfg.svm.seed}}},
      {"eval",
       {{"protocol", cfg.eval.protocol},
        {"k", cfg.eval.k},
        {"seed", cfg.eval.seed},
        {"fall_label", cfg.eval.fall_label}}},
  };
}

std::string config_hash(const PipelineConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : config_to_json(cfg).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace thermadl::cli
