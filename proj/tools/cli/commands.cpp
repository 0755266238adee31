#include "commands.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "pipeline_config.hpp"
#include "thermadl/error.hpp"
#include "thermadl/eval.hpp"
#include "thermadl/synthgen.hpp"

#ifndef THERMADL_VERSION
#define THERMADL_VERSION "0.0.0"
#endif

namespace thermadl::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string tool_version() { return THERMADL_VERSION; }

namespace {

// Dotted-key overrides collected by CLI11, applied on top of --config.
struct ConfigOptions {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config_path, "Pipeline config JSON")->check(CLI::ExistingFile);
    for (const auto& key : config_keys())
      cmd.add_option("--" + key, overrides[key], "Override " + key);
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    for (const auto& [key, value] : overrides)
      if (!value.empty()) apply_override(cfg, key, value);
    cfg.validate();
    return cfg;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

json provenance(const PipelineConfig& cfg) {
  return json{{"tool_version", tool_version()},
              {"config", config_to_json(cfg)},
              {"config_hash", config_hash(cfg)}};
}

// --- generate ----------------------------------------------------------------

struct GenerateArgs {
  std::string out_dir;
  std::size_t subjects = 8;
  std::size_t reps = 3;
  std::uint64_t seed = 42;
  std::string scene_path;
};

SceneParams load_scene(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path.string() + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) throw InvalidArgument(path.string() + ": scene must be a JSON object");
  SceneParams scene = default_scene(doc.value("offset_seed", kDefaultSceneSeed));
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "offset_seed") continue;
      if (key == "ambient_mean") scene.ambient_mean = v.get<double>();
      else if (key == "noise_std") scene.noise_std = v.get<double>();
      else if (key == "frame_rate_hz") scene.frame_rate_hz = v.get<double>();
      else if (key == "quantize_step") scene.quantize_step = v.get<double>();
      else if (key == "ambient_pixel_offsets") {
        const auto offsets = v.get<std::vector<double>>();
        if (offsets.size() != kPixelCount)
          throw InvalidArgument("ambient_pixel_offsets needs 64 values");
        std::copy(offsets.begin(), offsets.end(), scene.ambient_pixel_offsets.begin());
      } else {
        throw InvalidArgument("unknown scene key \"" + key + "\"");
      }
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
  scene.validate();
  return scene;
}

int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
  CorpusOptions opts;
  opts.subjects = a.subjects;
  opts.reps = a.reps;
  opts.seed = a.seed;
  if (!a.scene_path.empty()) opts.scene = load_scene(a.scene_path);
  const auto corpus = generate_corpus(opts);
  write_corpus(corpus, a.out_dir);
  if (corpus.clamped_pixels > 0)
    err << "warning: " << corpus.clamped_pixels << " pixel values clamped to [0, 80] C\n";
  out << "wrote " << corpus.dataset.sequences.size() << " sequences and "
      << corpus.dataset.backgrounds.size() << " background clips to "
      << (fs::path(a.out_dir) / "manifest.json").string() << '\n';
  return kExitOk;
}

// --- featurize / train / evaluate --------------------------------------------

struct DataArgs {
  std::string manifest;
  std::string output;
  ConfigOptions config;
};

int cmd_featurize(const DataArgs& a, std::ostream& out) {
  const auto cfg = a.config.resolve();
  const auto dataset = load_dataset(a.manifest);
  const auto features = featurize_dataset(dataset, cfg.settings());

  std::string csv = "label,subject";
  if (!features.empty())
    for (std::size_t d = 0; d < features.front().size(); ++d) csv += ",f" + std::to_string(d);
  csv += '\n';
  for (std::size_t i = 0; i < features.size(); ++i) {
    csv += dataset.sequences[i].label() + ',' + dataset.sequences[i].subject_id();
    for (double v : features[i]) csv += ',' + format_double(v);
    csv += '\n';
  }
  if (a.output.empty())
    out << csv;
  else
    write_text(a.output, csv);
  return kExitOk;
}

int cmd_train(const DataArgs& a, std::ostream& out) {
  const auto cfg = a.config.resolve();
  const auto dataset = load_dataset(a.manifest);
  const auto features = featurize_dataset(dataset, cfg.settings());
  std::vector<std::string> labels;
  for (const auto& s : dataset.sequences) labels.push_back(s.label());

  auto model = train(features, labels, cfg.svm, dataset.manifest.label_set);
  model.pipeline = provenance(cfg);
  save_model(model, a.output);

  std::size_t hits = 0;
  for (std::size_t i = 0; i < features.size(); ++i) hits += predict(model, features[i]).label == labels[i];
  out << "trained " << model.class_count() << "-class model on " << features.size()
      << " sequences (" << model.dimension() << " features, " << model.epochs_run
      << " epochs), training accuracy " << hits << "/" << features.size() << "; wrote "
      << a.output << '\n';
  return kExitOk;
}

int cmd_evaluate(const DataArgs& a, std::ostream& out) {
  const auto cfg = a.config.resolve();
  const auto dataset = load_dataset(a.manifest);
  const auto folds = cfg.eval.protocol == "loso"
                         ? loso_split(dataset.manifest)
                         : stratified_kfold_split(dataset.manifest, cfg.eval.k, cfg.eval.seed);
  const auto report = run_pipeline_cv(dataset, folds, cfg.settings());

  out << "protocol: " << cfg.eval.protocol << "\n" << render_report_text(report);
  if (!a.output.empty()) {
    json doc = provenance(cfg);
    doc["manifest"] = a.manifest;
    doc["protocol"] = cfg.eval.protocol;
    doc.update(report_to_json(report));
    write_text(a.output, doc.dump(2) + "\n");
    out << "report written to " << a.output << '\n';
  }
  return kExitOk;
}

// --- predict -----------------------------------------------------------------

struct PredictArgs {
  std::string model;
  std::string background;
  std::vector<std::string> sequences;
  bool scores = false;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const auto model = load_model(a.model);
  if (!model.pipeline.contains("config"))
    throw ModelError(a.model + ": model has no embedded pipeline config");
  PipelineConfig cfg;
  try {
    cfg = config_from_json(model.pipeline.at("config"));
    cfg.validate();
  } catch (const Error& e) {
    throw ModelError(a.model + ": embedded pipeline config: " + e.what());
  }
  const FeatureExtractor extractor(cfg.settings().feature_config());
  if (extractor.config().dimension() != model.dimension())
    throw ModelError("dimension mismatch: pipeline config yields " +
                     std::to_string(extractor.config().dimension()) + " features but the model expects " +
                     std::to_string(model.dimension()));
  const auto bg = estimate_background(parse_sequence_file(a.background));

  for (const auto& path : a.sequences) {
    const auto fv = featurize_sequence(parse_sequence_file(path), bg, extractor).combined();
    const auto p = predict(model, fv);
    out << path << '\t' << p.label;
    if (a.scores)
      for (std::size_t c = 0; c < model.class_count(); ++c)
        out << '\t' << model.classes[c] << '=' << format_double(p.scores[c]);
    out << '\n';
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Activity recognition from 8x8 thermal sequences", "thermadl"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Render a synthetic labeled corpus");
  generate->add_option("--out", gen.out_dir, "Output directory")->required();
  generate->add_option("--subjects", gen.subjects, "Synthetic subjects")->capture_default_str();
  generate->add_option("--reps", gen.reps, "Sessions per subject")->capture_default_str();
  generate->add_option("--seed", gen.seed, "Corpus seed")->capture_default_str();
  generate->add_option("--scene", gen.scene_path, "Scene parameters JSON")->check(CLI::ExistingFile);

  DataArgs feat;
  auto* featurize = app.add_subcommand("featurize", "Write one feature row per sequence as CSV");
  featurize->add_option("--data", feat.manifest, "Dataset manifest")->required();
  featurize->add_option("--out", feat.output, "Output CSV (default: stdout)");
  feat.config.attach(*featurize);

  DataArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a whole dataset");
  train_cmd->add_option("--data", tr.manifest, "Dataset manifest")->required();
  train_cmd->add_option("--model", tr.output, "Model file to write")->required();
  tr.config.attach(*train_cmd);

  DataArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate the pipeline on a dataset");
  evaluate->add_option("--data", ev.manifest, "Dataset manifest")->required();
  evaluate->add_option("--report", ev.output, "Write the JSON report here");
  ev.config.attach(*evaluate);

  PredictArgs pr;
  auto* predict_cmd = app.add_subcommand("predict", "Classify raw sequence files");
  predict_cmd->add_option("--model", pr.model, "Model file")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--background", pr.background, "Empty-scene frame CSV")
      ->required()
      ->check(CLI::ExistingFile);
  predict_cmd->add_option("sequences", pr.sequences, "Frame CSV files")->required();
  predict_cmd->add_flag("--scores", pr.scores, "Also print per-class decision scores");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen, out, err);
    if (featurize->parsed()) return cmd_featurize(feat, out);
    if (train_cmd->parsed()) return cmd_train(tr, out);
    if (evaluate->parsed()) return cmd_evaluate(ev, out);
    if (predict_cmd->parsed()) return cmd_predict(pr, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace thermadl::cli
