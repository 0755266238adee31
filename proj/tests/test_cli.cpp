#include <doctest.h>

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli/commands.hpp"
#include "support.hpp"
#include "thermadl/eval.hpp"
#include "thermadl/synthgen.hpp"

using namespace thermadl;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string field; std::getline(in, field, '\t');) out.push_back(field);
  return out;
}

// One shared full-size corpus on disk for the slower end-to-end cases.
const test::TempDir& corpus_dir() {
  static test::TempDir dir;
  static const bool ready = [] {
    REQUIRE(run_cli({"generate", "--out", dir.path().string()}).code == 0);
    return true;
  }();
  (void)ready;
  return dir;
}

}  // namespace

TEST_CASE("generate writes a small corpus and is byte-for-byte reproducible") {
  test::TempDir a, b;
  const auto r = run_cli({"generate", "--out", a.path().string(), "--subjects", "2", "--reps", "1"});
  REQUIRE(r.code == 0);
  const auto ds = load_dataset(a / "manifest.json");
  CHECK(ds.sequences.size() == 14);
  CHECK(ds.backgrounds.size() == 2);
  REQUIRE(run_cli({"generate", "--out", b.path().string(), "--subjects", "2", "--reps", "1"}).code == 0);
  CHECK(test::read_text(a / "manifest.json") == test::read_text(b / "manifest.json"));
  for (const auto& e : ds.manifest.entries) CHECK(test::read_text(a / e.path) == test::read_text(b / e.path));
  CHECK(test::read_text(a / "subject01/session1/background.csv") ==
        test::read_text(b / "subject01/session1/background.csv"));
}

TEST_CASE("usage errors and help") {
  const auto missing = run_cli({"generate"});
  CHECK(missing.code == cli::kExitUsage);
  CHECK(missing.err.find("--out") != std::string::npos);
  CHECK(run_cli({}).code == cli::kExitUsage);
  CHECK(run_cli({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run_cli({"--help"}).code == 0);
  for (const char* sub : {"generate", "featurize", "train", "evaluate", "predict"}) {
    const auto r = run_cli({sub, "--help"});
    CHECK(r.code == 0);
    CHECK_FALSE(r.out.empty());
  }
  CHECK(run_cli({"--version"}).out.find(cli::tool_version()) != std::string::npos);
}

TEST_CASE("evaluate with LOSO logs every sequence") {
  const auto& dir = corpus_dir();
  test::TempDir work;
  const auto r = run_cli({"evaluate", "--data", (dir / "manifest.json").string(), "--report",
                          (work / "report.json").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("protocol: loso") != std::string::npos);
  const auto doc = json::parse(test::read_text(work / "report.json"));
  CHECK(doc["predictions"].size() == 168);
  CHECK(doc["fold_count"] == 8);
  CHECK(doc["protocol"] == "loso");
  CHECK(doc.contains("config_hash"));
  CHECK(doc["overall_accuracy"].get<double>() >= 0.85);
}

TEST_CASE("evaluate with stratified k-fold") {
  const auto& dir = corpus_dir();
  test::TempDir work;
  const auto r = run_cli({"evaluate", "--data", (dir / "manifest.json").string(), "--eval.protocol",
                          "kfold", "--eval.k", "10", "--report", (work / "report.json").string()});
  REQUIRE(r.code == 0);
  const auto doc = json::parse(test::read_text(work / "report.json"));
  CHECK(doc["fold_count"] == 10);
  CHECK(doc["fold_accuracies"].size() == 10);
  CHECK(doc["predictions"].size() == 168);
}

TEST_CASE("a corrupt manifest fails and names the file") {
  test::TempDir work;
  test::write_text(work / "manifest.json", "{\"label_set\": [\"fall\"], \"entries\": [");
  const auto r = run_cli({"evaluate", "--data", (work / "manifest.json").string()});
  CHECK(r.code != 0);
  CHECK(r.err.find((work / "manifest.json").string()) != std::string::npos);

  test::write_text(work / "m2.json",
                   R"({"label_set": ["fall"], "entries": [{"path": "nope.csv", "label": "jump", "subject": "a"}]})");
  const auto r2 = run_cli({"train", "--data", (work / "m2.json").string(), "--model",
                           (work / "model.json").string()});
  CHECK(r2.code != 0);
  CHECK(r2.err.find("m2.json") != std::string::npos);
  CHECK(r2.err.find("jump") != std::string::npos);
  CHECK(r2.err.find("nope.csv") != std::string::npos);
}

TEST_CASE("predict agrees with the in-process pipeline") {
  const auto& dir = corpus_dir();
  test::TempDir work;
  const auto model_path = (work / "model.json").string();
  REQUIRE(run_cli({"train", "--data", (dir / "manifest.json").string(), "--model", model_path}).code == 0);
  const auto model = load_model(model_path);
  CHECK(model.dimension() == 500);
  CHECK(model.pipeline.contains("config_hash"));

  const auto dataset = load_dataset(dir / "manifest.json");
  const auto features = featurize_dataset(dataset, PipelineSettings{});

  SUBCASE("training sequences") {
    for (std::size_t i : {0u, 5u, 40u, 167u}) {
      const auto& entry = dataset.manifest.entries[i];
      const auto bg = dir / (entry.subject + "/" + entry.session.substr(entry.subject.size() + 1) +
                             "/background.csv");
      const auto r = run_cli({"predict", "--model", model_path, "--background", bg.string(),
                              (dir / entry.path).string()});
      REQUIRE(r.code == 0);
      const auto fields = split_tabs(lines(r.out).at(0));
      REQUIRE(fields.size() == 2);
      CHECK(fields[1] == predict(model, features[i]).label);
    }
  }

  SUBCASE("a long raw recording is resampled first") {
    const auto scene = default_scene();
    const auto scripts = builtin_scripts(77);
    auto script = scripts.front();
    script.duration_s = 20.0;
    const auto raw = render_sequence(scene, script, 5);
    REQUIRE(raw.size() == 200);
    const auto empty = render_sequence(scene, empty_scene_script(5.0), 6);
    write_sequence_file(work / "long.csv", raw);
    write_sequence_file(work / "empty.csv", empty);

    const auto r = run_cli({"predict", "--model", model_path, "--background",
                            (work / "empty.csv").string(), "--scores", (work / "long.csv").string()});
    REQUIRE(r.code == 0);
    const auto fields = split_tabs(lines(r.out).at(0));
    REQUIRE(fields.size() == 2 + model.class_count());

    const auto offline = predict(
        model, featurize_sequence(raw, estimate_background(empty), FeatureExtractor(FeatureConfig{})).combined());
    CHECK(fields[1] == offline.label);
    for (std::size_t c = 0; c < model.class_count(); ++c) {
      const auto& f = fields[2 + c];
      CHECK(f.substr(0, f.find('=')) == model.classes[c]);
      CHECK(std::stod(f.substr(f.find('=') + 1)) == offline.scores[c]);
    }
  }

  SUBCASE("a model with the wrong dimension is rejected") {
    auto doc = json::parse(test::read_text(model_path));
    doc["pipeline"]["config"]["features"]["temporal_k"] = 4;
    test::write_text(work / "bad.json", doc.dump());
    const auto& entry = dataset.manifest.entries[0];
    const auto r = run_cli({"predict", "--model", (work / "bad.json").string(), "--background",
                            (dir / "subject01/session1/background.csv").string(),
                            (dir / entry.path).string()});
    CHECK(r.code != 0);
    CHECK(r.err.find("dimension mismatch") != std::string::npos);
  }
}

TEST_CASE("featurize writes one row per sequence") {
  test::TempDir work;
  REQUIRE(run_cli({"generate", "--out", work.path().string(), "--subjects", "2", "--reps", "1"}).code == 0);
  const auto r = run_cli({"featurize", "--data", (work / "manifest.json").string()});
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 15);
  CHECK(rows[0].rfind("label,subject,f0,", 0) == 0);
  CHECK(std::count(rows[1].begin(), rows[1].end(), ',') == 501);
}

TEST_CASE("config files: unknown keys rejected, round-trip reproduces results") {
  test::TempDir work;
  REQUIRE(run_cli({"generate", "--out", work.path().string(), "--subjects", "3", "--reps", "1"}).code == 0);
  const auto manifest = (work / "manifest.json").string();

  test::write_text(work / "typo.json", R"({"svm": {"c": 2.0}})");
  const auto bad = run_cli({"evaluate", "--data", manifest, "--config", (work / "typo.json").string()});
  CHECK(bad.code != 0);
  CHECK(bad.err.find("svm.c") != std::string::npos);

  const auto first = run_cli({"evaluate", "--data", manifest, "--svm.regularization_c", "0.5", "--features.spatial_block",
                              "4", "--report", (work / "r1.json").string()});
  REQUIRE(first.code == 0);
  const auto r1 = json::parse(test::read_text(work / "r1.json"));
  test::write_text(work / "cfg.json", r1["config"].dump());
  const auto second = run_cli({"evaluate", "--data", manifest, "--config", (work / "cfg.json").string(),
                               "--report", (work / "r2.json").string()});
  REQUIRE(second.code == 0);
  auto r2 = json::parse(test::read_text(work / "r2.json"));
  CHECK(r1["config_hash"] == r2["config_hash"]);
  CHECK(r1["predictions"] == r2["predictions"]);
  CHECK(r1["confusion"] == r2["confusion"]);
}
