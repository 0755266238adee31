#include <doctest.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <numeric>
#include <set>

#include "support.hpp"
#include "thermadl/error.hpp"
#include "thermadl/eval.hpp"
#include "thermadl/rng.hpp"
#include "thermadl/synthgen.hpp"

using namespace thermadl;
using Matrix = std::vector<std::vector<double>>;

namespace {

// Every index lands in exactly one test fold and train/test are disjoint
// complements.
void check_partition(const std::vector<Fold>& folds, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (const auto& f : folds) {
    CHECK_FALSE(f.test.empty());
    std::set<std::size_t> test(f.test.begin(), f.test.end());
    std::set<std::size_t> train(f.train.begin(), f.train.end());
    CHECK(test.size() == f.test.size());
    CHECK(train.size() == f.train.size());
    CHECK(test.size() + train.size() == n);
    for (auto i : f.test) {
      ++seen[i];
      CHECK(train.count(i) == 0);
    }
  }
  for (int c : seen) CHECK(c == 1);
}

std::vector<std::string> seven_labels() { return infra_adl_label_set(); }

}  // namespace

TEST_CASE("LOSO over 8 subjects x 21 sequences") {
  std::vector<std::string> subjects;
  for (int s = 0; s < 8; ++s)
    for (int i = 0; i < 21; ++i) subjects.push_back("s" + std::to_string(s));
  const auto folds = loso_split(subjects);
  REQUIRE(folds.size() == 8);
  check_partition(folds, subjects.size());
  for (std::size_t f = 0; f < 8; ++f) {
    CHECK(folds[f].test.size() == 21);
    CHECK(folds[f].train.size() == 147);
    for (auto i : folds[f].test) CHECK(subjects[i] == "s" + std::to_string(f));
  }
}

TEST_CASE("LOSO with two subjects") {
  const std::vector<std::string> subjects{"A", "A", "A", "B", "B", "B"};
  const auto folds = loso_split(subjects);
  REQUIRE(folds.size() == 2);
  CHECK(folds[0].test == std::vector<std::size_t>{0, 1, 2});
  CHECK(folds[0].train == std::vector<std::size_t>{3, 4, 5});
  CHECK(folds[1].test == std::vector<std::size_t>{3, 4, 5});
  CHECK(folds[1].train == std::vector<std::size_t>{0, 1, 2});
  CHECK_THROWS_AS(loso_split(std::vector<std::string>{"A", "A"}), InvalidArgument);
  CHECK_THROWS_AS(loso_split(std::vector<std::string>{}), InvalidArgument);
}

TEST_CASE("LOSO covers random manifests and never mixes subjects") {
  Rng rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    DatasetManifest m;
    m.label_set = seven_labels();
    const auto n_subjects = 2 + rng.index(9);
    const auto n = n_subjects + rng.index(80);
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = i < n_subjects ? i : rng.index(n_subjects);
      m.entries.push_back({"f" + std::to_string(i) + ".csv", m.label_set[rng.index(7)],
                           "subj" + std::to_string(s), "sess"});
    }
    const auto folds = loso_split(m);
    CHECK(folds.size() == n_subjects);
    check_partition(folds, n);
    for (const auto& f : folds) {
      std::set<std::string> test_subjects, train_subjects;
      for (auto i : f.test) test_subjects.insert(m.entries[i].subject);
      for (auto i : f.train) train_subjects.insert(m.entries[i].subject);
      CHECK(test_subjects.size() == 1);
      CHECK(train_subjects.count(*test_subjects.begin()) == 0);
    }
  }
}

TEST_CASE("stratified k-fold with 30 per class and k = 10") {
  std::vector<std::size_t> ids;
  for (std::size_t c = 0; c < 7; ++c) ids.insert(ids.end(), 30, c);
  const auto folds = stratified_kfold_split(ids, seven_labels(), 10, 42);
  REQUIRE(folds.size() == 10);
  check_partition(folds, ids.size());
  for (const auto& f : folds) {
    std::vector<int> per_class(7, 0);
    for (auto i : f.test) ++per_class[ids[i]];
    for (int c : per_class) CHECK(c == 3);
  }
  CHECK(stratified_kfold_split(ids, seven_labels(), 10, 42).front().test == folds.front().test);
  CHECK(stratified_kfold_split(ids, seven_labels(), 10, 43).front().test != folds.front().test);
}

TEST_CASE("stratified k-fold balance holds on random label counts") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.index(9);
    const std::size_t classes = 1 + rng.index(7);
    std::vector<std::size_t> ids;
    for (std::size_t c = 0; c < classes; ++c) ids.insert(ids.end(), k + rng.index(25), c);
    Rng mix(trial);
    mix.shuffle(std::span<std::size_t>(ids));
    const auto all = seven_labels();
    std::vector<std::string> names(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(classes));
    const auto folds = stratified_kfold_split(ids, names, k, trial);
    REQUIRE(folds.size() == k);
    check_partition(folds, ids.size());
    for (std::size_t c = 0; c < classes; ++c) {
      std::size_t lo = ids.size(), hi = 0;
      for (const auto& f : folds) {
        const auto n = static_cast<std::size_t>(
            std::count_if(f.test.begin(), f.test.end(), [&](auto i) { return ids[i] == c; }));
        lo = std::min(lo, n);
        hi = std::max(hi, n);
      }
      CHECK(hi - lo <= 1);
    }
  }
}

TEST_CASE("k equal to the smallest class size gives one sample per fold for it") {
  std::vector<std::size_t> ids{0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  const auto folds = stratified_kfold_split(ids, std::vector<std::string>{"fall", "walk"}, 5, 1);
  for (const auto& f : folds)
    CHECK(std::count_if(f.test.begin(), f.test.end(), [&](auto i) { return ids[i] == 0; }) == 1);
}

TEST_CASE("stratified k-fold preconditions") {
  const std::vector<std::size_t> ids{0, 0, 0, 1, 1};
  const std::vector<std::string> names{"fall", "sit_still"};
  CHECK_THROWS_AS(stratified_kfold_split(ids, names, 1, 0), InvalidArgument);
  CHECK_THROWS_WITH_AS(stratified_kfold_split(ids, names, 3, 0), doctest::Contains("sit_still"),
                       InvalidArgument);
}

TEST_CASE("fall metrics on a hand-built matrix") {
  // 126 falls and 126 non-falls: one non-fall (stand_still) called a fall.
  ConfusionMatrix cm(seven_labels());
  const auto labels = seven_labels();
  const auto fall = static_cast<std::size_t>(
      std::find(labels.begin(), labels.end(), "fall") - labels.begin());
  const std::size_t other = fall == 0 ? 1 : 0;
  cm.add(fall, fall, 126);
  cm.add(other, other, 125);
  cm.add(other, fall, 1);
  const auto m = fall_metrics(cm, "fall");
  REQUIRE(m.sensitivity);
  REQUIRE(m.specificity);
  CHECK(*m.sensitivity == 1.0);
  CHECK(*m.specificity == doctest::Approx(125.0 / 126.0).epsilon(1e-12));
  CHECK(*cm.overall_accuracy() == doctest::Approx(251.0 / 252.0));
  CHECK_THROWS_AS(fall_metrics(cm, "tumble"), InvalidArgument);
}

TEST_CASE("an empty confusion matrix yields absent metrics") {
  ConfusionMatrix cm(seven_labels());
  CHECK(cm.total() == 0);
  CHECK_FALSE(cm.overall_accuracy().has_value());
  for (std::size_t c = 0; c < 7; ++c) CHECK_FALSE(cm.class_accuracy(c).has_value());
  const auto m = fall_metrics(cm, "fall");
  CHECK_FALSE(m.sensitivity.has_value());
  CHECK_FALSE(m.specificity.has_value());
}

TEST_CASE("metrics recompute from random matrices") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    ConfusionMatrix cm(seven_labels());
    std::vector<std::vector<std::uint64_t>> raw(7, std::vector<std::uint64_t>(7));
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t j = 0; j < 7; ++j) {
        raw[i][j] = rng.index(i == j ? 40 : 4);
        cm.add(i, j, raw[i][j]);
      }
    std::uint64_t total = 0, diag = 0;
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t j = 0; j < 7; ++j) {
        total += raw[i][j];
        diag += i == j ? raw[i][j] : 0;
      }
    CHECK(cm.total() == total);
    CHECK(cm.trace() == diag);
    if (total) CHECK(*cm.overall_accuracy() == doctest::Approx(double(diag) / double(total)));
    for (std::size_t i = 0; i < 7; ++i) {
      const auto row = std::accumulate(raw[i].begin(), raw[i].end(), std::uint64_t{0});
      CHECK(cm.row_total(i) == row);
      if (row) CHECK(*cm.class_accuracy(i) == doctest::Approx(double(raw[i][i]) / double(row)));
    }
  }
}

TEST_CASE("a learner that always answers class 0") {
  const auto labels = seven_labels();
  Matrix x;
  std::vector<std::string> y;
  std::vector<std::string> subjects;
  for (std::size_t c = 0; c < 7; ++c)
    for (int i = 0; i < 4; ++i) {
      x.push_back({double(c), double(i)});
      y.push_back(labels[c]);
      subjects.push_back(i < 2 ? "a" : "b");
    }
  const FoldLearner constant = [&](auto, auto, std::span<const std::vector<double>> test) {
    return std::vector<FoldPrediction>(test.size(), FoldPrediction{labels[0], {}});
  };
  const auto folds = loso_split(subjects);
  const auto report = build_report(labels, cross_validate(x, y, folds, constant), folds.size(), labels[0]);
  CHECK(*report.per_class_accuracy[0] == 1.0);
  for (std::size_t c = 1; c < 7; ++c) CHECK(*report.per_class_accuracy[c] == 0.0);
  CHECK(*report.overall_accuracy == doctest::Approx(1.0 / 7.0));
  CHECK(*report.fall.sensitivity == 1.0);
  CHECK(*report.fall.specificity == 0.0);
}

TEST_CASE("cross-validation on perfectly separable features") {
  const auto labels = seven_labels();
  Rng rng(9);
  Matrix x;
  std::vector<std::string> y, subjects;
  for (int s = 0; s < 4; ++s)
    for (std::size_t c = 0; c < 7; ++c)
      for (int r = 0; r < 3; ++r) {
        std::vector<double> v(7);
        for (std::size_t d = 0; d < 7; ++d) v[d] = (d == c ? 10.0 : 0.0) + rng.normal(0, 0.3);
        x.push_back(v);
        y.push_back(labels[c]);
        subjects.push_back("s" + std::to_string(s));
      }
  const auto folds = loso_split(subjects);
  for (bool parallel : {true, false}) {
    const auto records = cross_validate(x, y, folds, svm_learner(SvmConfig{}, labels), parallel);
    const auto report = build_report(labels, records, folds.size(), "fall");
    CHECK(*report.overall_accuracy == 1.0);
    for (const auto& a : report.per_class_accuracy) CHECK(*a == 1.0);
    CHECK(*report.fall.sensitivity == 1.0);
    CHECK(*report.fall.specificity == 1.0);
    REQUIRE(report.predictions.size() == x.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(report.predictions[i].index == i);
  }
}

TEST_CASE("the scaler is fitted on the training fold only") {
  Rng rng(3);
  Matrix x;
  std::vector<std::string> y, subjects;
  for (int s = 0; s < 3; ++s)
    for (int i = 0; i < 10; ++i) {
      // Each subject has its own offset so fold means must differ.
      x.push_back({rng.normal(5.0 * s, 1.0), rng.normal(0, 1)});
      y.push_back(i % 2 ? "fall" : "walk_left_right");
      subjects.push_back("s" + std::to_string(s));
    }
  const auto folds = loso_split(subjects);
  std::mutex lock;
  std::vector<double> fitted_means;
  const auto inner = svm_learner(SvmConfig{}, {});
  const FoldLearner spy = [&](std::span<const std::vector<double>> tx,
                              std::span<const std::string> ty, std::span<const std::vector<double>> test) {
    const auto m = train(tx, ty, SvmConfig{});
    double mean = 0;
    for (const auto& v : tx) mean += v[0];
    mean /= double(tx.size());
    CHECK(m.scaler_mean[0] == doctest::Approx(mean).epsilon(1e-12));
    {
      std::lock_guard g(lock);
      fitted_means.push_back(m.scaler_mean[0]);
    }
    return inner(tx, ty, test);
  };
  cross_validate(x, y, folds, spy);
  std::sort(fitted_means.begin(), fitted_means.end());
  REQUIRE(fitted_means.size() == 3);
  CHECK(fitted_means[0] < fitted_means[1] - 1.0);
  CHECK(fitted_means[1] < fitted_means[2] - 1.0);
}

TEST_CASE("cross-validation error handling") {
  const Matrix x{{0.0}, {1.0}, {2.0}, {3.0}};
  const std::vector<std::string> y{"a", "b", "a", "b"};
  const std::vector<Fold> overlapping{{{2, 3}, {0, 1}}, {{2, 3}, {1, 0}}};
  const FoldLearner echo = [](auto, auto, std::span<const std::vector<double>> test) {
    return std::vector<FoldPrediction>(test.size(), FoldPrediction{"a", {}});
  };
  CHECK_THROWS_AS(cross_validate(x, y, overlapping, echo), InvalidArgument);
  const FoldLearner broken = [](auto, auto, auto) -> std::vector<FoldPrediction> {
    throw Error("boom");
  };
  const std::vector<Fold> ok{{{2, 3}, {0, 1}}, {{0, 1}, {2, 3}}};
  CHECK_THROWS_WITH(cross_validate(x, y, ok, broken), doctest::Contains("fold 0: boom"));
  CHECK_THROWS_AS(cross_validate(x, std::vector<std::string>{"a"}, ok, echo), InvalidArgument);
}

TEST_CASE("report numbers recount from the per-sequence log") {
  CorpusOptions opts;
  opts.subjects = 3;
  opts.reps = 1;
  const auto corpus = generate_corpus(opts);
  const auto folds = loso_split(corpus.dataset.manifest);
  const auto report = run_pipeline_cv(corpus.dataset, folds, PipelineSettings{});
  const auto doc = report_to_json(report);

  const auto& labels = report.labels;
  REQUIRE(doc["predictions"].size() == corpus.dataset.sequences.size());
  std::map<std::pair<std::string, std::string>, std::uint64_t> counts;
  std::size_t hits = 0, fall_total = 0, fall_hit = 0, other_total = 0, other_ok = 0;
  for (const auto& p : doc["predictions"]) {
    const auto truth = p["truth"].get<std::string>();
    const auto pred = p["predicted"].get<std::string>();
    ++counts[{truth, pred}];
    hits += truth == pred;
    if (truth == "fall") {
      ++fall_total;
      fall_hit += pred == "fall";
    } else {
      ++other_total;
      other_ok += pred != "fall";
    }
  }
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < labels.size(); ++j)
      CHECK(doc["confusion"][i][j].get<std::uint64_t>() == counts[{labels[i], labels[j]}]);
  CHECK(doc["overall_accuracy"].get<double>() ==
        doctest::Approx(double(hits) / double(doc["predictions"].size())));
  CHECK(doc["fall_sensitivity"].get<double>() == doctest::Approx(double(fall_hit) / double(fall_total)));
  CHECK(doc["fall_specificity"].get<double>() == doctest::Approx(double(other_ok) / double(other_total)));
  CHECK(doc["fold_count"].get<std::size_t>() == 3);
  const auto text = render_report_text(report);
  CHECK(text.find("fall") != std::string::npos);
}
