#include "thermadl/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <future>
#include <numeric>
#include <sstream>

#include "thermadl/error.hpp"
#include "thermadl/rng.hpp"

namespace thermadl {

using json = nlohmann::json;

// --- splitting --------------------------------------------------------------

std::vector<Fold> loso_split(std::span<const std::string> subject_ids) {
  std::vector<std::string> subjects;
  for (const auto& s : subject_ids)
    if (std::find(subjects.begin(), subjects.end(), s) == subjects.end()) subjects.push_back(s);
  if (subjects.size() < 2)
    throw InvalidArgument("leave-one-subject-out needs at least two distinct subjects");

  std::vector<Fold> folds(subjects.size());
  for (std::size_t i = 0; i < subject_ids.size(); ++i) {
    const auto held_out = static_cast<std::size_t>(
        std::find(subjects.begin(), subjects.end(), subject_ids[i]) - subjects.begin());
    for (std::size_t f = 0; f < folds.size(); ++f)
      (f == held_out ? folds[f].test : folds[f].train).push_back(i);
  }
  return folds;
}

std::vector<Fold> loso_split(const DatasetManifest& manifest) {
  std::vector<std::string> subjects;
  subjects.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) subjects.push_back(e.subject);
  return loso_split(subjects);
}

std::vector<Fold> stratified_kfold_split(std::span<const std::size_t> class_ids,
                                         std::span<const std::string> class_names, std::size_t k,
                                         std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("k-fold cross-validation needs k >= 2");
  std::size_t n_classes = class_names.size();
  for (auto c : class_ids) n_classes = std::max(n_classes, c + 1);

  std::vector<std::vector<std::size_t>> members(n_classes);
  for (std::size_t i = 0; i < class_ids.size(); ++i) members[class_ids[i]].push_back(i);
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (members[c].empty()) continue;
    if (members[c].size() < k) {
      const std::string name = c < class_names.size() ? class_names[c] : std::to_string(c);
      throw InvalidArgument("class \"" + name + "\" has " + std::to_string(members[c].size()) +
                            " examples, fewer than k = " + std::to_string(k));
    }
  }

  std::vector<std::size_t> fold_of(class_ids.size());
  Rng rng(seed);
  std::size_t position = 0;
  for (auto& group : members) {
    rng.shuffle(std::span<std::size_t>(group));
    for (const auto idx : group) fold_of[idx] = position++ % k;
  }

  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < class_ids.size(); ++i)
    for (std::size_t f = 0; f < k; ++f) (f == fold_of[i] ? folds[f].test : folds[f].train).push_back(i);
  return folds;
}

std::vector<Fold> stratified_kfold_split(const DatasetManifest& manifest, std::size_t k,
                                         std::uint64_t seed) {
  const auto ids = manifest.label_indices();
  return stratified_kfold_split(ids, manifest.label_set, k, seed);
}

// --- metrics ----------------------------------------------------------------

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> labels)
    : labels_(std::move(labels)), counts_(labels_.size() * labels_.size(), 0) {}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t count) {
  if (truth >= size() || predicted >= size())
    throw InvalidArgument("confusion matrix index out of range");
  counts_[truth * size() + predicted] += count;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < size(); ++i) t += at(i, i);
  return t;
}

std::uint64_t ConfusionMatrix::row_total(std::size_t truth) const {
  std::uint64_t t = 0;
  for (std::size_t j = 0; j < size(); ++j) t += at(truth, j);
  return t;
}

std::optional<double> ConfusionMatrix::overall_accuracy() const {
  const auto n = total();
  if (n == 0) return std::nullopt;
  return static_cast<double>(trace()) / static_cast<double>(n);
}

std::optional<double> ConfusionMatrix::class_accuracy(std::size_t truth) const {
  const auto n = row_total(truth);
  if (n == 0) return std::nullopt;
  return static_cast<double>(at(truth, truth)) / static_cast<double>(n);
}

FallMetrics fall_metrics(const ConfusionMatrix& confusion, const std::string& fall_label) {
  const auto& labels = confusion.labels();
  const auto it = std::find(labels.begin(), labels.end(), fall_label);
  if (it == labels.end()) throw InvalidArgument("label \"" + fall_label + "\" not in confusion matrix");
  const auto fall = static_cast<std::size_t>(it - labels.begin());

  std::uint64_t tp = 0, fn = 0, fp = 0, tn = 0;
  for (std::size_t i = 0; i < confusion.size(); ++i)
    for (std::size_t j = 0; j < confusion.size(); ++j) {
      const auto n = confusion.at(i, j);
      if (i == fall)
        (j == fall ? tp : fn) += n;
      else
        (j == fall ? fp : tn) += n;
    }
  FallMetrics m;
  if (tp + fn > 0) m.sensitivity = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (tn + fp > 0) m.specificity = static_cast<double>(tn) / static_cast<double>(tn + fp);
  return m;
}

EvalReport build_report(const std::vector<std::string>& labels,
                        std::vector<PredictionRecord> records, std::size_t fold_count,
                        const std::string& fall_label) {
  EvalReport r;
  r.labels = labels;
  r.confusion = ConfusionMatrix(labels);
  r.fall_label = fall_label;
  auto index_of = [&](const std::string& name) {
    const auto it = std::find(labels.begin(), labels.end(), name);
    if (it == labels.end()) throw InvalidArgument("unknown label \"" + name + "\" in predictions");
    return static_cast<std::size_t>(it - labels.begin());
  };

  std::vector<std::uint64_t> fold_hits(fold_count, 0), fold_totals(fold_count, 0);
  std::size_t max_index = 0;
  for (const auto& rec : records) {
    r.confusion.add(index_of(rec.truth), index_of(rec.predicted));
    if (rec.fold >= fold_count) throw InvalidArgument("prediction record with fold out of range");
    ++fold_totals[rec.fold];
    if (rec.truth == rec.predicted) ++fold_hits[rec.fold];
    max_index = std::max(max_index, rec.index + 1);
  }
  r.fold_assignments.assign(max_index, 0);
  for (const auto& rec : records) r.fold_assignments[rec.index] = rec.fold;
  for (std::size_t f = 0; f < fold_count; ++f)
    r.fold_accuracies.push_back(fold_totals[f] ? std::optional<double>(
                                                     static_cast<double>(fold_hits[f]) /
                                                     static_cast<double>(fold_totals[f]))
                                               : std::nullopt);

  r.overall_accuracy = r.confusion.overall_accuracy();
  for (std::size_t c = 0; c < labels.size(); ++c)
    r.per_class_accuracy.push_back(r.confusion.class_accuracy(c));
  if (std::find(labels.begin(), labels.end(), fall_label) != labels.end())
    r.fall = fall_metrics(r.confusion, fall_label);
  r.predictions = std::move(records);
  return r;
}

// --- cross-validation -------------------------------------------------------

namespace {

template <typename T>
std::vector<T> gather(std::span<const T> source, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (const auto i : idx) out.push_back(source[i]);
  return out;
}

}  // namespace

std::vector<PredictionRecord> cross_validate(std::span<const std::vector<double>> features,
                                             std::span<const std::string> labels,
                                             std::span<const Fold> folds,
                                             const FoldLearner& learner, bool parallel) {
  if (features.size() != labels.size()) throw InvalidArgument("feature and label counts differ");

  auto run_fold = [&](std::size_t f) {
    try {
      const auto& fold = folds[f];
      const auto train_x = gather(features, fold.train);
      const auto train_y = gather(labels, fold.train);
      const auto test_x = gather(features, fold.test);
      auto preds = learner(train_x, train_y, test_x);
      if (preds.size() != fold.test.size())
        throw Error("learner returned " + std::to_string(preds.size()) + " predictions for " +
                    std::to_string(fold.test.size()) + " test sequences");
      std::vector<PredictionRecord> out;
      for (std::size_t t = 0; t < fold.test.size(); ++t) {
        PredictionRecord rec;
        rec.index = fold.test[t];
        rec.truth = labels[rec.index];
        rec.predicted = std::move(preds[t].label);
        rec.scores = std::move(preds[t].scores);
        rec.fold = f;
        out.push_back(std::move(rec));
      }
      return out;
    } catch (const std::exception& e) {
      throw Error("fold " + std::to_string(f) + ": " + e.what());
    }
  };

  std::vector<std::vector<PredictionRecord>> per_fold(folds.size());
  if (parallel && folds.size() > 1) {
    std::vector<std::future<std::vector<PredictionRecord>>> pending;
    for (std::size_t f = 0; f < folds.size(); ++f)
      pending.push_back(std::async(std::launch::async, run_fold, f));
    for (std::size_t f = 0; f < folds.size(); ++f) per_fold[f] = pending[f].get();
  } else {
    for (std::size_t f = 0; f < folds.size(); ++f) per_fold[f] = run_fold(f);
  }

  std::vector<PredictionRecord> records;
  for (auto& chunk : per_fold)
    for (auto& rec : chunk) records.push_back(std::move(rec));
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.index < b.index; });
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].index == records[i - 1].index)
      throw InvalidArgument("sequence " + std::to_string(records[i].index) +
                            " appears in more than one test fold");
  return records;
}

FoldLearner svm_learner(const SvmConfig& cfg, std::vector<std::string> class_order) {
  return [cfg, order = std::move(class_order)](std::span<const std::vector<double>> train_x,
                                                std::span<const std::string> train_y,
                                                std::span<const std::vector<double>> test_x) {
    const auto model = train(train_x, train_y, cfg, order);
    std::vector<FoldPrediction> out;
    out.reserve(test_x.size());
    for (const auto& x : test_x) {
      auto p = predict(model, x);
      out.push_back({std::move(p.label), std::move(p.scores)});
    }
    return out;
  };
}

FeatureVector featurize_sequence(const ThermalSequence& raw, const BackgroundModel& background,
                                 const FeatureExtractor& extractor) {
  const auto subtracted = subtract_background(raw, background);
  return extractor.extract(resample_equal_interval(subtracted, extractor.config().sequence_len));
}

std::vector<std::vector<double>> featurize_dataset(const Dataset& dataset,
                                                   const PipelineSettings& settings) {
  const FeatureExtractor extractor(settings.feature_config());
  std::vector<std::vector<double>> out;
  out.reserve(dataset.sequences.size());
  for (std::size_t i = 0; i < dataset.sequences.size(); ++i) {
    const auto& seq = dataset.sequences[i];
    try {
      const auto bg = estimate_background(dataset.background_for(seq.session_id()));
      out.push_back(featurize_sequence(seq, bg, extractor).combined());
    } catch (const std::exception& e) {
      throw Error(dataset.manifest.entries[i].path + ": " + e.what());
    }
  }
  return out;
}

EvalReport run_pipeline_cv(const Dataset& dataset, std::span<const Fold> folds,
                           const PipelineSettings& settings) {
  settings.svm.validate();
  const auto features = featurize_dataset(dataset, settings);
  std::vector<std::string> labels;
  labels.reserve(dataset.sequences.size());
  for (const auto& s : dataset.sequences) labels.push_back(s.label());

  auto records = cross_validate(features, labels, folds,
                                svm_learner(settings.svm, dataset.manifest.label_set));
  for (auto& rec : records) {
    const auto& entry = dataset.manifest.entries[rec.index];
    rec.path = entry.path;
    rec.subject = entry.subject;
    rec.session = entry.session;
  }
  return build_report(dataset.manifest.label_set, std::move(records), folds.size(),
                      settings.fall_label);
}

// --- output -----------------------------------------------------------------

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", *v * 100.0);
  return buf;
}

}  // namespace

json report_to_json(const EvalReport& report) {
  json counts = json::array();
  for (std::size_t i = 0; i < report.confusion.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < report.confusion.size(); ++j) row.push_back(report.confusion.at(i, j));
    counts.push_back(std::move(row));
  }
  json per_class = json::object();
  for (std::size_t c = 0; c < report.labels.size(); ++c)
    per_class[report.labels[c]] = optional_json(report.per_class_accuracy[c]);
  json fold_acc = json::array();
  for (const auto& a : report.fold_accuracies) fold_acc.push_back(optional_json(a));
  json predictions = json::array();
  for (const auto& p : report.predictions)
    predictions.push_back({{"index", p.index},
                           {"path", p.path},
                           {"subject", p.subject},
                           {"session", p.session},
                           {"truth", p.truth},
                           {"predicted", p.predicted},
                           {"fold", p.fold},
                           {"scores", p.scores}});
  return json{
      {"labels", report.labels},
      {"confusion", counts},
      {"sequence_count", report.confusion.total()},
      {"overall_accuracy", optional_json(report.overall_accuracy)},
      {"per_class_accuracy", per_class},
      {"fall_label", report.fall_label},
      {"fall_sensitivity", optional_json(report.fall.sensitivity)},
      {"fall_specificity", optional_json(report.fall.specificity)},
      {"fold_count", report.fold_accuracies.size()},
      {"fold_accuracies", fold_acc},
      {"fold_assignments", report.fold_assignments},
      {"predictions", predictions},
  };
}

std::string render_report_text(const EvalReport& report) {
  std::ostringstream out;
  std::size_t width = 6;
  for (const auto& l : report.labels) width = std::max(width, l.size());
  const std::size_t cell = 7;
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  out << "Confusion matrix (rows = true, columns = predicted)\n";
  out << std::string(width, ' ');
  for (std::size_t j = 0; j < report.labels.size(); ++j) out << pad("[" + std::to_string(j) + "]", cell);
  out << '\n';
  for (std::size_t i = 0; i < report.labels.size(); ++i) {
    std::string name = report.labels[i];
    name.resize(width, ' ');
    out << name;
    for (std::size_t j = 0; j < report.labels.size(); ++j)
      out << pad(std::to_string(report.confusion.at(i, j)), cell);
    out << "   [" << i << "] " << percent(report.per_class_accuracy[i]) << '\n';
  }
  out << "\nsequences:         " << report.confusion.total() << " in "
      << report.fold_accuracies.size() << " folds\n";
  out << "overall accuracy:  " << percent(report.overall_accuracy) << '\n';
  out << "fall sensitivity:  " << percent(report.fall.sensitivity) << '\n';
  out << "fall specificity:  " << percent(report.fall.specificity) << '\n';
  return out.str();
}

}  // namespace thermadl
