#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermadl/features.hpp"
#include "thermadl/preprocess.hpp"
#include "thermadl/svm.hpp"
#include "thermadl/thermal.hpp"

namespace thermadl {

// --- splitting --------------------------------------------------------------

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// One fold per subject, in order of first appearance; the test side is all
// of that subject's sequences.
std::vector<Fold> loso_split(std::span<const std::string> subject_ids);
std::vector<Fold> loso_split(const DatasetManifest& manifest);

// Class-stratified k folds. Each class is shuffled with the seed and dealt
// round-robin, continuing where the previous class stopped, so per-class
// and total fold sizes each differ by at most one.
std::vector<Fold> stratified_kfold_split(std::span<const std::size_t> class_ids,
                                         std::span<const std::string> class_names, std::size_t k,
                                         std::uint64_t seed);
std::vector<Fold> stratified_kfold_split(const DatasetManifest& manifest, std::size_t k,
                                         std::uint64_t seed);

// --- metrics ----------------------------------------------------------------

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<std::string> labels);

  void add(std::size_t truth, std::size_t predicted, std::uint64_t count = 1);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_.at(truth * labels_.size() + predicted);
  }
  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_total(std::size_t truth) const;

  // Absent when the matrix is empty / the class never occurs.
  std::optional<double> overall_accuracy() const;
  std::optional<double> class_accuracy(std::size_t truth) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::vector<std::string> labels_;
  std::vector<std::uint64_t> counts_;
};

struct FallMetrics {
  std::optional<double> sensitivity;
  std::optional<double> specificity;
};

// Collapses the matrix to fall vs non-fall. A metric whose denominator is
// zero is absent rather than 0/0.
FallMetrics fall_metrics(const ConfusionMatrix& confusion, const std::string& fall_label);

// --- cross-validation -------------------------------------------------------

struct PredictionRecord {
  std::size_t index = 0;  // position in the dataset
  std::string path;
  std::string subject;
  std::string session;
  std::string truth;
  std::string predicted;
  std::size_t fold = 0;
  std::vector<double> scores;  // in model class order; may be empty
};

struct EvalReport {
  std::vector<std::string> labels;
  ConfusionMatrix confusion{{}};
  std::optional<double> overall_accuracy;
  std::vector<std::optional<double>> per_class_accuracy;
  std::string fall_label;
  FallMetrics fall;
  std::vector<std::size_t> fold_assignments;  // per sequence
  std::vector<std::optional<double>> fold_accuracies;
  std::vector<PredictionRecord> predictions;  // in dataset order
};

// Pools per-sequence records into one confusion matrix and derives every
// metric from it. Metrics for an absent fall label are left empty.
EvalReport build_report(const std::vector<std::string>& labels,
                        std::vector<PredictionRecord> records, std::size_t fold_count,
                        const std::string& fall_label);

struct FoldPrediction {
  std::string label;
  std::vector<double> scores;
};

// Trains on the given training rows and predicts every test row. Called
// once per fold; must not look at anything outside its arguments.
using FoldLearner = std::function<std::vector<FoldPrediction>(
    std::span<const std::vector<double>> train_features, std::span<const std::string> train_labels,
    std::span<const std::vector<double>> test_features)>;

// Runs the learner on each fold and returns one record per tested sequence,
// sorted by dataset index. Folds may run concurrently.
std::vector<PredictionRecord> cross_validate(std::span<const std::vector<double>> features,
                                             std::span<const std::string> labels,
                                             std::span<const Fold> folds,
                                             const FoldLearner& learner, bool parallel = true);

// Linear SVM learner with the given class ordering.
FoldLearner svm_learner(const SvmConfig& cfg, std::vector<std::string> class_order);

struct PipelineSettings {
  std::size_t target_len = kDefaultTargetLength;
  std::size_t temporal_k = kDefaultTemporalK;
  std::size_t spatial_block = kDefaultSpatialBlock;
  SvmConfig svm;
  std::string fall_label = "fall";

  FeatureConfig feature_config() const { return {temporal_k, spatial_block, target_len}; }
};

// Raw sequence -> subtracted -> resampled -> features.
FeatureVector featurize_sequence(const ThermalSequence& raw, const BackgroundModel& background,
                                 const FeatureExtractor& extractor);

// Feature matrix of a dataset using each sequence's session background.
std::vector<std::vector<double>> featurize_dataset(const Dataset& dataset,
                                                   const PipelineSettings& settings);

// Full protocol: featurize, then per fold train on the training split only
// (standardization included) and predict the test split; pooled report.
EvalReport run_pipeline_cv(const Dataset& dataset, std::span<const Fold> folds,
                           const PipelineSettings& settings);

// JSON report with full-precision numbers and the per-sequence log.
nlohmann::json report_to_json(const EvalReport& report);

// Fixed-width confusion matrix plus headline metrics, percentages to 2 dp.
std::string render_report_text(const EvalReport& report);

}  // namespace thermadl
