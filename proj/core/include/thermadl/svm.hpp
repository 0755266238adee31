#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace thermadl {

struct SvmConfig {
  double regularization_c = 1.0;
  std::size_t max_epochs = 200;
  double tolerance = 1e-4;
  std::uint64_t seed = 42;

  void validate() const;
  friend bool operator==(const SvmConfig&, const SvmConfig&) = default;
};

// Standardization dims with a std below this are passed through centered.
inline constexpr double kStdFloor = 1e-8;

// One-vs-rest linear SVM. Scores are computed on z-scored inputs using the
// training-set statistics stored alongside the weights, so callers always
// pass raw feature vectors.
struct SvmModel {
  std::vector<std::string> classes;
  std::vector<std::vector<double>> weights;  // classes.size() x dimension
  std::vector<double> biases;
  std::vector<double> scaler_mean;
  std::vector<double> scaler_std;
  SvmConfig train_config;
  std::size_t epochs_run = 0;
  // Free-form settings of the pipeline that produced the features; persisted
  // verbatim under "pipeline" in the model file.
  nlohmann::json pipeline = nlohmann::json::object();

  std::size_t dimension() const { return scaler_mean.size(); }
  std::size_t class_count() const { return classes.size(); }
};

struct Prediction {
  std::string label;
  std::size_t class_index = 0;
  std::vector<double> scores;
};

// Trains one binary L2-regularized hinge-loss classifier per class (class vs
// rest) by stochastic sub-gradient descent on
//   lambda/2 ||w||^2 + (1/m) sum_i max(0, 1 - y_i (w . z_i + b)),
// with lambda = 1 / (C m), step 1 / (lambda t) and a seeded reshuffle every
// epoch. `class_order` fixes the class ordering in the model; classes not
// present in `labels` are dropped. When empty, first-appearance order is used.
SvmModel train(std::span<const std::vector<double>> features, std::span<const std::string> labels,
               const SvmConfig& cfg, std::span<const std::string> class_order = {});

// The averaged-hinge objective above evaluated for a model on a dataset,
// summed over the one-vs-rest problems. `lambda` is the regularization weight.
double svm_objective(const SvmModel& model, std::span<const std::vector<double>> features,
                     std::span<const std::string> labels, double lambda);

// Feature vector after the model's z-scoring.
std::vector<double> standardize(const SvmModel& model, std::span<const double> feature);

// Per-class w . z + b for an already-standardized input.
std::vector<double> decision_scores_standardized(const SvmModel& model, std::span<const double> z);

// Argmax over classes; ties go to the lowest class index.
Prediction predict(const SvmModel& model, std::span<const double> feature);
std::vector<Prediction> predict_batch(const SvmModel& model,
                                      std::span<const std::vector<double>> features);

inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kModelFormatName = "thermadl-svm";

nlohmann::json model_to_json(const SvmModel& model);
SvmModel model_from_json(const nlohmann::json& doc);
void save_model(const SvmModel& model, const std::filesystem::path& path);
SvmModel load_model(const std::filesystem::path& path);

}  // namespace thermadl
