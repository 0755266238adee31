#include "thermadl/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "thermadl/error.hpp"
#include "thermadl/rng.hpp"

namespace thermadl {

using json = nlohmann::json;

void SvmConfig::validate() const {
  if (!(regularization_c > 0.0) || !std::isfinite(regularization_c))
    throw InvalidArgument("svm.regularization_c must be a positive finite number");
  if (max_epochs == 0) throw InvalidArgument("svm.max_epochs must be positive");
  if (!(tolerance > 0.0)) throw InvalidArgument("svm.tolerance must be positive");
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void check_dimension(const SvmModel& model, std::size_t dim) {
  if (dim != model.dimension())
    throw ModelError("feature dimension mismatch: model expects " +
                     std::to_string(model.dimension()) + ", got " + std::to_string(dim));
}

// Maps each label to its position in `classes`; -1 when absent.
std::vector<int> class_targets(std::span<const std::string> labels,
                               const std::vector<std::string>& classes) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    const auto it = std::find(classes.begin(), classes.end(), l);
    out.push_back(it == classes.end() ? -1 : static_cast<int>(it - classes.begin()));
  }
  return out;
}

}  // namespace

std::vector<double> standardize(const SvmModel& model, std::span<const double> feature) {
  check_dimension(model, feature.size());
  std::vector<double> z(feature.size());
  for (std::size_t d = 0; d < z.size(); ++d)
    z[d] = (feature[d] - model.scaler_mean[d]) / model.scaler_std[d];
  return z;
}

std::vector<double> decision_scores_standardized(const SvmModel& model,
                                                 std::span<const double> z) {
  check_dimension(model, z.size());
  std::vector<double> scores(model.class_count());
  for (std::size_t c = 0; c < scores.size(); ++c)
    scores[c] = dot(model.weights[c], z) + model.biases[c];
  return scores;
}

SvmModel train(std::span<const std::vector<double>> features, std::span<const std::string> labels,
               const SvmConfig& cfg, std::span<const std::string> class_order) {
  cfg.validate();
  if (features.empty()) throw InvalidArgument("cannot train on an empty dataset");
  if (features.size() != labels.size())
    throw InvalidArgument("feature and label counts differ");
  const std::size_t dim = features.front().size();
  if (dim == 0) throw InvalidArgument("feature vectors are empty");
  for (std::size_t i = 0; i < features.size(); ++i)
    if (features[i].size() != dim)
      throw InvalidArgument("dimension mismatch at example " + std::to_string(i) + ": " +
                            std::to_string(features[i].size()) + " vs " + std::to_string(dim));

  SvmModel model;
  model.train_config = cfg;
  if (class_order.empty()) {
    for (const auto& l : labels)
      if (std::find(model.classes.begin(), model.classes.end(), l) == model.classes.end())
        model.classes.push_back(l);
  } else {
    for (const auto& c : class_order)
      if (std::find(labels.begin(), labels.end(), c) != labels.end()) model.classes.push_back(c);
  }
  const auto targets = class_targets(labels, model.classes);
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (targets[i] < 0) throw InvalidArgument("label \"" + labels[i] + "\" not in class order");
  if (model.classes.size() < 2)
    throw InvalidArgument("training needs at least two distinct classes");

  const std::size_t m = features.size();
  const std::size_t n_classes = model.classes.size();

  // Population mean/std per dimension.
  model.scaler_mean.assign(dim, 0.0);
  model.scaler_std.assign(dim, 0.0);
  for (const auto& f : features)
    for (std::size_t d = 0; d < dim; ++d) model.scaler_mean[d] += f[d];
  for (auto& v : model.scaler_mean) v /= static_cast<double>(m);
  for (const auto& f : features)
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = f[d] - model.scaler_mean[d];
      model.scaler_std[d] += diff * diff;
    }
  for (auto& v : model.scaler_std) {
    v = std::sqrt(v / static_cast<double>(m));
    if (v < kStdFloor) v = 1.0;
  }

  // Standardized inputs with a trailing constant 1 so the bias is learned as
  // an ordinary (regularized) weight.
  const std::size_t aug = dim + 1;
  std::vector<double> z(m * aug);
  std::vector<double> z_sqnorm(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = z.data() + i * aug;
    for (std::size_t d = 0; d < dim; ++d)
      row[d] = (features[i][d] - model.scaler_mean[d]) / model.scaler_std[d];
    row[dim] = 1.0;
    z_sqnorm[i] = dot({row, aug}, {row, aug});
  }

  const double lambda = 1.0 / (cfg.regularization_c * static_cast<double>(m));
  const double radius_sq = 1.0 / lambda;

  // w_c = scale[c] * v[c]; shrinking only touches the scalar.
  std::vector<std::vector<double>> v(n_classes, std::vector<double>(aug, 0.0));
  std::vector<double> scale(n_classes, 1.0);
  std::vector<double> v_sqnorm(n_classes, 0.0);

  auto objective = [&] {
    double reg = 0.0;
    double loss = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) {
      reg += scale[c] * scale[c] * v_sqnorm[c];
      for (std::size_t i = 0; i < m; ++i) {
        const double y = targets[i] == static_cast<int>(c) ? 1.0 : -1.0;
        const double score = scale[c] * dot(v[c], {z.data() + i * aug, aug});
        loss += std::max(0.0, 1.0 - y * score);
      }
    }
    return 0.5 * lambda * reg + loss / static_cast<double>(m);
  };

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t t = 0;
  double previous = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (const std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double shrink = 1.0 - 1.0 / static_cast<double>(t);
      const double* zi = z.data() + i * aug;
      for (std::size_t c = 0; c < n_classes; ++c) {
        const double y = targets[i] == static_cast<int>(c) ? 1.0 : -1.0;
        const double vz = dot(v[c], {zi, aug});
        const bool violated = y * scale[c] * vz < 1.0;
        if (shrink == 0.0) {
          std::fill(v[c].begin(), v[c].end(), 0.0);
          scale[c] = 1.0;
          v_sqnorm[c] = 0.0;
        } else {
          scale[c] *= shrink;
        }
        if (violated) {
          const double alpha = eta * y / scale[c];
          const double vz_now = shrink == 0.0 ? 0.0 : vz;
          for (std::size_t d = 0; d < aug; ++d) v[c][d] += alpha * zi[d];
          v_sqnorm[c] += 2.0 * alpha * vz_now + alpha * alpha * z_sqnorm[i];
        }
        const double norm_sq = scale[c] * scale[c] * v_sqnorm[c];
        if (norm_sq > radius_sq) scale[c] *= std::sqrt(radius_sq / norm_sq);
        if (scale[c] < 1e-150) {
          for (auto& x : v[c]) x *= scale[c];
          v_sqnorm[c] *= scale[c] * scale[c];
          scale[c] = 1.0;
        }
      }
    }
    for (std::size_t c = 0; c < n_classes; ++c) v_sqnorm[c] = dot(v[c], v[c]);
    model.epochs_run = epoch + 1;
    const double current = objective();
    if (std::isfinite(previous) &&
        std::abs(previous - current) <= cfg.tolerance * std::max(previous, 1e-12))
      break;
    previous = current;
  }

  model.weights.assign(n_classes, std::vector<double>(dim));
  model.biases.assign(n_classes, 0.0);
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t d = 0; d < dim; ++d) model.weights[c][d] = scale[c] * v[c][d];
    model.biases[c] = scale[c] * v[c][dim];
  }
  return model;
}

double svm_objective(const SvmModel& model, std::span<const std::vector<double>> features,
                     std::span<const std::string> labels, double lambda) {
  if (features.size() != labels.size() || features.empty())
    throw InvalidArgument("objective needs matching, non-empty features and labels");
  const auto targets = class_targets(labels, model.classes);
  double reg = 0.0;
  for (std::size_t c = 0; c < model.class_count(); ++c)
    reg += dot(model.weights[c], model.weights[c]) + model.biases[c] * model.biases[c];
  double loss = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto scores = decision_scores_standardized(model, standardize(model, features[i]));
    for (std::size_t c = 0; c < scores.size(); ++c) {
      const double y = targets[i] == static_cast<int>(c) ? 1.0 : -1.0;
      loss += std::max(0.0, 1.0 - y * scores[c]);
    }
  }
  return 0.5 * lambda * reg + loss / static_cast<double>(features.size());
}

Prediction predict(const SvmModel& model, std::span<const double> feature) {
  Prediction p;
  p.scores = decision_scores_standardized(model, standardize(model, feature));
  // max_element returns the first maximum, i.e. the lowest class index.
  p.class_index =
      static_cast<std::size_t>(std::max_element(p.scores.begin(), p.scores.end()) - p.scores.begin());
  p.label = model.classes[p.class_index];
  return p;
}

std::vector<Prediction> predict_batch(const SvmModel& model,
                                      std::span<const std::vector<double>> features) {
  std::vector<Prediction> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(predict(model, f));
  return out;
}

// --- persistence -----------------------------------------------------------

json model_to_json(const SvmModel& model) {
  return json{
      {"format", kModelFormatName},
      {"version", kModelFormatVersion},
      {"classes", model.classes},
      {"weights", model.weights},
      {"biases", model.biases},
      {"scaler_mean", model.scaler_mean},
      {"scaler_std", model.scaler_std},
      {"epochs_run", model.epochs_run},
      {"config",
       {{"regularization_c", model.train_config.regularization_c},
        {"max_epochs", model.train_config.max_epochs},
        {"tolerance", model.train_config.tolerance},
        {"seed", model.train_config.seed}}},
      {"pipeline", model.pipeline},
  };
}

SvmModel model_from_json(const json& doc) {
  if (!doc.is_object() || doc.value("format", std::string{}) != kModelFormatName)
    throw ModelError("not a thermadl model file (missing or wrong \"format\" marker)");
  if (!doc.contains("version") || !doc["version"].is_number_integer())
    throw ModelError("model file has no integer \"version\"");
  if (const int version = doc["version"].get<int>(); version != kModelFormatVersion)
    throw ModelError("unsupported model version " + std::to_string(version) + " (expected " +
                     std::to_string(kModelFormatVersion) + ")");
  SvmModel m;
  try {
    m.classes = doc.at("classes").get<std::vector<std::string>>();
    m.weights = doc.at("weights").get<std::vector<std::vector<double>>>();
    m.biases = doc.at("biases").get<std::vector<double>>();
    m.scaler_mean = doc.at("scaler_mean").get<std::vector<double>>();
    m.scaler_std = doc.at("scaler_std").get<std::vector<double>>();
    m.epochs_run = doc.value("epochs_run", std::size_t{0});
    const auto& cfg = doc.at("config");
    m.train_config.regularization_c = cfg.at("regularization_c").get<double>();
    m.train_config.max_epochs = cfg.at("max_epochs").get<std::size_t>();
    m.train_config.tolerance = cfg.at("tolerance").get<double>();
    m.train_config.seed = cfg.at("seed").get<std::uint64_t>();
    if (doc.contains("pipeline")) m.pipeline = doc["pipeline"];
  } catch (const json::exception& e) {
    throw ModelError(std::string("corrupt model file: ") + e.what());
  }
  const std::size_t dim = m.scaler_mean.size();
  bool ok = m.classes.size() >= 2 && m.weights.size() == m.classes.size() &&
            m.biases.size() == m.classes.size() && m.scaler_std.size() == dim && dim > 0;
  for (const auto& w : m.weights) ok = ok && w.size() == dim;
  for (double s : m.scaler_std) ok = ok && s > 0.0 && std::isfinite(s);
  for (const auto& w : m.weights)
    for (double x : w) ok = ok && std::isfinite(x);
  for (double b : m.biases) ok = ok && std::isfinite(b);
  if (!ok) throw ModelError("corrupt model file: inconsistent shapes or non-finite values");
  return m;
}

void save_model(const SvmModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write model file " + path.string());
  out << model_to_json(model).dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

SvmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ModelError(path.string() + ": corrupt model file: " + e.what());
  }
  try {
    return model_from_json(doc);
  } catch (const ModelError& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
}

}  // namespace thermadl
