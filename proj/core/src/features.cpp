#include "thermadl/features.hpp"

#include <cmath>
#include <numbers>

#include "thermadl/error.hpp"

namespace thermadl {

DctBasis::DctBasis(std::size_t n) : n_(n), matrix_(n * n) {
  if (n == 0) throw InvalidArgument("DCT size must be positive");
  const double dn = static_cast<double>(n);
  const double c0 = std::sqrt(1.0 / dn);
  const double cu = std::sqrt(2.0 / dn);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t t = 0; t < n; ++t) {
      const double angle =
          std::numbers::pi * static_cast<double>((2 * t + 1) * u) / (2.0 * dn);
      matrix_[u * n + t] = (u == 0 ? c0 : cu * std::cos(angle));
    }
  }
}

std::vector<double> DctBasis::transform(std::span<const double> signal, std::size_t count) const {
  if (signal.size() != n_)
    throw InvalidArgument("DCT input length " + std::to_string(signal.size()) +
                          " does not match basis size " + std::to_string(n_));
  if (count > n_) throw InvalidArgument("requested more DCT coefficients than the basis size");
  std::vector<double> out(count, 0.0);
  for (std::size_t u = 0; u < count; ++u) {
    double acc = 0.0;
    for (std::size_t t = 0; t < n_; ++t) acc += matrix_[u * n_ + t] * signal[t];
    out[u] = acc;
  }
  return out;
}

std::vector<double> DctBasis::transform_2d(std::span<const double> block) const {
  if (block.size() != n_ * n_) throw InvalidArgument("2-D DCT input must be n x n");
  // tmp = X * P, then out = tmp * X^T.
  std::vector<double> tmp(n_ * n_, 0.0);
  for (std::size_t u = 0; u < n_; ++u)
    for (std::size_t t = 0; t < n_; ++t) {
      const double x = matrix_[u * n_ + t];
      for (std::size_t c = 0; c < n_; ++c) tmp[u * n_ + c] += x * block[t * n_ + c];
    }
  std::vector<double> out(n_ * n_, 0.0);
  for (std::size_t r = 0; r < n_; ++r)
    for (std::size_t v = 0; v < n_; ++v) {
      double acc = 0.0;
      for (std::size_t c = 0; c < n_; ++c) acc += tmp[r * n_ + c] * matrix_[v * n_ + c];
      out[r * n_ + v] = acc;
    }
  return out;
}

DctBasis dct_basis(std::size_t n) { return DctBasis(n); }

void FeatureConfig::validate() const {
  if (temporal_k == 0 || spatial_block == 0 || sequence_len == 0)
    throw InvalidArgument("feature config fields must be positive");
  if (temporal_k > sequence_len)
    throw InvalidArgument("temporal_k (" + std::to_string(temporal_k) +
                          ") exceeds sequence_len (" + std::to_string(sequence_len) + ")");
  if (spatial_block > kGridSide) throw InvalidArgument("spatial_block must be at most 8");
}

std::vector<double> FeatureVector::combined() const {
  std::vector<double> out;
  out.reserve(size());
  out.insert(out.end(), temporal.begin(), temporal.end());
  out.insert(out.end(), spatial.begin(), spatial.end());
  return out;
}

namespace {

void abs_in_place(std::vector<double>& v) {
  for (auto& x : v) x = std::abs(x);
}

std::vector<double> spatial_block_of(const DctBasis& basis, const ThermalFrame& frame,
                                     std::size_t block) {
  const auto coeffs = basis.transform_2d(frame.pixels);
  std::vector<double> out;
  out.reserve(block * block);
  for (std::size_t r = 0; r < block; ++r)
    for (std::size_t c = 0; c < block; ++c) out.push_back(std::abs(coeffs[r * kGridSide + c]));
  return out;
}

}  // namespace

std::vector<double> temporal_feature(std::span<const double> pixel_series, std::size_t k) {
  if (k == 0) throw InvalidArgument("k must be positive");
  if (k > pixel_series.size())
    throw InvalidArgument("k (" + std::to_string(k) + ") exceeds series length (" +
                          std::to_string(pixel_series.size()) + ")");
  auto out = DctBasis(pixel_series.size()).transform(pixel_series, k);
  abs_in_place(out);
  return out;
}

std::vector<double> spatial_feature(const ThermalFrame& frame, std::size_t block) {
  if (block == 0 || block > kGridSide) throw InvalidArgument("spatial block must be in [1, 8]");
  return spatial_block_of(DctBasis(kGridSide), frame, block);
}

FeatureExtractor::FeatureExtractor(FeatureConfig cfg)
    : cfg_(cfg),
      temporal_basis_((cfg.validate(), cfg.sequence_len)),
      spatial_basis_(kGridSide) {}

FeatureVector FeatureExtractor::extract(const ThermalSequence& seq) const {
  if (seq.stage() != Stage::kSubtracted)
    throw InvalidArgument("feature extraction needs a background-subtracted sequence");
  if (seq.size() != cfg_.sequence_len)
    throw InvalidArgument("sequence has " + std::to_string(seq.size()) + " frames, expected " +
                          std::to_string(cfg_.sequence_len) + " (resample first)");
  FeatureVector fv;
  fv.temporal.reserve(cfg_.temporal_size());
  for (std::size_t p = 0; p < kPixelCount; ++p) {
    auto coeffs = temporal_basis_.transform(seq.pixel_series(p), cfg_.temporal_k);
    abs_in_place(coeffs);
    fv.temporal.insert(fv.temporal.end(), coeffs.begin(), coeffs.end());
  }
  fv.spatial.reserve(cfg_.spatial_size());
  for (const auto& frame : seq.frames()) {
    const auto block = spatial_block_of(spatial_basis_, frame, cfg_.spatial_block);
    fv.spatial.insert(fv.spatial.end(), block.begin(), block.end());
  }
  return fv;
}

FeatureVector extract_features(const ThermalSequence& seq, const FeatureConfig& cfg) {
  return FeatureExtractor(cfg).extract(seq);
}

}  // namespace thermadl
