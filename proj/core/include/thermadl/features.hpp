#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "thermadl/thermal.hpp"

namespace thermadl {

// Orthonormal DCT-II matrix, row-major: entry (u, t) is
// c(u) * cos(pi * (2t + 1) * u / 2n), c(0) = sqrt(1/n), c(u > 0) = sqrt(2/n).
class DctBasis {
 public:
  explicit DctBasis(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t u, std::size_t t) const { return matrix_[u * n_ + t]; }
  std::span<const double> row(std::size_t u) const { return {matrix_.data() + u * n_, n_}; }
  std::span<const double> matrix() const noexcept { return matrix_; }

  // First `count` coefficients of X * signal (signal.size() must equal n).
  std::vector<double> transform(std::span<const double> signal, std::size_t count) const;
  std::vector<double> transform(std::span<const double> signal) const {
    return transform(signal, n_);
  }

  // X * block * X^T for a square row-major n x n block.
  std::vector<double> transform_2d(std::span<const double> block) const;

 private:
  std::size_t n_;
  std::vector<double> matrix_;
};

DctBasis dct_basis(std::size_t n);

inline constexpr std::size_t kDefaultTemporalK = 5;
inline constexpr std::size_t kDefaultSpatialBlock = 3;

struct FeatureConfig {
  std::size_t temporal_k = kDefaultTemporalK;
  std::size_t spatial_block = kDefaultSpatialBlock;
  std::size_t sequence_len = 20;

  // Throws InvalidArgument when temporal_k > sequence_len, spatial_block > 8,
  // or any field is zero.
  void validate() const;
  std::size_t temporal_size() const { return kPixelCount * temporal_k; }
  std::size_t spatial_size() const { return spatial_block * spatial_block * sequence_len; }
  std::size_t dimension() const { return temporal_size() + spatial_size(); }

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

// Temporal part is pixel-major (64 pixels x k coefficients, low to high);
// spatial part is frame-major (F frames x b*b block, row-major).
struct FeatureVector {
  std::vector<double> temporal;
  std::vector<double> spatial;

  std::vector<double> combined() const;
  std::size_t size() const { return temporal.size() + spatial.size(); }
};

// |first k DCT-II coefficients| of one pixel's time series (DC included).
std::vector<double> temporal_feature(std::span<const double> pixel_series, std::size_t k);

// |top-left b x b block| of the 8x8 2-D DCT of a frame, row-major.
std::vector<double> spatial_feature(const ThermalFrame& frame, std::size_t block);

// Holds the two bases for a config so repeated extraction reuses them.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(FeatureConfig cfg);

  const FeatureConfig& config() const noexcept { return cfg_; }

  // Input must be background-subtracted with exactly cfg.sequence_len frames.
  FeatureVector extract(const ThermalSequence& seq) const;

 private:
  FeatureConfig cfg_;
  DctBasis temporal_basis_;
  DctBasis spatial_basis_;
};

FeatureVector extract_features(const ThermalSequence& seq, const FeatureConfig& cfg);

}  // namespace thermadl
