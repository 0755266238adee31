#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "thermadl/thermal.hpp"

namespace thermadl::test {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("thermadl_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline ThermalFrame constant_frame(double value, std::int64_t ts = 0) {
  ThermalFrame f;
  f.pixels.fill(value);
  f.timestamp_ms = ts;
  return f;
}

inline ThermalSequence constant_sequence(double value, std::size_t frames,
                                         Stage stage = Stage::kRaw) {
  return ThermalSequence(std::vector<ThermalFrame>(frames, constant_frame(value)), stage);
}

// --- oracles: straight definition sums, no shared code with the library ---

inline double dct_scale(std::size_t u, std::size_t n) {
  return u == 0 ? std::sqrt(1.0 / static_cast<double>(n)) : std::sqrt(2.0 / static_cast<double>(n));
}

inline std::vector<double> naive_dct(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  for (std::size_t u = 0; u < n; ++u) {
    long double acc = 0.0L;
    for (std::size_t t = 0; t < n; ++t)
      acc += static_cast<long double>(x[t]) *
             std::cos(std::numbers::pi_v<long double> * (2.0L * t + 1.0L) * u / (2.0L * n));
    out[u] = static_cast<double>(acc) * dct_scale(u, n);
  }
  return out;
}

// O(n^4) double sum over a square row-major block.
inline std::vector<double> naive_dct2(const std::vector<double>& block, std::size_t n) {
  std::vector<double> out(n * n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) {
      long double acc = 0.0L;
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
          acc += static_cast<long double>(block[r * n + c]) *
                 std::cos(std::numbers::pi_v<long double> * (2.0L * r + 1.0L) * u / (2.0L * n)) *
                 std::cos(std::numbers::pi_v<long double> * (2.0L * c + 1.0L) * v / (2.0L * n));
      out[u * n + v] = static_cast<double>(acc) * dct_scale(u, n) * dct_scale(v, n);
    }
  return out;
}

// Nearest index by quotient/remainder with ties rounding up.
inline std::vector<std::size_t> brute_force_resample_indices(std::size_t length,
                                                             std::size_t target) {
  if (target == 1) return {0};
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < target; ++j) {
    const std::size_t num = j * (length - 1);
    const std::size_t den = target - 1;
    std::size_t q = num / den;
    if (2 * (num % den) >= den) ++q;
    out.push_back(q);
  }
  return out;
}

}  // namespace thermadl::test
