#pragma once

#include <cstddef>
#include <vector>

#include "thermadl/thermal.hpp"

namespace thermadl {

inline constexpr std::size_t kDefaultTargetLength = 20;

// Per-pixel mean of an empty-scene clip.
struct BackgroundModel {
  PixelGrid mean_pixels{};
  std::size_t source_frame_count = 0;
};

BackgroundModel estimate_background(const ThermalSequence& empty_scene);

// Subtracts the background mean from every pixel of every frame. Input must
// be raw; the result is marked subtracted and keeps all metadata.
ThermalSequence subtract_background(const ThermalSequence& seq, const BackgroundModel& bg);

// Frame indices picked by equal-interval sampling:
// round_half_up(j * (length - 1) / (target_len - 1)), or {0} for target_len 1.
std::vector<std::size_t> resample_indices(std::size_t length, std::size_t target_len);

// Selects (never interpolates) target_len frames. Upsampling repeats frames.
ThermalSequence resample_equal_interval(const ThermalSequence& seq, std::size_t target_len);

}  // namespace thermadl
