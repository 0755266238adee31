#include "thermadl/preprocess.hpp"

#include <cmath>

#include "thermadl/error.hpp"

namespace thermadl {

BackgroundModel estimate_background(const ThermalSequence& empty_scene) {
  if (empty_scene.stage() != Stage::kRaw)
    throw InvalidArgument("background must be estimated from a raw (unsubtracted) clip");
  BackgroundModel bg;
  bg.source_frame_count = empty_scene.size();
  for (const auto& frame : empty_scene.frames())
    for (std::size_t i = 0; i < kPixelCount; ++i) bg.mean_pixels[i] += frame.pixels[i];
  const auto n = static_cast<double>(empty_scene.size());
  for (auto& v : bg.mean_pixels) v /= n;
  return bg;
}

ThermalSequence subtract_background(const ThermalSequence& seq, const BackgroundModel& bg) {
  if (seq.stage() != Stage::kRaw)
    throw InvalidArgument("sequence is already background-subtracted");
  if (bg.source_frame_count == 0) throw InvalidArgument("background model has no source frames");
  for (double v : bg.mean_pixels)
    if (!std::isfinite(v) || v < kMinRawCelsius || v > kMaxRawCelsius)
      throw InvalidArgument("background mean outside [0, 80] C");

  std::vector<ThermalFrame> frames = seq.frames();
  for (auto& frame : frames)
    for (std::size_t i = 0; i < kPixelCount; ++i) frame.pixels[i] -= bg.mean_pixels[i];
  return ThermalSequence(std::move(frames), Stage::kSubtracted, seq.label(), seq.subject_id(),
                         seq.session_id());
}

std::vector<std::size_t> resample_indices(std::size_t length, std::size_t target_len) {
  if (length == 0) throw InvalidArgument("cannot resample an empty sequence");
  if (target_len == 0) throw InvalidArgument("target length must be positive");
  if (target_len == 1) return {0};
  // Integer form of floor(j*(L-1)/(T-1) + 1/2): exact, ties round up.
  const std::size_t span = length - 1;
  const std::size_t steps = target_len - 1;
  std::vector<std::size_t> indices(target_len);
  for (std::size_t j = 0; j < target_len; ++j) indices[j] = (2 * j * span + steps) / (2 * steps);
  return indices;
}

ThermalSequence resample_equal_interval(const ThermalSequence& seq, std::size_t target_len) {
  std::vector<ThermalFrame> frames;
  frames.reserve(target_len);
  for (const auto idx : resample_indices(seq.size(), target_len)) frames.push_back(seq[idx]);
  return ThermalSequence(std::move(frames), seq.stage(), seq.label(), seq.subject_id(),
                         seq.session_id());
}

}  // namespace thermadl
