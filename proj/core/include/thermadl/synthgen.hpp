#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "thermadl/thermal.hpp"

namespace thermadl {

// Empty-scene model of one sensor. Offsets are a fixed per-pixel pattern.
struct SceneParams {
  double ambient_mean = 21.0;
  PixelGrid ambient_pixel_offsets{};
  double noise_std = 0.25;
  double frame_rate_hz = 10.0;
  double quantize_step = 0.25;  // 0 disables quantization

  void validate() const;
};

inline constexpr std::uint64_t kDefaultSceneSeed = 2018;

// Default scene with offsets drawn uniformly from [-0.5, 0.5] C.
SceneParams default_scene(std::uint64_t offset_seed = kDefaultSceneSeed);

// Blob state at a point in normalized script time [0, 1]. Coordinates are in
// pixel units with pixel (row r, col c) centred at (x = c, y = r).
struct BlobKeyframe {
  double time = 0.0;
  double x = 3.5;
  double y = 3.5;
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  double amplitude = 6.0;  // C above ambient
};

// Piecewise-linear blob trajectory. Keyframe times must start at 0, end at 1
// and increase.
struct ActivityScript {
  std::string label;
  double duration_s = 1.0;
  std::vector<BlobKeyframe> keyframes;

  void validate() const;
  BlobKeyframe at(double time) const;
  // x -> 7 - x on every keyframe.
  ActivityScript mirrored(std::string new_label) const;
};

// Per-subject body parameters; LOSO folds differ by these.
struct SubjectProfile {
  double speed = 1.0;  // duration multiplier
  double amplitude = 6.0;
  double sigma = 0.85;
  double home_x = 3.5;
  double home_y = 3.5;
};

SubjectProfile draw_subject(std::uint64_t seed);

// Value of an anisotropic Gaussian blob at a pixel centre.
double blob_value(const BlobKeyframe& blob, std::size_t row, std::size_t col);

struct RenderStats {
  std::size_t clamped_pixels = 0;
};

// Frame j at t = j / rate: ambient + offsets + blob + N(0, noise_std), then
// quantized, then clamped to [0, 80] C. round(duration * rate) frames.
ThermalSequence render_sequence(const SceneParams& scene, const ActivityScript& script,
                                std::uint64_t seed, RenderStats* stats = nullptr);

// The seven Infra-ADL2018 activities for a subject, in kInfraAdlLabels order,
// with per-instance jitter on speed, position and amplitude from `seed`.
// The two walks are exact mirrors of each other.
std::vector<ActivityScript> builtin_scripts(std::uint64_t seed,
                                            const SubjectProfile& subject = {});

// Amplitude-0 script for empty-scene clips.
ActivityScript empty_scene_script(double duration_s);

struct CorpusOptions {
  std::size_t subjects = 8;
  std::size_t reps = 3;  // sessions per subject
  std::uint64_t seed = 42;
  SceneParams scene = default_scene();
  double background_duration_s = 5.0;
  double session_ambient_jitter = 0.4;  // +- C drift of ambient per session
};

// In-memory corpus: one background clip per session, activities in
// subject / session / label order. Manifest paths are relative.
struct SyntheticCorpus {
  Dataset dataset;
  std::size_t clamped_pixels = 0;
};

SyntheticCorpus generate_corpus(const CorpusOptions& options);

// Writes frame CSVs and manifest.json under `out_dir` (created if needed).
void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& out_dir);

}  // namespace thermadl
