#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace thermadl {

inline constexpr std::size_t kGridSide = 8;
inline constexpr std::size_t kPixelCount = kGridSide * kGridSide;

// Grid-EYE measurement range for raw frames.
inline constexpr double kMinRawCelsius = 0.0;
inline constexpr double kMaxRawCelsius = 80.0;

// The seven Infra-ADL2018 activity classes, in canonical order.
inline constexpr std::array<std::string_view, 7> kInfraAdlLabels = {
    "fall",         "sit_still",       "stand_still",    "sit_to_stand",
    "stand_to_sit", "walk_left_right", "walk_right_left"};

std::vector<std::string> infra_adl_label_set();

enum class Stage { kRaw, kSubtracted };

std::string_view to_string(Stage stage);

using PixelGrid = std::array<double, kPixelCount>;

// One 8x8 frame, row-major: pixel (row, col) lives at row * 8 + col.
struct ThermalFrame {
  PixelGrid pixels{};
  std::int64_t timestamp_ms = 0;

  double at(std::size_t row, std::size_t col) const { return pixels[row * kGridSide + col]; }
  double& at(std::size_t row, std::size_t col) { return pixels[row * kGridSide + col]; }

  friend bool operator==(const ThermalFrame&, const ThermalFrame&) = default;
};

// Ordered frames of one recording plus its metadata. Validated on
// construction and immutable afterwards.
class ThermalSequence {
 public:
  ThermalSequence(std::vector<ThermalFrame> frames, Stage stage, std::string label = {},
                  std::string subject_id = {}, std::string session_id = {});

  const std::vector<ThermalFrame>& frames() const noexcept { return frames_; }
  std::size_t size() const noexcept { return frames_.size(); }
  const ThermalFrame& operator[](std::size_t i) const { return frames_[i]; }
  Stage stage() const noexcept { return stage_; }
  const std::string& label() const noexcept { return label_; }
  const std::string& subject_id() const noexcept { return subject_id_; }
  const std::string& session_id() const noexcept { return session_id_; }

  // Copy with the same frames/stage and different metadata.
  ThermalSequence with_metadata(std::string label, std::string subject_id,
                                std::string session_id) const;

  // Time series of one pixel across all frames.
  std::vector<double> pixel_series(std::size_t pixel) const;

  friend bool operator==(const ThermalSequence&, const ThermalSequence&) = default;

 private:
  std::vector<ThermalFrame> frames_;
  Stage stage_;
  std::string label_;
  std::string subject_id_;
  std::string session_id_;
};

// --- frame CSV -------------------------------------------------------------

// Parses frame CSV text: one frame per row, either 64 pixel columns or a
// leading integer timestamp_ms followed by 64 pixels. '#' lines, blank lines
// and a single header row (first field "timestamp_ms" or "p00") are skipped.
// The result is a raw-stage sequence with empty metadata.
ThermalSequence parse_sequence(std::string_view text);
ThermalSequence parse_sequence_file(const std::filesystem::path& path);

// Writes timestamp_ms + 64 pixels per row using shortest round-trip
// formatting, so parse(serialize(s)) reproduces every value bit-exactly.
std::string serialize_sequence(const ThermalSequence& seq);
void write_sequence_file(const std::filesystem::path& path, const ThermalSequence& seq);

// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

// --- manifest --------------------------------------------------------------

struct ManifestEntry {
  std::string path;  // as written in the manifest
  std::string label;
  std::string subject;
  std::string session;
};

// Empty-scene clip. An empty session means it applies to every session
// without a dedicated clip.
struct BackgroundEntry {
  std::string path;
  std::string session;
};

struct DatasetManifest {
  std::vector<std::string> label_set;
  std::string sensor_id;
  std::vector<ManifestEntry> entries;
  std::vector<BackgroundEntry> backgrounds;
  // Directory relative paths are resolved against.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& entry_path) const;
  std::optional<std::size_t> label_index(std::string_view label) const;
  std::vector<std::size_t> label_indices() const;
  std::vector<std::string> subjects() const;
};

// Reads and validates a manifest. Every entry and background file is parsed
// eagerly; all problems (unknown label, missing or unparsable file, duplicate
// path, empty dataset) are reported together in one ManifestError.
DatasetManifest load_manifest(const std::filesystem::path& path);

// Manifest already in memory; base_dir must be set by the caller.
DatasetManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir,
                               const std::string& origin = "<manifest>");

std::string manifest_to_json(const DatasetManifest& manifest);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

// Manifest plus every sequence, loaded in entry order with labels and
// subject/session ids attached from the manifest.
struct Dataset {
  DatasetManifest manifest;
  std::vector<ThermalSequence> sequences;
  std::vector<ThermalSequence> backgrounds;  // parallel to manifest.backgrounds

  // Background for a session: the dedicated clip, else the global one.
  const ThermalSequence& background_for(const std::string& session) const;
};

Dataset load_dataset(const std::filesystem::path& manifest_path);

}  // namespace thermadl
