#include "thermadl/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "thermadl/error.hpp"
#include "thermadl/rng.hpp"

namespace thermadl {

namespace fs = std::filesystem;

void SceneParams::validate() const {
  if (!(noise_std > 0.0)) throw InvalidArgument("scene noise_std must be positive");
  if (!(frame_rate_hz > 0.0)) throw InvalidArgument("scene frame_rate_hz must be positive");
  if (quantize_step < 0.0) throw InvalidArgument("scene quantize_step must be non-negative");
  if (ambient_mean < kMinRawCelsius || ambient_mean > kMaxRawCelsius)
    throw InvalidArgument("scene ambient_mean outside [0, 80] C");
}

SceneParams default_scene(std::uint64_t offset_seed) {
  SceneParams scene;
  Rng rng(offset_seed);
  for (auto& o : scene.ambient_pixel_offsets) o = rng.uniform(-0.5, 0.5);
  return scene;
}

void ActivityScript::validate() const {
  if (!(duration_s > 0.0)) throw InvalidArgument("script duration must be positive");
  if (keyframes.empty()) throw InvalidArgument("script has no keyframes");
  if (keyframes.front().time != 0.0 || keyframes.back().time != 1.0)
    throw InvalidArgument("script keyframes must span times 0 to 1");
  for (std::size_t i = 0; i < keyframes.size(); ++i) {
    const auto& k = keyframes[i];
    if (!(k.sigma_x > 0.0) || !(k.sigma_y > 0.0))
      throw InvalidArgument("blob sigma must be positive");
    if (i > 0 && !(k.time > keyframes[i - 1].time))
      throw InvalidArgument("script keyframe times must increase");
  }
}

BlobKeyframe ActivityScript::at(double time) const {
  time = std::clamp(time, 0.0, 1.0);
  const auto upper = std::find_if(keyframes.begin(), keyframes.end(),
                                  [time](const BlobKeyframe& k) { return k.time >= time; });
  if (upper == keyframes.begin()) return keyframes.front();
  if (upper == keyframes.end()) return keyframes.back();
  const auto& a = *(upper - 1);
  const auto& b = *upper;
  const double w = (time - a.time) / (b.time - a.time);
  auto lerp = [w](double p, double q) { return p + (q - p) * w; };
  return {time,
          lerp(a.x, b.x),
          lerp(a.y, b.y),
          lerp(a.sigma_x, b.sigma_x),
          lerp(a.sigma_y, b.sigma_y),
          lerp(a.amplitude, b.amplitude)};
}

ActivityScript ActivityScript::mirrored(std::string new_label) const {
  ActivityScript out = *this;
  out.label = std::move(new_label);
  for (auto& k : out.keyframes) k.x = static_cast<double>(kGridSide - 1) - k.x;
  return out;
}

SubjectProfile draw_subject(std::uint64_t seed) {
  Rng rng(seed);
  SubjectProfile p;
  p.speed = rng.uniform(0.8, 1.2);
  p.amplitude = rng.uniform(5.0, 7.0);
  p.sigma = rng.uniform(0.75, 0.95);
  p.home_x = rng.uniform(3.0, 4.0);
  p.home_y = rng.uniform(3.0, 4.0);
  return p;
}

double blob_value(const BlobKeyframe& blob, std::size_t row, std::size_t col) {
  const double dx = static_cast<double>(col) - blob.x;
  const double dy = static_cast<double>(row) - blob.y;
  return blob.amplitude * std::exp(-0.5 * (dx * dx / (blob.sigma_x * blob.sigma_x) +
                                           dy * dy / (blob.sigma_y * blob.sigma_y)));
}

ThermalSequence render_sequence(const SceneParams& scene, const ActivityScript& script,
                                std::uint64_t seed, RenderStats* stats) {
  scene.validate();
  script.validate();
  const auto count = std::llround(script.duration_s * scene.frame_rate_hz);
  if (count < 1) throw InvalidArgument("script duration yields no frames at this frame rate");
  const auto n = static_cast<std::size_t>(count);

  Rng rng(seed);
  std::size_t clamped = 0;
  std::vector<ThermalFrame> frames(n);
  for (std::size_t j = 0; j < n; ++j) {
    auto& frame = frames[j];
    frame.timestamp_ms = std::llround(static_cast<double>(j) * 1000.0 / scene.frame_rate_hz);
    const double time = n > 1 ? static_cast<double>(j) / static_cast<double>(n - 1) : 0.0;
    const auto blob = script.at(time);
    for (std::size_t r = 0; r < kGridSide; ++r)
      for (std::size_t c = 0; c < kGridSide; ++c) {
        const std::size_t i = r * kGridSide + c;
        double v = scene.ambient_mean + scene.ambient_pixel_offsets[i] + blob_value(blob, r, c) +
                   rng.normal(0.0, scene.noise_std);
        if (scene.quantize_step > 0.0) v = std::round(v / scene.quantize_step) * scene.quantize_step;
        if (v < kMinRawCelsius || v > kMaxRawCelsius) {
          v = std::clamp(v, kMinRawCelsius, kMaxRawCelsius);
          ++clamped;
        }
        frame.pixels[i] = v;
      }
  }
  if (stats) stats->clamped_pixels += clamped;
  return ThermalSequence(std::move(frames), Stage::kRaw, script.label);
}

ActivityScript empty_scene_script(double duration_s) {
  return {"", duration_s, {{0.0, 3.5, 3.5, 1.0, 1.0, 0.0}, {1.0, 3.5, 3.5, 1.0, 1.0, 0.0}}};
}

std::vector<ActivityScript> builtin_scripts(std::uint64_t seed, const SubjectProfile& subject) {
  Rng rng(seed);
  const double speed = subject.speed * rng.uniform(0.9, 1.1);
  const double amp = subject.amplitude * rng.uniform(0.93, 1.07);
  const double sigma = subject.sigma * rng.uniform(0.95, 1.05);
  const double hx = subject.home_x + rng.uniform(-0.3, 0.3);
  const double hy = subject.home_y + rng.uniform(-0.3, 0.3);

  // Seen from the ceiling a standing body is a compact hot spot; sitting
  // spreads it out and lowers the peak slightly.
  const BlobKeyframe stand{0.0, hx, hy, sigma, sigma, amp};
  BlobKeyframe sit = stand;
  sit.sigma_x = sit.sigma_y = sigma * 1.3;
  sit.amplitude = amp * 0.85;
  sit.y = hy + 0.7;

  auto at_time = [](BlobKeyframe k, double t) {
    k.time = t;
    return k;
  };
  auto hold = [&](const BlobKeyframe& k) { return std::vector{at_time(k, 0.0), at_time(k, 1.0)}; };

  std::vector<ActivityScript> scripts;
  scripts.reserve(kInfraAdlLabels.size());

  // fall: quick lateral drop with the body stretching out on the floor.
  {
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double dist = rng.uniform(2.5, 3.5);
    BlobKeyframe down = stand;
    down.x = std::clamp(hx + dist * std::cos(angle), 0.5, 6.5);
    down.y = std::clamp(hy + dist * std::sin(angle), 0.5, 6.5);
    const bool along_x = std::abs(std::cos(angle)) >= std::abs(std::sin(angle));
    down.sigma_x = sigma * (along_x ? 2.2 : 1.3);
    down.sigma_y = sigma * (along_x ? 1.3 : 2.2);
    down.amplitude = amp * 0.5;
    scripts.push_back({"fall", 1.0 * speed,
                       {at_time(stand, 0.0), at_time(stand, 0.2), at_time(down, 0.7),
                        at_time(down, 1.0)}});
  }
  scripts.push_back({"sit_still", 5.0 * speed, hold(sit)});
  scripts.push_back({"stand_still", 5.0 * speed, hold(stand)});
  const std::vector<BlobKeyframe> to_sit{at_time(stand, 0.0), at_time(stand, 0.25),
                                         at_time(sit, 0.75), at_time(sit, 1.0)};
  std::vector<BlobKeyframe> to_stand;
  for (auto it = to_sit.rbegin(); it != to_sit.rend(); ++it) to_stand.push_back(at_time(*it, 1.0 - it->time));
  scripts.push_back({"sit_to_stand", 2.0 * speed, to_stand});
  scripts.push_back({"stand_to_sit", 2.0 * speed, to_sit});

  // Walks start from a standstill inside the view and leave it at full
  // speed, so a walk is not the time reversal of the opposite walk.
  BlobKeyframe start = stand;
  start.x = rng.uniform(0.3, 1.0);
  BlobKeyframe stride = stand;
  BlobKeyframe exit = stand;
  exit.x = rng.uniform(8.5, 9.0);
  stride.x = start.x + 0.35 * (exit.x - start.x);
  ActivityScript walk{"walk_left_right", 3.0 * speed,
                      {at_time(start, 0.0), at_time(start, 0.15), at_time(stride, 0.55),
                       at_time(exit, 1.0)}};
  scripts.push_back(walk);
  scripts.push_back(walk.mirrored("walk_right_left"));
  return scripts;
}

SyntheticCorpus generate_corpus(const CorpusOptions& options) {
  if (options.subjects == 0 || options.reps == 0)
    throw InvalidArgument("corpus needs at least one subject and one repetition");
  options.scene.validate();

  SyntheticCorpus corpus;
  auto& ds = corpus.dataset;
  ds.manifest.label_set = infra_adl_label_set();
  ds.manifest.sensor_id = "synthetic-grideye";
  RenderStats stats;

  for (std::size_t s = 1; s <= options.subjects; ++s) {
    char subject_id[32];
    std::snprintf(subject_id, sizeof subject_id, "subject%02zu", s);
    const auto subject_seed = derive_seed(options.seed, s);
    const auto profile = draw_subject(derive_seed(subject_seed, 0));
    for (std::size_t r = 1; r <= options.reps; ++r) {
      const std::string session_dir = "session" + std::to_string(r);
      const std::string session_id = std::string(subject_id) + "_" + session_dir;
      const std::string prefix = std::string(subject_id) + "/" + session_dir + "/";
      const auto session_seed = derive_seed(subject_seed, r);

      SceneParams scene = options.scene;
      Rng drift(derive_seed(session_seed, 0));
      scene.ambient_mean += drift.uniform(-options.session_ambient_jitter,
                                          options.session_ambient_jitter);

      ds.manifest.backgrounds.push_back({prefix + "background.csv", session_id});
      ds.backgrounds.push_back(render_sequence(scene,
                                               empty_scene_script(options.background_duration_s),
                                               derive_seed(session_seed, 1), &stats)
                                   .with_metadata({}, {}, session_id));

      const auto scripts = builtin_scripts(derive_seed(session_seed, 2), profile);
      for (std::size_t a = 0; a < scripts.size(); ++a) {
        const auto& script = scripts[a];
        ds.manifest.entries.push_back({prefix + script.label + ".csv", script.label, subject_id,
                                       session_id});
        ds.sequences.push_back(
            render_sequence(scene, script, derive_seed(session_seed, 10 + a), &stats)
                .with_metadata(script.label, subject_id, session_id));
      }
    }
  }
  corpus.clamped_pixels = stats.clamped_pixels;
  return corpus;
}

void write_corpus(const SyntheticCorpus& corpus, const fs::path& out_dir) {
  const auto& ds = corpus.dataset;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  auto write_one = [&](const std::string& rel, const ThermalSequence& seq) {
    const auto path = out_dir / rel;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
    write_sequence_file(path, seq);
  };
  for (std::size_t i = 0; i < ds.backgrounds.size(); ++i)
    write_one(ds.manifest.backgrounds[i].path, ds.backgrounds[i]);
  for (std::size_t i = 0; i < ds.sequences.size(); ++i)
    write_one(ds.manifest.entries[i].path, ds.sequences[i]);
  write_manifest(out_dir / "manifest.json", ds.manifest);
}

}  // namespace thermadl
