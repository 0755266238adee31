#include "thermadl/thermal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "thermadl/error.hpp"

namespace thermadl {

namespace fs = std::filesystem;
using json = nlohmann::json;

ManifestError::ManifestError(const std::string& path, std::vector<std::string> problems)
    : Error([&] {
        std::string msg = path + ": " + std::to_string(problems.size()) + " problem(s): ";
        for (std::size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
        return msg;
      }()),
      problems_(std::move(problems)) {}

std::vector<std::string> infra_adl_label_set() {
  return {kInfraAdlLabels.begin(), kInfraAdlLabels.end()};
}

std::string_view to_string(Stage stage) {
  return stage == Stage::kRaw ? "raw" : "subtracted";
}

ThermalSequence::ThermalSequence(std::vector<ThermalFrame> frames, Stage stage, std::string label,
                                 std::string subject_id, std::string session_id)
    : frames_(std::move(frames)),
      stage_(stage),
      label_(std::move(label)),
      subject_id_(std::move(subject_id)),
      session_id_(std::move(session_id)) {
  if (frames_.empty()) throw InvalidArgument("thermal sequence needs at least one frame");
  for (std::size_t f = 0; f < frames_.size(); ++f) {
    const auto& frame = frames_[f];
    if (frame.timestamp_ms < 0)
      throw InvalidArgument("frame " + std::to_string(f) + ": negative timestamp");
    for (double v : frame.pixels) {
      if (!std::isfinite(v))
        throw InvalidArgument("frame " + std::to_string(f) + ": non-finite pixel value");
      if (stage_ == Stage::kRaw && (v < kMinRawCelsius || v > kMaxRawCelsius))
        throw InvalidArgument("frame " + std::to_string(f) + ": raw temperature " +
                              format_double(v) + " outside [0, 80] C");
    }
  }
}

ThermalSequence ThermalSequence::with_metadata(std::string label, std::string subject_id,
                                               std::string session_id) const {
  ThermalSequence copy = *this;
  copy.label_ = std::move(label);
  copy.subject_id_ = std::move(subject_id);
  copy.session_id_ = std::move(session_id);
  return copy;
}

std::vector<double> ThermalSequence::pixel_series(std::size_t pixel) const {
  std::vector<double> series;
  series.reserve(frames_.size());
  for (const auto& f : frames_) series.push_back(f.pixels.at(pixel));
  return series;
}

// --- frame CSV -------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_real(std::string_view field, std::size_t line_no, std::size_t column) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end)
    throw ParseError("column " + std::to_string(column) + ": not a number: '" +
                         std::string(field) + "'",
                     line_no);
  if (!std::isfinite(value))
    throw ParseError("column " + std::to_string(column) + ": non-finite value", line_no);
  return value;
}

std::int64_t parse_timestamp(std::string_view field, std::size_t line_no) {
  std::int64_t value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end)
    throw ParseError("timestamp_ms must be an integer: '" + std::string(field) + "'", line_no);
  if (value < 0) throw ParseError("timestamp_ms must be non-negative", line_no);
  return value;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

ThermalSequence parse_sequence(std::string_view text) {
  std::vector<ThermalFrame> frames;
  std::size_t line_no = 0;
  bool seen_data = false;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto newline = text.find('\n', start);
    if (newline == std::string_view::npos) newline = text.size();
    const auto line = trim(text.substr(start, newline - start));
    start = newline + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    const auto fields = split_fields(line);
    if (!seen_data && (fields.front() == "timestamp_ms" || fields.front() == "p00")) {
      seen_data = true;
      continue;
    }
    seen_data = true;

    ThermalFrame frame;
    std::size_t offset = 0;
    if (fields.size() == kPixelCount + 1) {
      frame.timestamp_ms = parse_timestamp(fields[0], line_no);
      offset = 1;
    } else if (fields.size() != kPixelCount) {
      throw ParseError("expected 64 or 65 fields, found " + std::to_string(fields.size()),
                       line_no);
    }
    for (std::size_t i = 0; i < kPixelCount; ++i) {
      const double v = parse_real(fields[i + offset], line_no, i + offset + 1);
      if (v < kMinRawCelsius || v > kMaxRawCelsius)
        throw ParseError("raw temperature " + std::string(fields[i + offset]) +
                             " outside [0, 80] C",
                         line_no);
      frame.pixels[i] = v;
    }
    frames.push_back(frame);
  }
  if (frames.empty()) throw ParseError("empty file: no frames", 0);
  return ThermalSequence(std::move(frames), Stage::kRaw);
}

ThermalSequence parse_sequence_file(const fs::path& path) {
  const auto text = read_file(path);
  try {
    return parse_sequence(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string serialize_sequence(const ThermalSequence& seq) {
  std::string out = "timestamp_ms";
  for (std::size_t r = 0; r < kGridSide; ++r)
    for (std::size_t c = 0; c < kGridSide; ++c)
      out += ",p" + std::to_string(r) + std::to_string(c);
  out += '\n';
  for (const auto& frame : seq.frames()) {
    out += std::to_string(frame.timestamp_ms);
    for (double v : frame.pixels) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void write_sequence_file(const fs::path& path, const ThermalSequence& seq) {
  if (seq.stage() != Stage::kRaw)
    throw InvalidArgument("only raw sequences can be written as frame CSV");
  write_file(path, serialize_sequence(seq));
}

// --- manifest --------------------------------------------------------------

fs::path DatasetManifest::resolve(const std::string& entry_path) const {
  const fs::path p(entry_path);
  return p.is_absolute() ? p : base_dir / p;
}

std::optional<std::size_t> DatasetManifest::label_index(std::string_view label) const {
  const auto it = std::find(label_set.begin(), label_set.end(), label);
  if (it == label_set.end()) return std::nullopt;
  return static_cast<std::size_t>(it - label_set.begin());
}

std::vector<std::size_t> DatasetManifest::label_indices() const {
  std::vector<std::size_t> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(label_index(e.label).value());
  return out;
}

std::vector<std::string> DatasetManifest::subjects() const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (std::find(out.begin(), out.end(), e.subject) == out.end()) out.push_back(e.subject);
  return out;
}

namespace {

struct Loaded {
  DatasetManifest manifest;
  std::vector<ThermalSequence> sequences;
  std::vector<ThermalSequence> backgrounds;
};

std::string string_field(const json& obj, const char* key, bool required, std::size_t index,
                         std::vector<std::string>& problems) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    if (required)
      problems.push_back("entry " + std::to_string(index) + ": missing \"" + key + "\"");
    return {};
  }
  if (!it->is_string()) {
    problems.push_back("entry " + std::to_string(index) + ": \"" + key + "\" must be a string");
    return {};
  }
  return it->get<std::string>();
}

// Structural parse; collects problems instead of throwing.
DatasetManifest parse_structure(const json& doc, std::vector<std::string>& problems) {
  DatasetManifest m;
  if (!doc.is_object()) {
    problems.push_back("manifest must be a JSON object");
    return m;
  }
  static const std::set<std::string> kTopKeys = {"label_set", "sensor_id", "entries"};
  for (const auto& [key, _] : doc.items())
    if (!kTopKeys.contains(key)) problems.push_back("unknown key \"" + key + "\"");

  if (const auto it = doc.find("label_set"); it != doc.end() && it->is_array()) {
    for (const auto& l : *it) {
      if (!l.is_string()) {
        problems.push_back("label_set entries must be strings");
        continue;
      }
      auto name = l.get<std::string>();
      if (std::find(m.label_set.begin(), m.label_set.end(), name) != m.label_set.end())
        problems.push_back("duplicate label \"" + name + "\" in label_set");
      m.label_set.push_back(std::move(name));
    }
  } else {
    problems.push_back("missing or non-array \"label_set\"");
  }
  if (const auto it = doc.find("sensor_id"); it != doc.end()) {
    if (it->is_string())
      m.sensor_id = it->get<std::string>();
    else
      problems.push_back("\"sensor_id\" must be a string");
  }

  const auto it = doc.find("entries");
  if (it == doc.end() || !it->is_array()) {
    problems.push_back("missing or non-array \"entries\"");
    return m;
  }
  std::size_t index = 0;
  for (const auto& e : *it) {
    if (!e.is_object()) {
      problems.push_back("entry " + std::to_string(index++) + ": must be an object");
      continue;
    }
    const std::string role = string_field(e, "role", false, index, problems);
    if (role == "background") {
      BackgroundEntry bg;
      bg.path = string_field(e, "path", true, index, problems);
      bg.session = string_field(e, "session", false, index, problems);
      m.backgrounds.push_back(std::move(bg));
    } else if (role.empty() || role == "activity") {
      ManifestEntry entry;
      entry.path = string_field(e, "path", true, index, problems);
      entry.label = string_field(e, "label", true, index, problems);
      entry.subject = string_field(e, "subject", true, index, problems);
      entry.session = string_field(e, "session", false, index, problems);
      m.entries.push_back(std::move(entry));
    } else {
      problems.push_back("entry " + std::to_string(index) + ": unknown role \"" + role + "\"");
    }
    ++index;
  }
  return m;
}

Loaded load_and_validate(std::string_view json_text, const fs::path& base_dir,
                         const std::string& origin, bool keep_sequences) {
  std::vector<std::string> problems;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ManifestError(origin, {std::string("invalid JSON: ") + e.what()});
  }
  Loaded out;
  out.manifest = parse_structure(doc, problems);
  auto& m = out.manifest;
  m.base_dir = base_dir;

  if (m.entries.empty()) problems.push_back("empty dataset");

  std::set<std::string> seen_paths;
  auto check_path = [&](const std::string& p) {
    if (p.empty()) return false;
    if (!seen_paths.insert(m.resolve(p).lexically_normal().string()).second) {
      problems.push_back("duplicate path: " + p);
      return false;
    }
    if (!fs::exists(m.resolve(p))) {
      problems.push_back("missing file: " + m.resolve(p).string());
      return false;
    }
    return true;
  };
  auto try_parse = [&](const std::string& p) -> std::optional<ThermalSequence> {
    try {
      return parse_sequence_file(m.resolve(p));
    } catch (const Error& e) {
      problems.push_back(e.what());
      return std::nullopt;
    }
  };

  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    if (!e.label.empty() && !m.label_index(e.label))
      problems.push_back("entry " + std::to_string(i) + ": unknown label \"" + e.label + "\"");
    if (!check_path(e.path)) continue;
    auto seq = try_parse(e.path);
    if (!seq) continue;
    if (seq->size() < 2) {
      problems.push_back(e.path + ": activity sequences need at least 2 frames");
      continue;
    }
    if (keep_sequences) out.sequences.push_back(seq->with_metadata(e.label, e.subject, e.session));
  }

  std::set<std::string> bg_sessions;
  for (const auto& bg : m.backgrounds) {
    if (!bg_sessions.insert(bg.session).second)
      problems.push_back("more than one background for session \"" + bg.session + "\"");
    if (!check_path(bg.path)) continue;
    auto seq = try_parse(bg.path);
    if (seq && keep_sequences) out.backgrounds.push_back(seq->with_metadata({}, {}, bg.session));
  }

  if (!problems.empty()) throw ManifestError(origin, std::move(problems));
  return out;
}

}  // namespace

DatasetManifest parse_manifest(std::string_view json_text, const fs::path& base_dir,
                               const std::string& origin) {
  return load_and_validate(json_text, base_dir, origin, false).manifest;
}

DatasetManifest load_manifest(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ManifestError(path.string(), {e.what()});
  }
  return parse_manifest(text, path.parent_path(), path.string());
}

Dataset load_dataset(const fs::path& manifest_path) {
  std::string text;
  try {
    text = read_file(manifest_path);
  } catch (const IoError& e) {
    throw ManifestError(manifest_path.string(), {e.what()});
  }
  auto loaded = load_and_validate(text, manifest_path.parent_path(), manifest_path.string(), true);
  return Dataset{std::move(loaded.manifest), std::move(loaded.sequences),
                 std::move(loaded.backgrounds)};
}

const ThermalSequence& Dataset::background_for(const std::string& session) const {
  const ThermalSequence* global = nullptr;
  for (std::size_t i = 0; i < manifest.backgrounds.size(); ++i) {
    if (manifest.backgrounds[i].session == session) return backgrounds[i];
    if (manifest.backgrounds[i].session.empty()) global = &backgrounds[i];
  }
  if (global) return *global;
  throw InvalidArgument("no background clip for session \"" + session +
                        "\" and no global background in the manifest");
}

std::string manifest_to_json(const DatasetManifest& manifest) {
  json doc;
  doc["label_set"] = manifest.label_set;
  doc["sensor_id"] = manifest.sensor_id;
  json entries = json::array();
  for (const auto& bg : manifest.backgrounds) {
    json e = {{"path", bg.path}, {"role", "background"}};
    if (!bg.session.empty()) e["session"] = bg.session;
    entries.push_back(std::move(e));
  }
  for (const auto& e : manifest.entries)
    entries.push_back(
        {{"path", e.path}, {"label", e.label}, {"subject", e.subject}, {"session", e.session}});
  doc["entries"] = std::move(entries);
  return doc.dump(2) + "\n";
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  write_file(path, manifest_to_json(manifest));
}

}  // namespace thermadl
