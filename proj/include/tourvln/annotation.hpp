// Copyright 2026 The tourvln Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Per-frame annotations of house-tour videos: parsing, sparse sampling and
// noise filtering.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tourvln/errors.hpp"
#include "tourvln/format.hpp"

namespace tourvln {

inline constexpr std::size_t kRoomTypeCount = 12;
using RoomProbs = std::array<double, kRoomTypeCount>;

/// The 12 room-type labels. Ordinals index RoomProbs.
class RoomTypeRegistry {
 public:
  explicit RoomTypeRegistry(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.size() != kRoomTypeCount) {
      throw SchemaError(0, "registry must list exactly 12 room types, got " +
                               std::to_string(labels_.size()));
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      const auto& l = labels_[i];
      if (l.empty()) throw SchemaError(i + 1, "empty room-type label");
      for (char c : l) {
        if (c >= 'A' && c <= 'Z') throw SchemaError(i + 1, "room-type label not lowercase: " + l);
      }
      if (!index_.emplace(l, i).second) throw SchemaError(i + 1, "duplicate room-type label: " + l);
    }
  }

  /// Matterport-style room categories used when no registry file is given.
  static RoomTypeRegistry defaults() {
    return RoomTypeRegistry({"bathroom", "bedroom", "closet", "dining room", "entryway",
                             "family room", "garage", "hallway", "kitchen", "laundry room",
                             "living room", "office"});
  }

  /// One label per line; surrounding whitespace and blank lines are ignored.
  static RoomTypeRegistry parse(std::istream& in) {
    std::vector<std::string> labels;
    std::string line;
    while (std::getline(in, line)) {
      auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos) continue;
      auto e = line.find_last_not_of(" \t\r");
      labels.push_back(line.substr(b, e - b + 1));
    }
    return RoomTypeRegistry(std::move(labels));
  }

  static RoomTypeRegistry load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open registry " + path.string());
    return parse(in);
  }

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(std::size_t ordinal) const { return labels_.at(ordinal); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  std::optional<std::size_t> find(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t ordinal(std::string_view label) const {
    if (auto o = find(label)) return *o;
    throw DomainError("unknown room type: " + std::string(label));
  }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, std::size_t> index_;
};

enum class Action { forward, left, right };

inline std::string_view to_string(Action a) {
  switch (a) {
    case Action::forward: return "forward";
    case Action::left: return "left";
    case Action::right: return "right";
  }
  return "forward";
}

inline std::optional<Action> parse_action(std::string_view s) {
  if (s == "forward") return Action::forward;
  if (s == "left") return Action::left;
  if (s == "right") return Action::right;
  return std::nullopt;
}

struct DetectedObject {
  std::string label;
  double score = 0.0;
  bool operator==(const DetectedObject&) const = default;
};

struct FrameId {
  std::string video_id;
  std::int64_t frame_index = 0;
  auto operator<=>(const FrameId&) const = default;
};

struct FrameRecord {
  std::string video_id;
  std::int64_t frame_index = 0;
  double timestamp_s = 0.0;
  RoomProbs room_probs{};
  bool person = false;
  bool outdoor = false;
  std::vector<DetectedObject> objects;
  std::int64_t region_count = 0;
  std::optional<double> yaw_deg;  // [-180, 180)
  std::optional<Action> action_to_next;

  FrameId id() const { return {video_id, frame_index}; }
  bool operator==(const FrameRecord&) const = default;
};

struct VideoAnnotation {
  std::string video_id;
  std::optional<double> source_fps_hint;
  std::vector<FrameRecord> frames;
};

enum class RejectReason { person, outdoor, no_regions };

inline std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::person: return "person";
    case RejectReason::outdoor: return "outdoor";
    case RejectReason::no_regions: return "no_regions";
  }
  return "person";
}

struct Rejection {
  FrameId frame;
  RejectReason reason;
};

struct FilterReport {
  std::vector<FrameId> kept;
  std::vector<Rejection> rejected;
};

struct ParseOptions {
  bool strict = false;  // reject unknown fields instead of warning
};

/// Index of the most probable room type; ties go to the lowest ordinal.
inline std::size_t argmax_room(const RoomProbs& probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

/// Shannon entropy in nats, with 0 ln 0 = 0.
inline double room_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p < 0.0 || std::isnan(p)) throw DomainError("room_entropy: negative probability");
    if (p > 0.0) h -= p * std::log(p);
  }
  return h < 0.0 ? 0.0 : h;
}

inline double room_entropy(const RoomProbs& probs) {
  return room_entropy(std::span<const double>(probs.data(), probs.size()));
}

// ---------------------------------------------------------------------------
// Serialization

inline Json frame_to_json(const FrameRecord& f) {
  Json j;
  j["video_id"] = f.video_id;
  j["frame_index"] = f.frame_index;
  j["timestamp_s"] = f.timestamp_s;
  j["room_probs"] = f.room_probs;
  j["person"] = f.person;
  j["outdoor"] = f.outdoor;
  Json objs = Json::array();
  for (const auto& o : f.objects) objs.push_back({{"label", o.label}, {"score", o.score}});
  j["objects"] = std::move(objs);
  j["region_count"] = f.region_count;
  if (f.yaw_deg) j["yaw_deg"] = *f.yaw_deg;
  if (f.action_to_next) j["action_to_next"] = std::string(to_string(*f.action_to_next));
  return j;
}

namespace detail {

inline const std::set<std::string>& known_frame_fields() {
  static const std::set<std::string> fields{
      "video_id", "frame_index", "timestamp_s", "room_probs", "person", "outdoor",
      "objects",  "region_count", "yaw_deg",    "action_to_next"};
  return fields;
}

inline const Json& require(const Json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(line, std::string("missing field '") + key + "'");
  return *it;
}

inline double require_number(const Json& v, const char* key, std::size_t line) {
  if (!v.is_number()) throw SchemaError(line, std::string("field '") + key + "' must be a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(line, std::string("field '") + key + "' not finite");
  return d;
}

inline std::int64_t require_integer(const Json& v, const char* key, std::size_t line) {
  if (!v.is_number_integer()) {
    throw SchemaError(line, std::string("field '") + key + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

inline bool require_bool(const Json& v, const char* key, std::size_t line) {
  if (!v.is_boolean()) throw SchemaError(line, std::string("field '") + key + "' must be a bool");
  return v.get<bool>();
}

}  // namespace detail

/// Validates one annotation record and renormalizes its room distribution.
inline FrameRecord frame_from_json(const Json& j, std::size_t line, const ParseOptions& opts,
                                   std::vector<std::string>* warnings = nullptr) {
  using namespace detail;
  if (!j.is_object()) throw ParseError(line, "record is not a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (known_frame_fields().count(key)) continue;
    if (opts.strict) throw SchemaError(line, "unknown field '" + key + "'");
    if (warnings) warnings->push_back("line " + std::to_string(line) + ": ignored unknown field '" + key + "'");
  }

  FrameRecord f;
  const auto& vid = require(j, "video_id", line);
  if (!vid.is_string() || vid.get<std::string>().empty()) {
    throw SchemaError(line, "field 'video_id' must be a non-empty string");
  }
  f.video_id = vid.get<std::string>();
  f.frame_index = require_integer(require(j, "frame_index", line), "frame_index", line);
  if (f.frame_index < 0) throw SchemaError(line, "frame_index must be non-negative");
  f.timestamp_s = require_number(require(j, "timestamp_s", line), "timestamp_s", line);
  if (f.timestamp_s < 0.0) throw SchemaError(line, "timestamp_s must be >= 0");

  const auto& probs = require(j, "room_probs", line);
  if (!probs.is_array()) throw SchemaError(line, "field 'room_probs' must be an array");
  if (probs.size() != kRoomTypeCount) {
    throw SchemaError(line, "room_probs must hold 12 values, got " + std::to_string(probs.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < kRoomTypeCount; ++i) {
    double p = require_number(probs[i], "room_probs", line);
    if (p < 0.0) throw SchemaError(line, "room_probs has a negative entry");
    f.room_probs[i] = p;
    sum += p;
  }
  if (sum <= 0.0) throw SchemaError(line, "room_probs are all zero");
  for (auto& p : f.room_probs) p /= sum;

  f.person = require_bool(require(j, "person", line), "person", line);
  f.outdoor = require_bool(require(j, "outdoor", line), "outdoor", line);

  const auto& objs = require(j, "objects", line);
  if (!objs.is_array()) throw SchemaError(line, "field 'objects' must be an array");
  for (const auto& o : objs) {
    if (!o.is_object()) throw SchemaError(line, "object entries must be {label, score}");
    const auto& label = require(o, "label", line);
    if (!label.is_string()) throw SchemaError(line, "object label must be a string");
    double score = require_number(require(o, "score", line), "score", line);
    if (score < 0.0 || score > 1.0) throw SchemaError(line, "object score outside [0, 1]");
    f.objects.push_back({label.get<std::string>(), score});
  }

  f.region_count = require_integer(require(j, "region_count", line), "region_count", line);
  if (f.region_count < 0) throw SchemaError(line, "region_count must be non-negative");

  if (auto it = j.find("yaw_deg"); it != j.end() && !it->is_null()) {
    double yaw = require_number(*it, "yaw_deg", line);
    if (yaw < -180.0 || yaw >= 180.0) throw SchemaError(line, "yaw_deg outside [-180, 180)");
    f.yaw_deg = yaw;
  }
  if (auto it = j.find("action_to_next"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError(line, "action_to_next must be a string");
    auto a = parse_action(it->get<std::string>());
    if (!a) throw SchemaError(line, "action_to_next must be forward, left or right");
    f.action_to_next = a;
  }
  return f;
}

/// Parses a line-delimited annotation stream into per-video frame sequences,
/// ordered by video_id and, within a video, by timestamp.
inline std::vector<VideoAnnotation> parse_annotations(std::istream& in,
                                                      const RoomTypeRegistry& registry,
                                                      const ParseOptions& opts = {},
                                                      std::vector<std::string>* warnings = nullptr) {
  if (registry.size() != kRoomTypeCount) throw DomainError("registry must have 12 types");

  struct Entry {
    FrameRecord frame;
    std::size_t line;
  };
  std::map<std::string, std::vector<Entry>> by_video;
  std::set<FrameId> seen;

  std::string text;
  std::size_t lineno = 0;
  while (std::getline(in, text)) {
    ++lineno;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(lineno, std::string("malformed record: ") + e.what());
    }
    FrameRecord f = frame_from_json(j, lineno, opts, warnings);
    if (!seen.insert(f.id()).second) {
      throw DuplicateFrameError(lineno, "duplicate frame " + f.video_id + "#" +
                                            std::to_string(f.frame_index));
    }
    by_video[f.video_id].push_back({std::move(f), lineno});
  }

  std::vector<VideoAnnotation> videos;
  videos.reserve(by_video.size());
  for (auto& [vid, entries] : by_video) {
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      return a.frame.timestamp_s < b.frame.timestamp_s;
    });
    for (std::size_t i = 1; i < entries.size(); ++i) {
      const auto& prev = entries[i - 1].frame;
      const auto& cur = entries[i].frame;
      if (cur.timestamp_s <= prev.timestamp_s || cur.frame_index <= prev.frame_index) {
        throw SchemaError(entries[i].line, "timestamps must strictly increase with frame_index in video " + vid);
      }
    }
    VideoAnnotation v;
    v.video_id = vid;
    for (auto& e : entries) v.frames.push_back(std::move(e.frame));
    if (v.frames.size() >= 2) {
      double span = v.frames.back().timestamp_s - v.frames.front().timestamp_s;
      if (span > 0.0) v.source_fps_hint = static_cast<double>(v.frames.size() - 1) / span;
    }
    videos.push_back(std::move(v));
  }
  return videos;
}

inline std::vector<VideoAnnotation> load_annotations(const std::filesystem::path& path,
                                                     const RoomTypeRegistry& registry,
                                                     const ParseOptions& opts = {},
                                                     std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open annotations " + path.string());
  return parse_annotations(in, registry, opts, warnings);
}

/// Greedy time-based subsampling: frame i is kept iff it is the first frame whose
/// timestamp reaches (frames kept so far) / rate_hz.
inline std::vector<FrameRecord> sparse_sample(const VideoAnnotation& video, double rate_hz) {
  if (!(rate_hz > 0.0)) throw DomainError("sparse_sample: rate_hz must be positive");
  // absorbs decimal rounding in already-sampled timestamps
  constexpr double kSlack = 1e-9;
  std::vector<FrameRecord> kept;
  for (const auto& f : video.frames) {
    double due = static_cast<double>(kept.size()) / rate_hz;
    if (f.timestamp_s >= due - kSlack) kept.push_back(f);
  }
  return kept;
}

/// Noise reason for a frame, checked in priority order person > outdoor > no_regions.
inline std::optional<RejectReason> rejection_reason(const FrameRecord& f) {
  if (f.person) return RejectReason::person;
  if (f.outdoor) return RejectReason::outdoor;
  if (f.region_count == 0) return RejectReason::no_regions;
  return std::nullopt;
}

inline FilterReport filter_frames(std::span<const FrameRecord> frames) {
  FilterReport report;
  for (const auto& f : frames) {
    if (auto reason = rejection_reason(f)) {
      report.rejected.push_back({f.id(), *reason});
    } else {
      report.kept.push_back(f.id());
    }
  }
  return report;
}

/// Frames that pass the noise filter, in input order.
inline std::vector<FrameRecord> kept_frames(std::span<const FrameRecord> frames) {
  std::vector<FrameRecord> out;
  for (const auto& f : frames) {
    if (!rejection_reason(f)) out.push_back(f);
  }
  return out;
}

}  // namespace tourvln
