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

// Corpus statistics: frames per video, predicted room types, actions,
// trajectory lengths and bookkeeping counts.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "tourvln/annotation.hpp"
#include "tourvln/format.hpp"
#include "tourvln/instruction.hpp"
#include "tourvln/samples.hpp"
#include "tourvln/trajectory.hpp"

namespace tourvln {

/// Per-video ingest bookkeeping.
struct VideoIngest {
  std::string video_id;
  std::size_t raw_frames = 0;
  std::size_t sampled_frames = 0;
  std::size_t kept_frames = 0;
  std::vector<Rejection> rejected;
};

/// Everything the statistics are computed from. Pointers are non-owning.
struct DatasetArtifacts {
  const RoomTypeRegistry* registry = nullptr;
  std::span<const VideoIngest> ingest;
  std::span<const FrameRecord> kept_frames;
  std::span<const Trajectory> trajectories;
  std::span<const PathInstructionPair> pairs;
  std::span<const JudgmentSample> judgment_samples;
  std::size_t ranking_samples = 0;
  std::size_t mlm_samples = 0;
};

struct StatsReport {
  std::map<std::size_t, std::size_t> frames_per_video;  // kept frames -> number of videos
  std::map<std::string, std::size_t> room_types;        // argmax label over kept frames
  std::map<std::string, std::size_t> actions;           // forward / left / right
  std::map<int, std::size_t> trajectory_lengths;        // K -> count
  std::map<std::string, std::size_t> rejections;        // reason -> frames
  std::size_t videos = 0;
  std::size_t frames_raw = 0;
  std::size_t frames_sampled = 0;
  std::size_t frames_kept = 0;
  std::size_t frames_rejected = 0;
  std::size_t trajectories = 0;
  std::size_t trajectories_reduced = 0;
  double k_reduced_fraction = 0.0;
  std::size_t pairs = 0;
  std::size_t judgment_positive = 0;
  std::size_t judgment_negative = 0;
  std::size_t ranking_samples = 0;
  std::size_t mlm_samples = 0;

  bool operator==(const StatsReport&) const = default;
};

inline StatsReport compute_stats(const DatasetArtifacts& a) {
  const RoomTypeRegistry fallback = RoomTypeRegistry::defaults();
  const RoomTypeRegistry& registry = a.registry ? *a.registry : fallback;
  StatsReport s;
  for (const auto& label : registry.labels()) s.room_types[label] = 0;
  for (auto act : {Action::forward, Action::left, Action::right}) s.actions[std::string(to_string(act))] = 0;
  for (auto r : {RejectReason::person, RejectReason::outdoor, RejectReason::no_regions}) {
    s.rejections[std::string(to_string(r))] = 0;
  }

  s.videos = a.ingest.size();
  for (const auto& v : a.ingest) {
    s.frames_per_video[v.kept_frames] += 1;
    s.frames_raw += v.raw_frames;
    s.frames_sampled += v.sampled_frames;
    s.frames_kept += v.kept_frames;
    s.frames_rejected += v.rejected.size();
    for (const auto& r : v.rejected) s.rejections[std::string(to_string(r.reason))] += 1;
  }
  for (const auto& f : a.kept_frames) s.room_types[registry.label(argmax_room(f.room_probs))] += 1;

  s.trajectories = a.trajectories.size();
  for (const auto& t : a.trajectories) {
    s.trajectory_lengths[t.length()] += 1;
    s.trajectories_reduced += t.reduced();
  }
  s.k_reduced_fraction =
      s.trajectories ? round_sig(static_cast<double>(s.trajectories_reduced) / static_cast<double>(s.trajectories)) : 0.0;

  s.pairs = a.pairs.size();
  for (const auto& p : a.pairs) {
    for (auto act : p.actions) s.actions[std::string(to_string(act))] += 1;
  }
  for (const auto& j : a.judgment_samples) (j.label == 1 ? s.judgment_positive : s.judgment_negative) += 1;
  s.ranking_samples = a.ranking_samples;
  s.mlm_samples = a.mlm_samples;
  return s;
}

namespace detail {

template <typename Map>
Json count_map(const Map& m) {
  Json j = Json::object();
  for (const auto& [k, v] : m) {
    if constexpr (std::is_same_v<typename Map::key_type, std::string>) {
      j[k] = v;
    } else {
      j[std::to_string(k)] = v;
    }
  }
  return j;
}

template <typename Map>
Json fraction_map(const Map& m) {
  std::size_t total = 0;
  for (const auto& [_, v] : m) total += v;
  Json j = Json::object();
  for (const auto& [k, v] : m) {
    double f = total ? round_sig(static_cast<double>(v) / static_cast<double>(total)) : 0.0;
    if constexpr (std::is_same_v<typename Map::key_type, std::string>) {
      j[k] = f;
    } else {
      j[std::to_string(k)] = f;
    }
  }
  return j;
}

}  // namespace detail

inline Json stats_to_json(const StatsReport& s) {
  Json j;
  j["counts"] = {{"videos", s.videos},
                 {"frames_raw", s.frames_raw},
                 {"frames_sampled", s.frames_sampled},
                 {"frames_kept", s.frames_kept},
                 {"frames_rejected", s.frames_rejected},
                 {"trajectories", s.trajectories},
                 {"trajectories_reduced", s.trajectories_reduced},
                 {"pairs", s.pairs},
                 {"judgment_positive", s.judgment_positive},
                 {"judgment_negative", s.judgment_negative},
                 {"ranking_samples", s.ranking_samples},
                 {"mlm_samples", s.mlm_samples}};
  j["k_reduced_fraction"] = s.k_reduced_fraction;
  j["frames_per_video"] = detail::count_map(s.frames_per_video);
  j["rejections"] = detail::count_map(s.rejections);
  j["room_types"] = detail::count_map(s.room_types);
  j["room_type_distribution"] = detail::fraction_map(s.room_types);
  j["actions"] = detail::count_map(s.actions);
  j["action_distribution"] = detail::fraction_map(s.actions);
  j["trajectory_lengths"] = detail::count_map(s.trajectory_lengths);
  j["trajectory_length_distribution"] = detail::fraction_map(s.trajectory_lengths);
  return j;
}

inline StatsReport stats_from_json(const Json& j) {
  StatsReport s;
  const auto& c = j.at("counts");
  s.videos = c.at("videos").get<std::size_t>();
  s.frames_raw = c.at("frames_raw").get<std::size_t>();
  s.frames_sampled = c.at("frames_sampled").get<std::size_t>();
  s.frames_kept = c.at("frames_kept").get<std::size_t>();
  s.frames_rejected = c.at("frames_rejected").get<std::size_t>();
  s.trajectories = c.at("trajectories").get<std::size_t>();
  s.trajectories_reduced = c.at("trajectories_reduced").get<std::size_t>();
  s.pairs = c.at("pairs").get<std::size_t>();
  s.judgment_positive = c.at("judgment_positive").get<std::size_t>();
  s.judgment_negative = c.at("judgment_negative").get<std::size_t>();
  s.ranking_samples = c.at("ranking_samples").get<std::size_t>();
  s.mlm_samples = c.at("mlm_samples").get<std::size_t>();
  s.k_reduced_fraction = j.at("k_reduced_fraction").get<double>();
  for (const auto& [k, v] : j.at("frames_per_video").items()) s.frames_per_video[std::stoul(k)] = v.get<std::size_t>();
  for (const auto& [k, v] : j.at("rejections").items()) s.rejections[k] = v.get<std::size_t>();
  for (const auto& [k, v] : j.at("room_types").items()) s.room_types[k] = v.get<std::size_t>();
  for (const auto& [k, v] : j.at("actions").items()) s.actions[k] = v.get<std::size_t>();
  for (const auto& [k, v] : j.at("trajectory_lengths").items()) s.trajectory_lengths[std::stoi(k)] = v.get<std::size_t>();
  return s;
}

inline std::string stats_table(const StatsReport& s) {
  auto row = [](std::string name, const std::string& value) {
    name.resize(std::max<std::size_t>(name.size() + 1, 28), ' ');
    return name + value + "\n";
  };
  auto frac = [](std::size_t v, std::size_t total) {
    return total ? format_sig(static_cast<double>(v) / static_cast<double>(total)) : std::string("0");
  };
  std::string out = "== counts ==\n";
  out += row("videos", std::to_string(s.videos));
  out += row("frames_raw", std::to_string(s.frames_raw));
  out += row("frames_sampled", std::to_string(s.frames_sampled));
  out += row("frames_kept", std::to_string(s.frames_kept));
  out += row("frames_rejected", std::to_string(s.frames_rejected));
  for (const auto& [k, v] : s.rejections) out += row("  rejected:" + k, std::to_string(v));
  out += row("trajectories", std::to_string(s.trajectories));
  out += row("trajectories_reduced", std::to_string(s.trajectories_reduced));
  out += row("k_reduced_fraction", format_sig(s.k_reduced_fraction));
  out += row("pairs", std::to_string(s.pairs));
  out += row("judgment_positive", std::to_string(s.judgment_positive));
  out += row("judgment_negative", std::to_string(s.judgment_negative));
  out += row("ranking_samples", std::to_string(s.ranking_samples));
  out += row("mlm_samples", std::to_string(s.mlm_samples));

  out += "== frames per video ==\n";
  for (const auto& [k, v] : s.frames_per_video) out += row(std::to_string(k), std::to_string(v));
  out += "== room types (kept frames) ==\n";
  for (const auto& [k, v] : s.room_types) out += row(k, std::to_string(v) + "  " + frac(v, s.frames_kept));
  std::size_t n_actions = 0;
  for (const auto& [_, v] : s.actions) n_actions += v;
  out += "== actions ==\n";
  for (const auto& [k, v] : s.actions) out += row(k, std::to_string(v) + "  " + frac(v, n_actions));
  out += "== trajectory length K ==\n";
  for (const auto& [k, v] : s.trajectory_lengths) out += row(std::to_string(k), std::to_string(v) + "  " + frac(v, s.trajectories));
  return out;
}

enum class ReportFormat { json, text };

/// Writes stats.json and/or stats.txt into `dir`; returns the paths written.
inline std::vector<std::filesystem::path> emit_report(const StatsReport& s, const std::filesystem::path& dir,
                                                      std::span<const ReportFormat> formats) {
  std::vector<std::filesystem::path> written;
  for (auto f : formats) {
    if (f == ReportFormat::json) {
      auto p = dir / "stats.json";
      write_file(p, stats_to_json(s).dump(2) + "\n");
      written.push_back(p);
    } else {
      auto p = dir / "stats.txt";
      write_file(p, stats_table(s));
      written.push_back(p);
    }
  }
  return written;
}

}  // namespace tourvln
