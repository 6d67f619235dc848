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

// Room-node grouping, entropy keyframes, view merging and K-node trajectory
// sampling with transition nodes.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tourvln/annotation.hpp"
#include "tourvln/errors.hpp"
#include "tourvln/format.hpp"
#include "tourvln/rng.hpp"

namespace tourvln {

/// Maximal run of temporally adjacent filtered frames sharing one argmax room type.
/// `begin`/`end` are positions in the filtered frame sequence the group was built from.
struct NodeGroup {
  std::string video_id;
  std::size_t room_type = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::int64_t start_index = 0;  // frame ordinal of first member
  std::int64_t end_index = 0;    // frame ordinal of last member

  std::size_t size() const noexcept { return end - begin; }
};

struct MergedView {
  FrameId keyframe;
  std::vector<std::int64_t> merged_frames;  // frame ordinals, ascending
  std::vector<DetectedObject> objects;      // one entry per label at its max score, sorted by label
  std::size_t room_type = 0;
};

enum class NodeKind { room, transition };

inline std::string_view to_string(NodeKind k) { return k == NodeKind::room ? "room" : "transition"; }

struct TrajectoryNode {
  NodeKind kind = NodeKind::room;
  MergedView view;
  std::optional<std::size_t> group_ref;  // set for room nodes
  double entropy = 0.0;                  // room_entropy of the keyframe
  double timestamp_s = 0.0;              // keyframe timestamp
  std::optional<double> yaw_deg;
  std::optional<Action> action_to_next;
};

struct Trajectory {
  std::string trajectory_id;
  std::string video_id;
  std::vector<TrajectoryNode> nodes;
  int room_node_count = 0;
  int k_drawn = 0;  // requested length before gap-driven reduction
  std::uint64_t seed = 0;

  int length() const noexcept { return static_cast<int>(nodes.size()); }
  bool reduced() const noexcept { return length() < k_drawn; }
};

enum class ShapeOrder { k_then_r, r_then_k };

struct TrajectoryShape {
  int k = 4;
  int r = 2;
};

struct TrajectoryConfig {
  int k_min = 4, k_max = 7;
  int r_min = 2, r_max = 7;
  ShapeOrder order = ShapeOrder::k_then_r;
  std::size_t merge_window = 4;  // M

  void validate() const {
    if (k_min < 4 || k_max > 7 || k_min > k_max) throw ConfigError("k_range", "must lie within [4, 7]");
    if (r_min < 2 || r_max > 7 || r_min > r_max) throw ConfigError("r_range", "must lie within [2, 7]");
    if (r_min > k_max) throw ConfigError("r_range", "minimum exceeds maximum K");
    if (merge_window < 1) throw ConfigError("merge_window", "must be >= 1");
  }
};

/// Run-length grouping of the argmax room type over a filtered, time-ordered sequence.
inline std::vector<NodeGroup> group_frames(std::span<const FrameRecord> frames) {
  std::vector<NodeGroup> groups;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::size_t type = argmax_room(frames[i].room_probs);
    if (!groups.empty() && groups.back().room_type == type && groups.back().end == i) {
      groups.back().end = i + 1;
      groups.back().end_index = frames[i].frame_index;
      continue;
    }
    groups.push_back({frames[i].video_id, type, i, i + 1, frames[i].frame_index, frames[i].frame_index});
  }
  return groups;
}

/// Position in [begin, end) of the lowest-entropy frame; ties go to the earliest.
inline std::size_t min_entropy_position(std::span<const FrameRecord> frames, std::size_t begin,
                                        std::size_t end) {
  if (begin >= end || end > frames.size()) throw DomainError("min_entropy_position: empty range");
  std::size_t best = begin;
  double best_h = room_entropy(frames[begin].room_probs);
  for (std::size_t i = begin + 1; i < end; ++i) {
    double h = room_entropy(frames[i].room_probs);
    if (h < best_h) {
      best = i;
      best_h = h;
    }
  }
  return best;
}

/// Keyframe of a group, as a position in `frames`.
inline std::size_t select_keyframe(const NodeGroup& group, std::span<const FrameRecord> frames) {
  return min_entropy_position(frames, group.begin, group.end);
}

/// Window of up to M consecutive group members around the keyframe. When the
/// window cannot be centred it leans later; at group edges it slides inward.
inline MergedView merge_views(const NodeGroup& group, std::span<const FrameRecord> frames,
                              std::size_t keyframe_pos, std::size_t m) {
  if (m < 1) throw DomainError("merge_views: M must be >= 1");
  if (keyframe_pos < group.begin || keyframe_pos >= group.end) {
    throw DomainError("merge_views: keyframe outside group");
  }
  const std::size_t n = group.size();
  const std::size_t w = std::min(m, n);
  const std::size_t k = keyframe_pos - group.begin;
  const std::size_t left = (w - 1) / 2;
  std::size_t start = k >= left ? k - left : 0;
  start = std::min(start, n - w);

  MergedView view;
  view.keyframe = frames[keyframe_pos].id();
  view.room_type = group.room_type;
  std::map<std::string, double> best;
  for (std::size_t i = group.begin + start; i < group.begin + start + w; ++i) {
    view.merged_frames.push_back(frames[i].frame_index);
    for (const auto& o : frames[i].objects) {
      auto [it, inserted] = best.emplace(o.label, o.score);
      if (!inserted) it->second = std::max(it->second, o.score);
    }
  }
  for (const auto& [label, score] : best) view.objects.push_back({label, score});
  return view;
}

/// R distinct groups chosen uniformly, returned as ascending group indices.
inline std::vector<std::size_t> sample_room_nodes(std::size_t group_count, Rng& rng, int r) {
  if (r < 2) throw DomainError("sample_room_nodes: R must be >= 2");
  if (group_count < static_cast<std::size_t>(r)) {
    throw Inapplicable("need " + std::to_string(r) + " room groups, video has " +
                       std::to_string(group_count));
  }
  return rng.sample_indices(group_count, static_cast<std::size_t>(r));
}

/// Draws (K, R). R is additionally capped by the number of groups in the video.
inline TrajectoryShape draw_shape(const TrajectoryConfig& cfg, Rng& rng, std::size_t group_count) {
  const int groups = static_cast<int>(std::min<std::size_t>(group_count, 64));
  TrajectoryShape s;
  if (cfg.order == ShapeOrder::k_then_r) {
    s.k = rng.uniform_int(cfg.k_min, cfg.k_max);
    int hi = std::min({s.k, cfg.r_max, groups});
    if (hi < cfg.r_min) throw Inapplicable("video has too few room groups for R >= " + std::to_string(cfg.r_min));
    s.r = rng.uniform_int(cfg.r_min, hi);
  } else {
    int hi = std::min({cfg.r_max, cfg.k_max, groups});
    if (hi < cfg.r_min) throw Inapplicable("video has too few room groups for R >= " + std::to_string(cfg.r_min));
    s.r = rng.uniform_int(cfg.r_min, hi);
    s.k = rng.uniform_int(std::max(cfg.k_min, s.r), cfg.k_max);
  }
  return s;
}

namespace detail {

inline TrajectoryNode make_node(NodeKind kind, const NodeGroup& group, std::span<const FrameRecord> frames,
                                std::size_t keyframe_pos, std::size_t m, std::optional<std::size_t> group_ref) {
  TrajectoryNode node;
  node.kind = kind;
  node.view = merge_views(group, frames, keyframe_pos, m);
  node.group_ref = group_ref;
  const auto& kf = frames[keyframe_pos];
  node.entropy = room_entropy(kf.room_probs);
  node.timestamp_s = kf.timestamp_s;
  node.yaw_deg = kf.yaw_deg;
  node.action_to_next = kf.action_to_next;
  return node;
}

inline std::size_t group_containing(std::span<const NodeGroup> groups, std::size_t pos) {
  auto it = std::upper_bound(groups.begin(), groups.end(), pos,
                             [](std::size_t p, const NodeGroup& g) { return p < g.begin; });
  return static_cast<std::size_t>(std::distance(groups.begin(), it)) - 1;
}

}  // namespace detail

/// Builds one trajectory of the requested shape. Transition nodes go into
/// distinct non-empty gaps between consecutive selected room groups (at most
/// one per gap); when gaps run short the length is reduced to R + #gaps and
/// `k_drawn` keeps the requested K.
inline Trajectory build_trajectory(std::span<const FrameRecord> frames, std::span<const NodeGroup> groups,
                                   TrajectoryShape shape, std::size_t m, Rng& rng) {
  if (groups.size() < 2) throw Inapplicable("fewer than 2 room groups");
  if (shape.k < shape.r) throw DomainError("build_trajectory: K < R");
  auto selected = sample_room_nodes(groups.size(), rng, shape.r);

  std::vector<std::size_t> eligible;  // index j means the gap after selected[j]
  for (std::size_t j = 0; j + 1 < selected.size(); ++j) {
    if (groups[selected[j]].end < groups[selected[j + 1]].begin) eligible.push_back(j);
  }
  const std::size_t wanted = static_cast<std::size_t>(shape.k - shape.r);
  std::vector<bool> has_transition(selected.size(), false);
  for (std::size_t e : rng.sample_indices(eligible.size(), std::min(wanted, eligible.size()))) {
    has_transition[eligible[e]] = true;
  }

  Trajectory t;
  t.video_id = groups.front().video_id;
  t.room_node_count = shape.r;
  t.k_drawn = shape.k;
  for (std::size_t j = 0; j < selected.size(); ++j) {
    const auto& g = groups[selected[j]];
    t.nodes.push_back(detail::make_node(NodeKind::room, g, frames, select_keyframe(g, frames), m, selected[j]));
    if (has_transition[j]) {
      std::size_t lo = g.end;
      std::size_t hi = groups[selected[j + 1]].begin;
      std::size_t kf = min_entropy_position(frames, lo, hi);
      const auto& owner = groups[detail::group_containing(groups, kf)];
      t.nodes.push_back(detail::make_node(NodeKind::transition, owner, frames, kf, m, std::nullopt));
    }
  }
  return t;
}

/// Draws a shape from `cfg`, builds the trajectory from a fresh stream seeded
/// with `seed`, and drops it when reduction pushes K below the configured minimum.
inline Trajectory generate_trajectory(std::span<const FrameRecord> frames, std::span<const NodeGroup> groups,
                                      const TrajectoryConfig& cfg, std::uint64_t seed, std::string trajectory_id) {
  if (groups.size() < 2) throw Inapplicable("fewer than 2 room groups");
  Rng rng(seed);
  auto shape = draw_shape(cfg, rng, groups.size());
  Trajectory t = build_trajectory(frames, groups, shape, cfg.merge_window, rng);
  if (t.length() < cfg.k_min) {
    throw Inapplicable("K reduced from " + std::to_string(shape.k) + " to " + std::to_string(t.length()) +
                       " (below k_min) for lack of transition gaps");
  }
  t.trajectory_id = std::move(trajectory_id);
  t.seed = seed;
  return t;
}

// ---------------------------------------------------------------------------
// Serialization

inline Json trajectory_to_json(const Trajectory& t, const RoomTypeRegistry& registry) {
  Json j;
  j["trajectory_id"] = t.trajectory_id;
  j["video_id"] = t.video_id;
  j["K"] = t.length();
  j["R"] = t.room_node_count;
  j["K_drawn"] = t.k_drawn;
  j["seed"] = t.seed;
  Json nodes = Json::array();
  for (const auto& n : t.nodes) {
    Json jn;
    jn["kind"] = std::string(to_string(n.kind));
    jn["room_type"] = registry.label(n.view.room_type);
    jn["keyframe"] = n.view.keyframe.frame_index;
    jn["merged_frames"] = n.view.merged_frames;
    jn["entropy"] = round_sig(n.entropy);
    Json objs = Json::array();
    for (const auto& o : n.view.objects) objs.push_back({{"label", o.label}, {"score", o.score}});
    jn["objects"] = std::move(objs);
    jn["timestamp_s"] = n.timestamp_s;
    if (n.group_ref) jn["group"] = *n.group_ref;
    if (n.yaw_deg) jn["yaw_deg"] = *n.yaw_deg;
    if (n.action_to_next) jn["action_to_next"] = std::string(to_string(*n.action_to_next));
    nodes.push_back(std::move(jn));
  }
  j["nodes"] = std::move(nodes);
  return j;
}

inline Trajectory trajectory_from_json(const Json& j, const RoomTypeRegistry& registry) {
  try {
    Trajectory t;
    t.trajectory_id = j.at("trajectory_id").get<std::string>();
    t.video_id = j.at("video_id").get<std::string>();
    t.room_node_count = j.at("R").get<int>();
    t.k_drawn = j.value("K_drawn", j.at("K").get<int>());
    t.seed = j.value("seed", std::uint64_t{0});
    for (const auto& jn : j.at("nodes")) {
      TrajectoryNode n;
      n.kind = jn.at("kind").get<std::string>() == "room" ? NodeKind::room : NodeKind::transition;
      n.view.room_type = registry.ordinal(jn.at("room_type").get<std::string>());
      n.view.keyframe = {t.video_id, jn.at("keyframe").get<std::int64_t>()};
      n.view.merged_frames = jn.at("merged_frames").get<std::vector<std::int64_t>>();
      for (const auto& o : jn.at("objects")) {
        n.view.objects.push_back({o.at("label").get<std::string>(), o.at("score").get<double>()});
      }
      n.entropy = jn.at("entropy").get<double>();
      n.timestamp_s = jn.value("timestamp_s", 0.0);
      if (jn.contains("group")) n.group_ref = jn.at("group").get<std::size_t>();
      if (jn.contains("yaw_deg")) n.yaw_deg = jn.at("yaw_deg").get<double>();
      if (jn.contains("action_to_next")) n.action_to_next = parse_action(jn.at("action_to_next").get<std::string>());
      t.nodes.push_back(std::move(n));
    }
    if (static_cast<int>(t.nodes.size()) != j.at("K").get<int>()) throw InputError("node count differs from K");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed trajectory record: ") + e.what());
  }
}

}  // namespace tourvln
