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

// Pretext-task samples: trajectory judgment (positives and three kinds of
// negatives), path ranking candidate sets, masked-language samples, and the
// video-level train/test split.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "tourvln/errors.hpp"
#include "tourvln/format.hpp"
#include "tourvln/instruction.hpp"
#include "tourvln/rng.hpp"
#include "tourvln/trajectory.hpp"

namespace tourvln {

enum class Strategy { positive, shuffle_transitions, shuffle_all, insert_foreign };

inline constexpr Strategy kNegativeStrategies[] = {Strategy::shuffle_transitions, Strategy::shuffle_all,
                                                   Strategy::insert_foreign};

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::positive: return "positive";
    case Strategy::shuffle_transitions: return "shuffle_transitions";
    case Strategy::shuffle_all: return "shuffle_all";
    case Strategy::insert_foreign: return "insert_foreign";
  }
  return "positive";
}

inline std::optional<Strategy> parse_strategy(std::string_view s) {
  for (auto st : {Strategy::positive, Strategy::shuffle_transitions, Strategy::shuffle_all, Strategy::insert_foreign}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

/// A node borrowed from another video.
struct ForeignNode {
  std::string donor_video_id;
  std::string donor_trajectory_id;
  int slot = 0;
  std::size_t room_type = 0;
  std::int64_t keyframe = 0;
};

/// node_order[i] names what sits at position i: a slot index of the source
/// trajectory when >= 0, or foreign_nodes[-(v + 1)] when negative.
struct JudgmentSample {
  std::string sample_id;
  std::string pair_id;
  std::string trajectory_id;
  int label = 0;
  Strategy strategy = Strategy::positive;
  std::vector<int> node_order;
  std::vector<ForeignNode> foreign_nodes;
};

inline int foreign_code(std::size_t j) { return -static_cast<int>(j) - 1; }
inline std::size_t foreign_index(int code) { return static_cast<std::size_t>(-code - 1); }

inline bool is_identity(std::span<const int> order) {
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i] != static_cast<int>(i)) return false;
  }
  return true;
}

inline std::vector<int> identity_order(std::size_t k) {
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

inline std::vector<std::size_t> slots_of_kind(const Trajectory& t, NodeKind kind) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    if (t.nodes[i].kind == kind) out.push_back(i);
  }
  return out;
}

/// Candidate donors for foreign insertion, grouped by video so that a uniform
/// draw over "every node not from video v" is O(log n).
class DonorPool {
 public:
  DonorPool() = default;

  explicit DonorPool(std::vector<ForeignNode> nodes) : nodes_(std::move(nodes)) {
    std::sort(nodes_.begin(), nodes_.end(), [](const ForeignNode& a, const ForeignNode& b) {
      return std::tie(a.donor_video_id, a.donor_trajectory_id, a.slot) <
             std::tie(b.donor_video_id, b.donor_trajectory_id, b.slot);
    });
  }

  /// Every node of every trajectory.
  static DonorPool from_trajectories(std::span<const Trajectory> trajectories) {
    std::vector<ForeignNode> nodes;
    for (const auto& t : trajectories) {
      for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        nodes.push_back({t.video_id, t.trajectory_id, static_cast<int>(i), t.nodes[i].view.room_type,
                         t.nodes[i].view.keyframe.frame_index});
      }
    }
    return DonorPool(std::move(nodes));
  }

  std::size_t size() const noexcept { return nodes_.size(); }

  std::size_t eligible_count(const std::string& exclude_video) const {
    auto [lo, hi] = video_range(exclude_video);
    return nodes_.size() - (hi - lo);
  }

  const ForeignNode& draw(const std::string& exclude_video, Rng& rng) const {
    auto [lo, hi] = video_range(exclude_video);
    const std::size_t eligible = nodes_.size() - (hi - lo);
    if (eligible == 0) throw Inapplicable("no donor nodes from other videos");
    std::size_t r = rng.uniform_index(eligible);
    return nodes_[r < lo ? r : r + (hi - lo)];
  }

 private:
  std::pair<std::size_t, std::size_t> video_range(const std::string& video) const {
    auto lo = std::lower_bound(nodes_.begin(), nodes_.end(), video,
                               [](const ForeignNode& n, const std::string& v) { return n.donor_video_id < v; });
    auto hi = std::upper_bound(lo, nodes_.end(), video,
                               [](const std::string& v, const ForeignNode& n) { return v < n.donor_video_id; });
    return {static_cast<std::size_t>(lo - nodes_.begin()), static_cast<std::size_t>(hi - nodes_.begin())};
  }

  std::vector<ForeignNode> nodes_;
};

inline JudgmentSample make_positive(const PathInstructionPair& pair, const Trajectory& traj) {
  JudgmentSample s;
  s.sample_id = pair.pair_id + "-pos";
  s.pair_id = pair.pair_id;
  s.trajectory_id = traj.trajectory_id;
  s.label = 1;
  s.strategy = Strategy::positive;
  s.node_order = identity_order(traj.nodes.size());
  return s;
}

namespace detail {
inline JudgmentSample negative_base(const PathInstructionPair& pair, const Trajectory& traj, Strategy st) {
  JudgmentSample s;
  s.pair_id = pair.pair_id;
  s.trajectory_id = traj.trajectory_id;
  s.label = 0;
  s.strategy = st;
  s.node_order = identity_order(traj.nodes.size());
  return s;
}

/// Non-identity shuffle of `slots` within `order`, by rejection.
inline void permute_slots(std::vector<int>& order, std::span<const std::size_t> slots, Rng& rng) {
  std::vector<int> values;
  for (auto s : slots) values.push_back(order[s]);
  const std::vector<int> original = values;
  do {
    rng.shuffle(values);
  } while (values == original);
  for (std::size_t i = 0; i < slots.size(); ++i) order[slots[i]] = values[i];
}
}  // namespace detail

/// Permutes the transition slots only. Needs at least two transition nodes.
inline JudgmentSample shuffle_transitions(const PathInstructionPair& pair, const Trajectory& traj, Rng& rng) {
  auto slots = slots_of_kind(traj, NodeKind::transition);
  if (slots.size() < 2) throw Inapplicable("fewer than 2 transition nodes");
  auto s = detail::negative_base(pair, traj, Strategy::shuffle_transitions);
  detail::permute_slots(s.node_order, slots, rng);
  return s;
}

inline JudgmentSample shuffle_all(const PathInstructionPair& pair, const Trajectory& traj, Rng& rng) {
  if (traj.nodes.size() < 2) throw Inapplicable("fewer than 2 nodes");
  auto s = detail::negative_base(pair, traj, Strategy::shuffle_all);
  std::vector<std::size_t> all(traj.nodes.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  detail::permute_slots(s.node_order, all, rng);
  return s;
}

/// Keeps room nodes in place and replaces every transition slot by a node drawn
/// uniformly from trajectories of other videos.
inline JudgmentSample insert_foreign(const PathInstructionPair& pair, const Trajectory& traj, const DonorPool& donors,
                                     Rng& rng) {
  auto slots = slots_of_kind(traj, NodeKind::transition);
  if (slots.empty()) throw Inapplicable("no transition slot to replace");
  if (donors.eligible_count(traj.video_id) == 0) throw Inapplicable("no donor nodes from other videos");
  auto s = detail::negative_base(pair, traj, Strategy::insert_foreign);
  for (auto slot : slots) {
    s.node_order[slot] = foreign_code(s.foreign_nodes.size());
    s.foreign_nodes.push_back(donors.draw(traj.video_id, rng));
  }
  return s;
}

struct StrategyCounts {
  int shuffle_transitions = 1;
  int shuffle_all = 1;
  int insert_foreign = 1;

  int of(Strategy s) const {
    switch (s) {
      case Strategy::shuffle_transitions: return shuffle_transitions;
      case Strategy::shuffle_all: return shuffle_all;
      case Strategy::insert_foreign: return insert_foreign;
      default: return 0;
    }
  }
};

/// Applies each negative strategy its requested number of times. Inapplicable
/// strategies are skipped and noted in `notes`.
inline std::vector<JudgmentSample> make_negatives(const PathInstructionPair& pair, const Trajectory& traj,
                                                  const DonorPool& donors, Rng& rng, const StrategyCounts& counts = {},
                                                  std::vector<std::string>* notes = nullptr) {
  std::vector<JudgmentSample> out;
  for (Strategy st : kNegativeStrategies) {
    for (int n = 0; n < counts.of(st); ++n) {
      try {
        JudgmentSample s = st == Strategy::shuffle_transitions ? shuffle_transitions(pair, traj, rng)
                           : st == Strategy::shuffle_all       ? shuffle_all(pair, traj, rng)
                                                               : insert_foreign(pair, traj, donors, rng);
        s.sample_id = pair.pair_id + "-" + std::string(to_string(st)) + "-" + std::to_string(n);
        out.push_back(std::move(s));
      } catch (const Inapplicable& e) {
        if (notes) notes->push_back(pair.pair_id + ": " + std::string(to_string(st)) + " inapplicable (" + e.what() + ")");
        break;
      }
    }
  }
  return out;
}

struct DatasetSplit {
  std::vector<std::string> train_videos;  // sorted
  std::vector<std::string> test_videos;   // sorted
  double fraction = 0.95;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  bool in_train(const std::string& video) const {
    return std::binary_search(train_videos.begin(), train_videos.end(), video);
  }
};

/// Uniformly shuffles the (sorted, de-duplicated) ids and sends the first
/// round(fraction * n) to train.
inline DatasetSplit split_videos(std::vector<std::string> video_ids, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split_fraction", "must lie in (0, 1)");
  std::sort(video_ids.begin(), video_ids.end());
  video_ids.erase(std::unique(video_ids.begin(), video_ids.end()), video_ids.end());
  if (video_ids.empty()) throw DomainError("split_videos: no videos");
  Rng rng(seed);
  rng.shuffle(video_ids);
  const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(video_ids.size())));

  DatasetSplit split;
  split.fraction = fraction;
  split.seed = seed;
  split.train_videos.assign(video_ids.begin(), video_ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test_videos.assign(video_ids.begin() + static_cast<std::ptrdiff_t>(n_train), video_ids.end());
  std::sort(split.train_videos.begin(), split.train_videos.end());
  std::sort(split.test_videos.begin(), split.test_videos.end());
  if (split.test_videos.empty()) split.warnings.push_back("test split is empty");
  if (split.train_videos.empty()) split.warnings.push_back("train split is empty");
  return split;
}

struct RankingSample {
  std::string sample_id;
  std::string instruction_ref;          // pair_id
  std::vector<std::string> candidates;  // trajectory ids
  std::size_t gold_index = 0;
};

/// Gold trajectory plus C distinct distractors from `pool`, gold placed uniformly.
inline RankingSample make_ranking_set(const PathInstructionPair& pair, std::span<const std::string> pool, std::size_t c,
                                      Rng& rng) {
  std::vector<std::string> eligible;
  for (const auto& t : pool) {
    if (t != pair.trajectory_id) eligible.push_back(t);
  }
  std::sort(eligible.begin(), eligible.end());
  eligible.erase(std::unique(eligible.begin(), eligible.end()), eligible.end());
  if (eligible.size() < c) {
    throw GenerationError("ranking pool has " + std::to_string(eligible.size()) + " distractors, need " +
                          std::to_string(c));
  }
  RankingSample s;
  s.sample_id = pair.pair_id + "-rank";
  s.instruction_ref = pair.pair_id;
  for (auto i : rng.sample_indices(eligible.size(), c)) s.candidates.push_back(eligible[i]);
  rng.shuffle(s.candidates);
  s.gold_index = rng.uniform_index(c + 1);
  s.candidates.insert(s.candidates.begin() + static_cast<std::ptrdiff_t>(s.gold_index), pair.trajectory_id);
  return s;
}

struct MlmSample {
  std::string sample_id;
  std::string pair_id;
  std::vector<std::size_t> masked_positions;  // ascending
  std::vector<std::string> original_tokens;
};

/// Each token is masked independently with probability p_mask; if none was
/// picked, one uniformly chosen token is forced.
inline MlmSample make_mlm_sample(std::span<const std::string> tokens, double p_mask, Rng& rng) {
  if (!(p_mask > 0.0 && p_mask < 1.0)) throw DomainError("make_mlm_sample: p_mask must lie in (0, 1)");
  if (tokens.empty()) throw DomainError("make_mlm_sample: empty instruction");
  MlmSample s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (rng.bernoulli(p_mask)) s.masked_positions.push_back(i);
  }
  if (s.masked_positions.empty()) s.masked_positions.push_back(rng.uniform_index(tokens.size()));
  for (auto p : s.masked_positions) s.original_tokens.push_back(tokens[p]);
  return s;
}

// ---------------------------------------------------------------------------
// Serialization

inline Json judgment_to_json(const JudgmentSample& s) {
  Json j;
  j["sample_id"] = s.sample_id;
  j["pair_id"] = s.pair_id;
  j["trajectory_id"] = s.trajectory_id;
  j["label"] = s.label;
  j["strategy"] = std::string(to_string(s.strategy));
  j["node_order"] = s.node_order;
  if (!s.foreign_nodes.empty()) {
    Json f = Json::array();
    for (const auto& n : s.foreign_nodes) {
      f.push_back({{"donor_video_id", n.donor_video_id},
                   {"donor_trajectory_id", n.donor_trajectory_id},
                   {"slot", n.slot},
                   {"room_type", n.room_type},
                   {"keyframe", n.keyframe}});
    }
    j["foreign_nodes"] = std::move(f);
  }
  return j;
}

inline JudgmentSample judgment_from_json(const Json& j) {
  try {
    JudgmentSample s;
    s.sample_id = j.at("sample_id").get<std::string>();
    s.pair_id = j.at("pair_id").get<std::string>();
    s.trajectory_id = j.at("trajectory_id").get<std::string>();
    s.label = j.at("label").get<int>();
    auto st = parse_strategy(j.at("strategy").get<std::string>());
    if (!st) throw InputError("unknown strategy");
    s.strategy = *st;
    s.node_order = j.at("node_order").get<std::vector<int>>();
    if (j.contains("foreign_nodes")) {
      for (const auto& f : j.at("foreign_nodes")) {
        s.foreign_nodes.push_back({f.at("donor_video_id").get<std::string>(),
                                   f.at("donor_trajectory_id").get<std::string>(), f.at("slot").get<int>(),
                                   f.at("room_type").get<std::size_t>(), f.at("keyframe").get<std::int64_t>()});
      }
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed sample record: ") + e.what());
  }
}

inline Json split_to_json(const DatasetSplit& s) {
  Json j;
  j["train_videos"] = s.train_videos;
  j["test_videos"] = s.test_videos;
  j["seed"] = s.seed;
  j["fraction"] = s.fraction;
  return j;
}

inline DatasetSplit split_from_json(const Json& j) {
  DatasetSplit s;
  s.train_videos = j.at("train_videos").get<std::vector<std::string>>();
  s.test_videos = j.at("test_videos").get<std::vector<std::string>>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.fraction = j.at("fraction").get<double>();
  return s;
}

inline Json ranking_to_json(const RankingSample& s) {
  return {{"sample_id", s.sample_id},
          {"instruction_ref", s.instruction_ref},
          {"candidates", s.candidates},
          {"gold_index", s.gold_index}};
}

inline Json mlm_to_json(const MlmSample& s) {
  return {{"sample_id", s.sample_id},
          {"pair_id", s.pair_id},
          {"masked_positions", s.masked_positions},
          {"original_tokens", s.original_tokens}};
}

}  // namespace tourvln
