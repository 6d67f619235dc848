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

// Synthetic house-tour annotations. Every video walks through a subset of room
// types in one fixed global order (entryway first, garage last), which gives
// trajectories a learnable layout grammar. Noise frames (people, outdoor shots,
// empty views) and classifier uncertainty are sprinkled in.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "tourvln/annotation.hpp"
#include "tourvln/instruction.hpp"
#include "tourvln/rng.hpp"

namespace tourvln {

struct SynthCorpusConfig {
  std::size_t videos = 12;
  int min_rooms = 8;
  int max_rooms = 12;
  double fps = 2.0;
  double min_room_seconds = 8.0;
  double max_room_seconds = 20.0;
  double person_rate = 0.04;
  double outdoor_rate = 0.03;
  double empty_rate = 0.03;
  std::string id_prefix = "vid";
};

/// Global visiting order used by the generator.
inline std::vector<std::string> tour_order() {
  return {"entryway", "hallway",  "living room", "family room", "dining room", "kitchen",
          "laundry room", "office", "bedroom", "closet", "bathroom", "garage"};
}

inline const std::map<std::string, std::vector<std::string>>& room_objects() {
  static const std::map<std::string, std::vector<std::string>> objects{
      {"bathroom", {"sink", "toilet", "bathtub", "mirror"}},
      {"bedroom", {"bed", "lamp", "wardrobe", "pillow"}},
      {"closet", {"shelf", "hanger", "shoe rack"}},
      {"dining room", {"dining table", "chair", "chandelier"}},
      {"entryway", {"door", "coat rack", "rug"}},
      {"family room", {"tv", "armchair", "bookshelf"}},
      {"garage", {"car", "workbench", "bicycle"}},
      {"hallway", {"door", "picture", "staircase"}},
      {"kitchen", {"oven", "refrigerator", "sink", "counter"}},
      {"laundry room", {"washer", "dryer", "basket"}},
      {"living room", {"sofa", "coffee table", "fireplace", "tv"}},
      {"office", {"desk", "computer", "office chair"}},
  };
  return objects;
}

namespace detail {

inline RoomProbs synth_room_probs(std::size_t type, Rng& rng) {
  RoomProbs p{};
  if (rng.bernoulli(0.08)) {
    p[type] = 1.0;
    return p;
  }
  const double main = rng.uniform_real(0.45, 0.95);
  double rest = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i == type) continue;
    p[i] = rng.uniform01() * rng.uniform01();
    rest += p[i];
  }
  const double scale = rest > 0.0 ? (1.0 - main) / rest : 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = i == type ? main : p[i] * scale;
  for (auto& v : p) v = round_sig(v, 6);
  return p;
}

inline double wrap_yaw(double yaw) {
  double w = wrap_degrees(yaw);
  return w >= 180.0 ? w - 360.0 : w;
}

}  // namespace detail

/// Annotation records for `cfg.videos` synthetic tours, ordered by video then time.
inline std::vector<FrameRecord> synthesize_corpus(const SynthCorpusConfig& cfg, std::uint64_t seed,
                                                  const RoomTypeRegistry& registry = RoomTypeRegistry::defaults()) {
  const auto order = tour_order();
  std::vector<FrameRecord> out;
  for (std::size_t v = 0; v < cfg.videos; ++v) {
    char vid[32];
    std::snprintf(vid, sizeof vid, "%s%03zu", cfg.id_prefix.c_str(), v);
    Rng rng(derive_seed(seed, "synth", vid));
    const bool labelled_actions = v % 2 == 0;

    const int n_rooms = rng.uniform_int(cfg.min_rooms, std::min<int>(cfg.max_rooms, static_cast<int>(order.size())));
    auto picks = rng.sample_indices(order.size(), static_cast<std::size_t>(n_rooms));

    std::int64_t frame_index = 0;
    double yaw = rng.uniform_real(-180.0, 180.0);
    for (std::size_t r = 0; r < picks.size(); ++r) {
      const auto& room = order[picks[r]];
      const std::size_t type = registry.ordinal(room);
      const auto& objs = room_objects().at(room);
      const double seconds = rng.uniform_real(cfg.min_room_seconds, cfg.max_room_seconds);
      const auto n_frames = static_cast<std::int64_t>(std::ceil(seconds * cfg.fps));
      static constexpr double kTurns[] = {-90.0, 0.0, 90.0};
      const double turn = kTurns[rng.uniform_index(3)];
      const Action turn_action = turn < 0 ? Action::left : turn > 0 ? Action::right : Action::forward;
      for (std::int64_t k = 0; k < n_frames; ++k) {
        FrameRecord f;
        f.video_id = vid;
        f.frame_index = frame_index;
        f.timestamp_s = static_cast<double>(frame_index) / cfg.fps;
        f.room_probs = detail::synth_room_probs(type, rng);
        f.person = rng.bernoulli(cfg.person_rate);
        f.outdoor = rng.bernoulli(cfg.outdoor_rate);
        const bool empty = rng.bernoulli(cfg.empty_rate);
        if (!empty) {
          const auto n_obj = 1 + rng.uniform_index(std::min<std::size_t>(3, objs.size()));
          for (auto i : rng.sample_indices(objs.size(), n_obj)) {
            f.objects.push_back({objs[i], round_sig(rng.uniform_real(0.3, 0.99), 3)});
          }
          f.region_count = static_cast<std::int64_t>(f.objects.size() + rng.uniform_index(8));
        }
        f.yaw_deg = round_sig(detail::wrap_yaw(yaw + rng.uniform_real(-10.0, 10.0)), 6);
        if (labelled_actions) f.action_to_next = k + 1 == n_frames ? turn_action : Action::forward;
        out.push_back(std::move(f));
        ++frame_index;
      }
      yaw = detail::wrap_yaw(yaw + turn);
    }
  }
  return out;
}

/// Hand-written fill-in-the-blank templates for R = 1..7 room nodes.
inline std::vector<std::string> default_templates() {
  return {
      "go into the {NP} and wait there",
      "walk past the {NP} and {VP} into the {NP}",
      "leave the {NP} , {VP} and stop in the {NP}",
      "exit the {NP} then {VP} and wait by the {NP}",
      "from the {NP} {VP} until you reach the {NP}",
      "start in the {NP} , {VP} toward the {NP} then {VP} and wait in the {NP}",
      "walk through the {NP} and {VP} . pass the {NP} and {VP} into the {NP}",
      "head out of the {NP} , {VP} past the {NP} , {VP} and stop at the {NP}",
      "go through the {NP} , {VP} into the {NP} , {VP} to the {NP} and {VP} to the {NP}",
      "leave the {NP} and {VP} . walk by the {NP} , {VP} , cross the {NP} , {VP} and stop in the {NP}",
      "from the {NP} {VP} to the {NP} , {VP} through the {NP} , {VP} past the {NP} , {VP} and wait in the {NP}",
      "start at the {NP} , {VP} into the {NP} , {VP} along the {NP} , {VP} by the {NP} and {VP} to the {NP}",
      "walk out of the {NP} , {VP} to the {NP} , {VP} past the {NP} , {VP} through the {NP} , {VP} by the {NP} "
      "and {VP} to the {NP}",
      "begin in the {NP} and {VP} . go past the {NP} , {VP} , enter the {NP} , {VP} , cross the {NP} , {VP} , "
      "pass the {NP} , {VP} and stop in the {NP}",
      "leave the {NP} , {VP} to the {NP} , {VP} through the {NP} , {VP} past the {NP} , {VP} by the {NP} , {VP} "
      "along the {NP} and {VP} to the {NP}",
      // malformed on purpose: rejected by the template parser
      "{NP} {VP} {VP} {NP}",
      "turn around and {VP}",
  };
}

}  // namespace tourvln
