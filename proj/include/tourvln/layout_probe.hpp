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

// Layout-reasoning probe on synthetic navigation graphs: predict which of twelve
// 30-degree sectors holds the neighbour of a queried room type, trained with
// softmax cross-entropy and compared against the 1/12 chance level.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tourvln/annotation.hpp"
#include "tourvln/errors.hpp"
#include "tourvln/format.hpp"
#include "tourvln/instruction.hpp"
#include "tourvln/rng.hpp"

namespace tourvln {

inline constexpr int kIntervalCount = 12;
inline constexpr double kIntervalWidthDeg = 360.0 / kIntervalCount;

/// Interval i covers [-180 + 30i, -180 + 30(i+1)); s = 180 closes the last one.
inline int angle_to_interval(double s) {
  if (!(s >= -180.0 && s <= 180.0)) throw DomainError("angle_to_interval: angle outside [-180, 180]");
  int i = static_cast<int>(std::floor((s + 180.0) / kIntervalWidthDeg));
  return std::min(i, kIntervalCount - 1);
}

inline double interval_center(int i) { return -180.0 + kIntervalWidthDeg * (i + 0.5); }

struct HouseNode {
  int node_id = 0;
  double x = 0.0;
  double y = 0.0;
  std::size_t room_type = 0;
  std::optional<double> yaw_deg;  // reference heading; east (0) when absent
};

struct SynthHouse {
  std::string house_id;
  std::vector<HouseNode> nodes;
  std::vector<std::pair<int, int>> edges;
  std::string rule_id;

  std::vector<int> neighbours(int node) const {
    std::vector<int> out;
    for (const auto& [a, b] : edges) {
      if (a == node) out.push_back(b);
      if (b == node) out.push_back(a);
    }
    std::sort(out.begin(), out.end());
    return out;
  }
};

/// Star-shaped houses: one hub room with leaf rooms around it. Each leaf type
/// sits in a fixed sector as seen from the hub, so the direction between any
/// connected pair is determined by the two room types.
struct LayoutRules {
  std::string rule_id = "star-sectors";
  std::vector<std::size_t> hub_types;
  std::map<std::size_t, int> leaf_sectors;  // leaf room type -> sector 0..11 as seen from the hub
  int min_leaves = 3;
  int max_leaves = 8;
  double min_distance = 1.0;
  double max_distance = 3.0;
  bool random_directions = false;  // control: leaves placed at uniform bearings

  /// Hubs: entryway, family room, hallway; the other nine types get sectors 0..8.
  static LayoutRules star_sectors(const RoomTypeRegistry& registry = RoomTypeRegistry::defaults()) {
    LayoutRules r;
    r.hub_types = {registry.ordinal("entryway"), registry.ordinal("family room"), registry.ordinal("hallway")};
    int sector = 0;
    for (std::size_t t = 0; t < registry.size(); ++t) {
      if (std::find(r.hub_types.begin(), r.hub_types.end(), t) == r.hub_types.end()) r.leaf_sectors[t] = sector++;
    }
    return r;
  }

  static LayoutRules star_random(const RoomTypeRegistry& registry = RoomTypeRegistry::defaults()) {
    LayoutRules r = star_sectors(registry);
    r.rule_id = "star-random";
    r.random_directions = true;
    return r;
  }
};

inline std::vector<SynthHouse> generate_houses(std::size_t count, Rng& rng, const LayoutRules& rules,
                                               const std::string& id_prefix = "house") {
  if (rules.hub_types.empty() || rules.leaf_sectors.empty()) throw DomainError("generate_houses: empty rule set");
  std::vector<std::size_t> leaf_types;
  for (const auto& [t, _] : rules.leaf_sectors) leaf_types.push_back(t);
  const int max_leaves = std::min<int>(rules.max_leaves, static_cast<int>(leaf_types.size()));

  std::vector<SynthHouse> houses;
  for (std::size_t h = 0; h < count; ++h) {
    SynthHouse house;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%05zu", id_prefix.c_str(), h);
    house.house_id = buf;
    house.rule_id = rules.rule_id;
    const double ox = rng.uniform_real(-10.0, 10.0);
    const double oy = rng.uniform_real(-10.0, 10.0);
    house.nodes.push_back({0, ox, oy, rules.hub_types[rng.uniform_index(rules.hub_types.size())], std::nullopt});
    const int n_leaves = rng.uniform_int(std::min(rules.min_leaves, max_leaves), max_leaves);
    for (auto idx : rng.sample_indices(leaf_types.size(), static_cast<std::size_t>(n_leaves))) {
      const std::size_t type = leaf_types[idx];
      const double bearing = rules.random_directions ? rng.uniform_real(-180.0, 180.0)
                                                     : interval_center(rules.leaf_sectors.at(type));
      const double dist = rng.uniform_real(rules.min_distance, rules.max_distance);
      const double rad = bearing * std::numbers::pi / 180.0;
      const int id = static_cast<int>(house.nodes.size());
      house.nodes.push_back({id, ox + dist * std::cos(rad), oy + dist * std::sin(rad), type, std::nullopt});
      house.edges.emplace_back(0, id);
    }
    houses.push_back(std::move(house));
  }
  return houses;
}

inline constexpr std::size_t kProbeFeatureDim = 2 * kRoomTypeCount;

struct ProbeInstance {
  std::string house_id;
  int current_node = 0;
  std::size_t query_room_type = 0;
  double s = 0.0;  // degrees, relative to the current node's heading
  int target_interval = 0;
  std::vector<double> features;  // one-hot(current type) ++ one-hot(query type)
};

/// Bearing from `from` to `to` relative to `from`'s heading, in (-180, 180].
inline double relative_bearing(const HouseNode& from, const HouseNode& to) {
  const double absolute = std::atan2(to.y - from.y, to.x - from.x) * 180.0 / std::numbers::pi;
  return wrap_degrees(absolute - from.yaw_deg.value_or(0.0));
}

/// `count` draws of (random node, random neighbour of it).
inline std::vector<ProbeInstance> make_instances(const SynthHouse& house, Rng& rng, std::size_t count) {
  std::vector<ProbeInstance> out;
  if (house.nodes.empty()) return out;
  for (std::size_t k = 0; k < count; ++k) {
    const auto& cur = house.nodes[rng.uniform_index(house.nodes.size())];
    auto nbrs = house.neighbours(cur.node_id);
    if (nbrs.empty()) continue;
    const auto& other = house.nodes[static_cast<std::size_t>(nbrs[rng.uniform_index(nbrs.size())])];
    // the query names a room type; skip when it does not resolve to exactly this node
    const auto matches = std::count_if(house.nodes.begin(), house.nodes.end(),
                                       [&](const HouseNode& n) { return n.room_type == other.room_type; });
    if (matches != 1) continue;
    ProbeInstance inst;
    inst.house_id = house.house_id;
    inst.current_node = cur.node_id;
    inst.query_room_type = other.room_type;
    inst.s = relative_bearing(cur, other);
    inst.target_interval = angle_to_interval(inst.s);
    inst.features.assign(kProbeFeatureDim, 0.0);
    inst.features[cur.room_type] = 1.0;
    inst.features[kRoomTypeCount + other.room_type] = 1.0;
    out.push_back(std::move(inst));
  }
  return out;
}

/// Down-samples every target class to the size of the rarest present class.
inline std::vector<ProbeInstance> balance_by_target(std::vector<ProbeInstance> instances, Rng& rng) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < instances.size(); ++i) by_class[instances[i].target_interval].push_back(i);
  if (by_class.empty()) return {};
  std::size_t smallest = instances.size();
  for (const auto& [_, idx] : by_class) smallest = std::min(smallest, idx.size());
  std::vector<std::size_t> keep;
  for (const auto& [_, idx] : by_class) {
    for (auto j : rng.sample_indices(idx.size(), smallest)) keep.push_back(idx[j]);
  }
  std::sort(keep.begin(), keep.end());
  std::vector<ProbeInstance> out;
  for (auto i : keep) out.push_back(std::move(instances[i]));
  return out;
}

/// Linear scores over `features` inputs for each of the 12 intervals. The
/// probabilities are softmax(scores), or softmax(-scores) when `negate_logits`
/// is set (the e^{-x} form).
struct SoftmaxModel {
  std::size_t features = kProbeFeatureDim;
  std::vector<double> weights = std::vector<double>(kIntervalCount * kProbeFeatureDim, 0.0);  // row-major 12 x F
  bool negate_logits = false;

  std::array<double, kIntervalCount> logits(std::span<const double> x) const {
    std::array<double, kIntervalCount> z{};
    for (int c = 0; c < kIntervalCount; ++c) {
      double acc = 0.0;
      const double* row = weights.data() + static_cast<std::size_t>(c) * features;
      for (std::size_t i = 0; i < features; ++i) acc += row[i] * x[i];
      z[static_cast<std::size_t>(c)] = acc;
    }
    return z;
  }

  std::array<double, kIntervalCount> probabilities(std::span<const double> x) const {
    return softmax(logits(x), negate_logits);
  }

  static std::array<double, kIntervalCount> softmax(std::array<double, kIntervalCount> z, bool negate = false) {
    if (negate) {
      for (auto& v : z) v = -v;
    }
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& v : z) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (auto& v : z) v /= sum;
    return z;
  }

  int predict(std::span<const double> x) const {
    auto p = probabilities(x);
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
  }
};

struct CeLossReport {
  double loss = 0.0;
  std::vector<double> gradient;  // same layout as SoftmaxModel::weights
};

/// Mean of -ln(p_target) over the batch, p clipped below at 1e-12.
inline constexpr double kCeEpsilon = 1e-12;

inline CeLossReport ce_loss(const SoftmaxModel& model, std::span<const std::vector<double>> features,
                            std::span<const int> targets) {
  if (features.empty()) throw DomainError("ce_loss: empty batch");
  if (features.size() != targets.size()) throw DomainError("ce_loss: feature/target count mismatch");
  const double inv_n = 1.0 / static_cast<double>(features.size());
  const double sign = model.negate_logits ? -1.0 : 1.0;
  CeLossReport r;
  r.gradient.assign(model.weights.size(), 0.0);
  for (std::size_t n = 0; n < features.size(); ++n) {
    const auto& x = features[n];
    const auto p = model.probabilities(x);
    const auto t = static_cast<std::size_t>(targets[n]);
    const double pt = std::max(p[t], kCeEpsilon);
    r.loss -= inv_n * std::log(pt);
    const bool clipped = p[t] < kCeEpsilon;
    if (clipped) continue;
    for (std::size_t c = 0; c < static_cast<std::size_t>(kIntervalCount); ++c) {
      const double dz = sign * inv_n * (p[c] - (c == t ? 1.0 : 0.0));
      double* row = r.gradient.data() + c * model.features;
      for (std::size_t i = 0; i < model.features; ++i) row[i] += dz * x[i];
    }
  }
  return r;
}

struct ProbeHyper {
  double lr = 1.0;
  int epochs = 500;
  bool negate_logits = false;
};

struct ProbeTrainResult {
  SoftmaxModel model;
  std::vector<double> history;
};

inline ProbeTrainResult train_probe(std::span<const ProbeInstance> instances, const ProbeHyper& hyper) {
  if (instances.empty()) throw DomainError("train_probe: no instances");
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const auto& inst : instances) {
    x.push_back(inst.features);
    y.push_back(inst.target_interval);
  }
  if (std::all_of(y.begin(), y.end(), [&](int v) { return v == y.front(); })) {
    throw DomainError("train_probe: all instances share one target interval");
  }
  ProbeTrainResult out;
  out.model.features = x.front().size();
  out.model.weights.assign(kIntervalCount * out.model.features, 0.0);
  out.model.negate_logits = hyper.negate_logits;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    auto rep = ce_loss(out.model, x, y);
    out.history.push_back(rep.loss);
    for (std::size_t i = 0; i < out.model.weights.size(); ++i) out.model.weights[i] -= hyper.lr * rep.gradient[i];
  }
  out.history.push_back(ce_loss(out.model, x, y).loss);
  return out;
}

/// Fraction of instances whose argmax interval (lowest index on ties) is the target.
inline double evaluate_probe(const SoftmaxModel& model, std::span<const ProbeInstance> instances) {
  if (instances.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& inst : instances) hits += model.predict(inst.features) == inst.target_interval;
  return static_cast<double>(hits) / static_cast<double>(instances.size());
}

/// Two-sided pooled two-proportion z-test p-value.
inline double two_proportion_p_value(std::size_t hits_a, std::size_t n_a, std::size_t hits_b, std::size_t n_b) {
  if (n_a == 0 || n_b == 0) throw DomainError("two_proportion_p_value: empty sample");
  const double pa = static_cast<double>(hits_a) / static_cast<double>(n_a);
  const double pb = static_cast<double>(hits_b) / static_cast<double>(n_b);
  const double pooled = static_cast<double>(hits_a + hits_b) / static_cast<double>(n_a + n_b);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / static_cast<double>(n_a) + 1.0 / static_cast<double>(n_b)));
  if (se == 0.0) return pa == pb ? 1.0 : 0.0;
  const double z = (pa - pb) / se;
  return std::erfc(std::fabs(z) / std::numbers::sqrt2);
}

struct ProbeConfig {
  std::size_t train_houses = 400;
  std::size_t test_houses = 1000;
  std::size_t instances_per_house = 16;
  ProbeHyper hyper;
  std::string rules = "star-sectors";  // or "star-random"
};

struct ProbeReport {
  double untrained_acc = 0.0;
  double trained_acc = 0.0;
  double shuffled_label_acc = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double p_value = 1.0;
  std::vector<double> history;
};

/// End-to-end probe: disjoint train/test houses, a balanced test set, the zero
/// model as the untrained baseline, and a shuffled-label control.
inline ProbeReport run_layout_probe(const ProbeConfig& cfg, std::uint64_t seed,
                                    const RoomTypeRegistry& registry = RoomTypeRegistry::defaults(),
                                    std::vector<SynthHouse>* houses_out = nullptr) {
  const LayoutRules rules =
      cfg.rules == "star-random" ? LayoutRules::star_random(registry) : LayoutRules::star_sectors(registry);
  Rng house_rng(derive_seed(seed, "probe", "houses"));
  auto train_h = generate_houses(cfg.train_houses, house_rng, rules, "train");
  auto test_h = generate_houses(cfg.test_houses, house_rng, rules, "test");

  Rng inst_rng(derive_seed(seed, "probe", "instances"));
  std::vector<ProbeInstance> train, test;
  for (const auto& h : train_h) {
    auto v = make_instances(h, inst_rng, cfg.instances_per_house);
    train.insert(train.end(), v.begin(), v.end());
  }
  for (const auto& h : test_h) {
    auto v = make_instances(h, inst_rng, cfg.instances_per_house);
    test.insert(test.end(), v.begin(), v.end());
  }
  Rng bal_rng(derive_seed(seed, "probe", "balance"));
  test = balance_by_target(std::move(test), bal_rng);

  ProbeReport rep;
  rep.n_train = train.size();
  rep.n_test = test.size();
  SoftmaxModel untrained;
  untrained.negate_logits = cfg.hyper.negate_logits;
  rep.untrained_acc = evaluate_probe(untrained, test);

  auto trained = train_probe(train, cfg.hyper);
  rep.trained_acc = evaluate_probe(trained.model, test);
  rep.history = trained.history;

  auto shuffled = train;
  std::vector<int> labels;
  for (const auto& s : shuffled) labels.push_back(s.target_interval);
  Rng shuf_rng(derive_seed(seed, "probe", "shuffle"));
  shuf_rng.shuffle(labels);
  for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i].target_interval = labels[i];
  rep.shuffled_label_acc = evaluate_probe(train_probe(shuffled, cfg.hyper).model, test);

  const auto hits_trained = static_cast<std::size_t>(std::llround(rep.trained_acc * static_cast<double>(rep.n_test)));
  const auto hits_untrained = static_cast<std::size_t>(std::llround(rep.untrained_acc * static_cast<double>(rep.n_test)));
  rep.p_value = rep.n_test ? two_proportion_p_value(hits_trained, rep.n_test, hits_untrained, rep.n_test) : 1.0;

  if (houses_out) {
    houses_out->insert(houses_out->end(), train_h.begin(), train_h.end());
    houses_out->insert(houses_out->end(), test_h.begin(), test_h.end());
  }
  return rep;
}

inline Json house_to_json(const SynthHouse& h, const RoomTypeRegistry& registry) {
  Json nodes = Json::array();
  for (const auto& n : h.nodes) {
    Json jn = {{"node_id", n.node_id}, {"x", round_sig(n.x, 9)}, {"y", round_sig(n.y, 9)},
               {"room_type", registry.label(n.room_type)}};
    if (n.yaw_deg) jn["yaw_deg"] = *n.yaw_deg;
    nodes.push_back(std::move(jn));
  }
  Json edges = Json::array();
  for (const auto& [a, b] : h.edges) edges.push_back({a, b});
  return {{"house_id", h.house_id}, {"nodes", nodes}, {"edges", edges}, {"rule_id", h.rule_id}};
}

inline Json probe_report_to_json(const ProbeReport& r) {
  return {{"untrained_acc", round_sig(r.untrained_acc)},
          {"trained_acc", round_sig(r.trained_acc)},
          {"shuffled_label_acc", round_sig(r.shuffled_label_acc)},
          {"n_train", r.n_train},
          {"n_test", r.n_test},
          {"p_value", round_sig(r.p_value)}};
}

}  // namespace tourvln
