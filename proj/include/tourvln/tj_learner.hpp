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

// Trajectory-judgment objective at desk scale: symbolic room-type features, a
// logistic model, and the positive-weighted binary cross-entropy
//
//   L = -(1/N) sum_n [ w * y_n * log(p_n) + (1 - y_n) * log(1 - p_n) ],
//
// where w is the negative-to-positive sample ratio of the batch.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tourvln/annotation.hpp"
#include "tourvln/errors.hpp"
#include "tourvln/format.hpp"
#include "tourvln/samples.hpp"
#include "tourvln/trajectory.hpp"

namespace tourvln {

inline constexpr int kFeatureVersion = 1;
inline constexpr std::size_t kBigramOffset = 0;
inline constexpr std::size_t kHistogramOffset = kRoomTypeCount * kRoomTypeCount;
inline constexpr std::size_t kLengthOffset = kHistogramOffset + kRoomTypeCount;
inline constexpr std::size_t kFeatureDim = kLengthOffset + 2;  // 158

struct FeatureVector {
  std::vector<double> values = std::vector<double>(kFeatureDim, 0.0);
  int version = kFeatureVersion;
};

/// Room types in the order the sample presents its nodes.
inline std::vector<std::size_t> presented_room_types(const JudgmentSample& s, const Trajectory& traj) {
  std::vector<std::size_t> types;
  types.reserve(s.node_order.size());
  for (int code : s.node_order) {
    if (code >= 0) {
      types.push_back(traj.nodes.at(static_cast<std::size_t>(code)).view.room_type);
    } else {
      types.push_back(s.foreign_nodes.at(foreign_index(code)).room_type);
    }
  }
  return types;
}

/// Ordered room-type bigram counts, a room-type histogram, then (K, R).
inline FeatureVector featurize(std::span<const std::size_t> room_types, int room_node_count) {
  FeatureVector f;
  for (std::size_t i = 0; i + 1 < room_types.size(); ++i) {
    f.values[kBigramOffset + room_types[i] * kRoomTypeCount + room_types[i + 1]] += 1.0;
  }
  for (auto t : room_types) f.values[kHistogramOffset + t] += 1.0;
  f.values[kLengthOffset] = static_cast<double>(room_types.size());
  f.values[kLengthOffset + 1] = static_cast<double>(room_node_count);
  return f;
}

inline FeatureVector featurize(const JudgmentSample& s, const Trajectory& traj) {
  auto types = presented_room_types(s, traj);
  return featurize(types, traj.room_node_count);
}

struct LinearModel {
  std::vector<double> weights = std::vector<double>(kFeatureDim, 0.0);
  double bias = 0.0;

  double logit(std::span<const double> x) const {
    double z = bias;
    for (std::size_t i = 0; i < x.size(); ++i) z += weights[i] * x[i];
    return z;
  }
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

inline constexpr double kProbEpsilon = 1e-12;
inline const double kLogEpsilon = std::log(kProbEpsilon);
inline const double kLog1mEpsilon = std::log1p(-kProbEpsilon);

/// log(1 + e^x) without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

struct JudgmentBatch {
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  double w = 1.0;

  std::size_t size() const noexcept { return labels.size(); }
};

/// Negative-to-positive ratio, or 1 when either class is absent.
inline double auto_weight(std::span<const int> labels) {
  std::size_t pos = 0;
  for (int y : labels) pos += (y == 1);
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) return 1.0;
  return static_cast<double>(neg) / static_cast<double>(pos);
}

struct LossReport {
  double loss = 0.0;
  std::vector<double> gradient;  // dL/dweights followed by dL/dbias
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

inline LossReport tj_loss(const LinearModel& model, const JudgmentBatch& batch) {
  if (batch.size() == 0) throw DomainError("tj_loss: empty batch");
  if (batch.features.size() != batch.labels.size()) throw DomainError("tj_loss: feature/label count mismatch");
  const std::size_t d = model.weights.size();
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  LossReport r;
  r.gradient.assign(d + 1, 0.0);
  double sum = 0.0;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const auto& x = batch.features[n];
    const int y = batch.labels[n];
    const double z = model.logit(x);
    const double p = sigmoid(z);
    // log p and log(1 - p) via softplus, then clipped to [log eps, log(1 - eps)]
    const double log_p = std::clamp(-softplus(-z), kLogEpsilon, kLog1mEpsilon);
    const double log_q = std::clamp(-softplus(z), kLogEpsilon, kLog1mEpsilon);
    const bool clipped = p < kProbEpsilon || p > 1.0 - kProbEpsilon;
    if (y == 1) {
      ++r.n_pos;
      sum += batch.w * log_p;
    } else {
      ++r.n_neg;
      sum += log_q;
    }
    if (clipped) continue;  // flat region of the clipped objective
    // d/dz of the bracket: w*y*(1-p) - (1-y)*p
    const double dz = -inv_n * (y == 1 ? batch.w * (1.0 - p) : -p);
    for (std::size_t i = 0; i < d; ++i) r.gradient[i] += dz * x[i];
    r.gradient[d] += dz;
  }
  r.loss = -inv_n * sum;
  return r;
}

enum class WeightMode { automatic, fixed };

struct TjHyper {
  double lr = 0.1;
  int epochs = 500;
  std::uint64_t seed = 0;
  WeightMode w_mode = WeightMode::automatic;
  double w_fixed = 1.0;
};

struct TjTrainResult {
  LinearModel model;
  std::vector<double> history;  // loss before each step, then the final loss
  double w = 1.0;
};

/// Full-batch gradient descent from the zero model.
inline TjTrainResult train_tj(std::span<const std::vector<double>> features, std::span<const int> labels,
                              const TjHyper& hyper) {
  if (features.size() != labels.size()) throw DomainError("train_tj: feature/label count mismatch");
  const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
  if (!has_pos || !has_neg) throw DomainError("train_tj: training data needs both classes");

  JudgmentBatch batch;
  batch.features.assign(features.begin(), features.end());
  batch.labels.assign(labels.begin(), labels.end());
  batch.w = hyper.w_mode == WeightMode::automatic ? auto_weight(labels) : hyper.w_fixed;

  TjTrainResult out;
  out.w = batch.w;
  const std::size_t d = batch.features.front().size();
  out.model.weights.assign(d, 0.0);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    auto rep = tj_loss(out.model, batch);
    out.history.push_back(rep.loss);
    for (std::size_t i = 0; i < d; ++i) out.model.weights[i] -= hyper.lr * rep.gradient[i];
    out.model.bias -= hyper.lr * rep.gradient[d];
  }
  out.history.push_back(tj_loss(out.model, batch).loss);
  return out;
}

struct TjMetrics {
  std::size_t n = 0;
  double accuracy = 0.0;
  std::optional<double> balanced_accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::map<Strategy, std::optional<double>> per_strategy;  // absent bucket -> nullopt
};

inline TjMetrics evaluate_tj(const LinearModel& model, std::span<const std::vector<double>> features,
                             std::span<const int> labels, std::span<const Strategy> strategies) {
  TjMetrics m;
  m.n = labels.size();
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::map<Strategy, std::pair<std::size_t, std::size_t>> bucket;  // (correct, total)
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = sigmoid(model.logit(features[i])) > 0.5;  // p = 0.5 counts as negative
    const bool truth = labels[i] == 1;
    (pred ? (truth ? tp : fp) : (truth ? fn : tn)) += 1;
    if (i < strategies.size()) {
      auto& b = bucket[strategies[i]];
      b.first += (pred == truth);
      b.second += 1;
    }
  }
  if (m.n > 0) m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(m.n);
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (tp + fn > 0 && tn + fp > 0) {
    m.balanced_accuracy = 0.5 * (static_cast<double>(tp) / static_cast<double>(tp + fn) +
                                 static_cast<double>(tn) / static_cast<double>(tn + fp));
  }
  for (auto st : {Strategy::positive, Strategy::shuffle_transitions, Strategy::shuffle_all, Strategy::insert_foreign}) {
    auto it = bucket.find(st);
    if (it == bucket.end() || it->second.second == 0) {
      m.per_strategy[st] = std::nullopt;
    } else {
      m.per_strategy[st] = static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
    }
  }
  return m;
}

namespace detail {
inline Json optional_number(const std::optional<double>& v) { return v ? Json(round_sig(*v)) : Json(nullptr); }
}  // namespace detail

inline Json tj_metrics_to_json(const TjMetrics& m) {
  Json j;
  j["n"] = m.n;
  j["accuracy"] = round_sig(m.accuracy);
  j["balanced_accuracy"] = detail::optional_number(m.balanced_accuracy);
  j["precision"] = detail::optional_number(m.precision);
  j["recall"] = detail::optional_number(m.recall);
  Json per = Json::object();
  for (const auto& [st, v] : m.per_strategy) per[std::string(to_string(st))] = detail::optional_number(v);
  j["per_strategy"] = std::move(per);
  return j;
}

inline std::string tj_metrics_table(const TjMetrics& m) {
  auto cell = [](const std::optional<double>& v) { return v ? format_sig(*v) : std::string("n/a"); };
  std::string out;
  auto row = [](std::string name, const std::string& value) {
    name.resize(std::max<std::size_t>(name.size() + 1, 28), ' ');
    return name + value + "\n";
  };
  out += row("metric", "value");
  out += row("n", std::to_string(m.n));
  out += row("accuracy", format_sig(m.accuracy));
  out += row("balanced_accuracy", cell(m.balanced_accuracy));
  out += row("precision", cell(m.precision));
  out += row("recall", cell(m.recall));
  for (const auto& [st, v] : m.per_strategy) out += row("acc[" + std::string(to_string(st)) + "]", cell(v));
  return out;
}

inline Json tj_model_to_json(const LinearModel& model, const TjHyper& hyper, double w, const TjMetrics& metrics) {
  Json j;
  j["feature_version"] = kFeatureVersion;
  Json weights = Json::array();
  for (double v : model.weights) weights.push_back(round_sig(v, 12));
  j["weights"] = std::move(weights);
  j["bias"] = round_sig(model.bias, 12);
  j["hyper"] = {{"lr", hyper.lr},
                {"epochs", hyper.epochs},
                {"seed", hyper.seed},
                {"w_mode", hyper.w_mode == WeightMode::automatic ? "auto" : "fixed"},
                {"w", round_sig(w)}};
  j["final_metrics"] = tj_metrics_to_json(metrics);
  return j;
}

inline LinearModel tj_model_from_json(const Json& j) {
  if (j.at("feature_version").get<int>() != kFeatureVersion) throw InputError("unsupported feature_version");
  LinearModel m;
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  if (m.weights.size() != kFeatureDim) throw InputError("model weight count differs from feature dimension");
  return m;
}

}  // namespace tourvln
