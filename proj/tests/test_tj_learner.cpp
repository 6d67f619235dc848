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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "tj_oracles.hpp"
#include "tourvln/tj_learner.hpp"

using namespace tourvln;
using namespace tj_oracles;

namespace {

LinearModel model_with_prob(std::size_t d, double p) {
  LinearModel m;
  m.weights.assign(d, 0.0);
  m.bias = std::log(p / (1.0 - p));
  return m;
}

Trajectory typed_trajectory(const std::vector<std::size_t>& types) {
  Trajectory t;
  t.video_id = "v";
  t.trajectory_id = "v-t00";
  for (auto type : types) {
    TrajectoryNode n;
    n.view.room_type = type;
    n.group_ref = 0;
    t.nodes.push_back(n);
  }
  t.room_node_count = static_cast<int>(types.size());
  return t;
}

}  // namespace

TEST(Featurize, BigramsAndHistogram) {
  const auto reg = RoomTypeRegistry::defaults();
  const auto kitchen = reg.ordinal("kitchen"), hallway = reg.ordinal("hallway");
  auto t = typed_trajectory({kitchen, hallway});
  JudgmentSample s;
  s.node_order = {0, 1};
  auto f = featurize(s, t);
  double bigram_mass = 0.0;
  for (std::size_t i = 0; i < kHistogramOffset; ++i) bigram_mass += f.values[i];
  EXPECT_EQ(bigram_mass, 1.0);
  EXPECT_EQ(f.values[kitchen * kRoomTypeCount + hallway], 1.0);

  s.node_order = {1, 0};
  auto g = featurize(s, t);
  EXPECT_EQ(g.values[hallway * kRoomTypeCount + kitchen], 1.0);
  EXPECT_EQ(g.values[kitchen * kRoomTypeCount + hallway], 0.0);

  double hist = 0.0;
  for (std::size_t i = kHistogramOffset; i < kLengthOffset; ++i) hist += g.values[i];
  EXPECT_EQ(hist, 2.0);
  EXPECT_EQ(g.values[kLengthOffset], 2.0);
}

TEST(Featurize, ForeignNodesUseDonorRoomType) {
  auto t = typed_trajectory({0, 1, 2});
  JudgmentSample s;
  s.node_order = {0, foreign_code(0), 2};
  s.foreign_nodes.push_back({"other", "other-t00", 0, 7, 0});
  auto types = presented_room_types(s, t);
  EXPECT_EQ(types, (std::vector<std::size_t>{0, 7, 2}));
}

TEST(TjLoss, ClosedForms) {
  JudgmentBatch one;
  one.features = {{0.0}};
  one.labels = {1};
  one.w = 1.0;
  EXPECT_NEAR(tj_loss(model_with_prob(1, 0.5), one).loss, std::numbers::ln2, 1e-15);
  EXPECT_NEAR(std::numbers::ln2, 0.693147, 1e-6);

  // p = 0.9 for the positive, 0.1 for the negative: x = +1 / -1 with weight ln 9
  LinearModel m;
  m.weights = {std::log(9.0)};
  JudgmentBatch two;
  two.features = {{1.0}, {-1.0}};
  two.labels = {1, 0};
  two.w = 1.0;
  EXPECT_NEAR(tj_loss(m, two).loss, -std::log(0.9), 1e-12);
  EXPECT_NEAR(-std::log(0.9), 0.105361, 1e-6);
}

TEST(TjLoss, AutoWeight) {
  EXPECT_EQ(auto_weight(std::vector<int>{1, 0, 0, 0}), 3.0);
  EXPECT_EQ(auto_weight(std::vector<int>{1, 1}), 1.0);
  EXPECT_EQ(auto_weight(std::vector<int>{0, 0}), 1.0);
  EXPECT_EQ(auto_weight(std::vector<int>{1, 1, 0}), 0.5);
}

TEST(TjLoss, EmptyBatchErrors) {
  EXPECT_THROW(tj_loss(LinearModel{}, JudgmentBatch{}), DomainError);
}

TEST(TjLoss, MatchesDirectEvaluation) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    auto d = random_draw(rng, 1 + rng.uniform_index(20), 1 + rng.uniform_index(30), 3.0);
    const double ours = tj_loss(d.model, d.batch).loss;
    EXPECT_NEAR(ours, direct_loss(d.model.weights, d.model.bias, d.batch.features, d.batch.labels, d.batch.w), 1e-12);
  }
}

TEST(TjLoss, ReducesToMeanBceAtUnitWeight) {
  Rng rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    auto d = random_draw(rng, 5, 12);
    d.batch.w = 1.0;
    double bce = 0.0;
    for (std::size_t n = 0; n < d.batch.size(); ++n) {
      const double p = sigmoid(d.model.logit(d.batch.features[n]));
      bce += d.batch.labels[n] ? -std::log(p) : -std::log(1.0 - p);
    }
    EXPECT_NEAR(tj_loss(d.model, d.batch).loss, bce / static_cast<double>(d.batch.size()), 1e-12);
  }
}

TEST(TjLoss, WeightScalesAllPositiveBatches) {
  Rng rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    auto d = random_draw(rng, 4, 8);
    for (auto& y : d.batch.labels) y = 1;
    d.batch.w = 1.0;
    const double base = tj_loss(d.model, d.batch).loss;
    d.batch.w = 2.5;
    EXPECT_NEAR(tj_loss(d.model, d.batch).loss, 2.5 * base, 1e-12);
  }
}

TEST(TjLoss, GradientMatchesFiniteDifferences) {
  Rng rng(34);
  for (int trial = 0; trial < 50; ++trial) {
    auto d = random_draw(rng, 1 + rng.uniform_index(8), 2 + rng.uniform_index(20));
    auto analytic = tj_loss(d.model, d.batch).gradient;
    auto numeric = numeric_gradient(d.model, d.batch);
    ASSERT_EQ(analytic.size(), numeric.size());
    for (std::size_t i = 0; i < analytic.size(); ++i) EXPECT_LT(relative_error(analytic[i], numeric[i]), 1e-5);
  }
}

TEST(TjLoss, ConvexAlongSegments) {
  Rng rng(35);
  for (int trial = 0; trial < 50; ++trial) {
    auto a = random_draw(rng, 4, 10);
    auto b = a;
    for (auto& v : b.model.weights) v = rng.uniform_real(-2.0, 2.0);
    b.model.bias = rng.uniform_real(-2.0, 2.0);
    const double la = tj_loss(a.model, a.batch).loss, lb = tj_loss(b.model, a.batch).loss;
    for (double t : {0.25, 0.5, 0.75}) {
      LinearModel mid = a.model;
      for (std::size_t i = 0; i < mid.weights.size(); ++i) {
        mid.weights[i] = (1 - t) * a.model.weights[i] + t * b.model.weights[i];
      }
      mid.bias = (1 - t) * a.model.bias + t * b.model.bias;
      EXPECT_LE(tj_loss(mid, a.batch).loss, (1 - t) * la + t * lb + 1e-12);
    }
  }
}

TEST(TjLoss, ClippingKeepsLossFinite) {
  LinearModel m;
  m.weights = {1000.0};
  JudgmentBatch b;
  b.features = {{1.0}, {-1.0}};
  b.labels = {0, 1};
  b.w = 1.0;
  auto r = tj_loss(m, b);
  EXPECT_TRUE(std::isfinite(r.loss));
  EXPECT_NEAR(r.loss, -std::log(1e-12), 1e-9);
}

TEST(TrainTj, SeparableToySetReachesPerfectAccuracy) {
  // brute-force separability check: x0 > 0 iff positive
  std::vector<std::vector<double>> xs;
  std::vector<int> ys;
  Rng rng(36);
  for (int i = 0; i < 80; ++i) {
    double x0 = rng.uniform_real(0.2, 1.0) * (i % 4 == 0 ? 1 : -1);
    xs.push_back({x0, rng.uniform_real(-1, 1)});
    ys.push_back(x0 > 0 ? 1 : 0);
  }
  for (std::size_t i = 0; i < xs.size(); ++i) ASSERT_EQ(xs[i][0] > 0, ys[i] == 1);

  TjHyper h;
  h.lr = 0.1;
  h.epochs = 500;
  auto r = train_tj(xs, ys, h);
  EXPECT_EQ(r.w, 3.0);
  EXPECT_LE(r.history.back(), r.history.front());
  for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1] + 1e-12);
  auto m = evaluate_tj(r.model, xs, ys, {});
  EXPECT_EQ(m.accuracy, 1.0);
}

TEST(TrainTj, ZeroModelStartAndSingleClassError) {
  std::vector<std::vector<double>> xs{{1.0}, {2.0}};
  EXPECT_EQ(sigmoid(LinearModel{}.logit(std::vector<double>(kFeatureDim, 1.0))), 0.5);
  EXPECT_THROW(train_tj(xs, std::vector<int>{1, 1}, TjHyper{}), DomainError);
  EXPECT_THROW(train_tj(xs, std::vector<int>{0, 0}, TjHyper{}), DomainError);

  TjHyper h;
  h.epochs = 10;
  auto a = train_tj(xs, std::vector<int>{1, 0}, h);
  auto b = train_tj(xs, std::vector<int>{1, 0}, h);
  EXPECT_EQ(a.model.weights, b.model.weights);
  EXPECT_EQ(a.history.front(), std::numbers::ln2 * 0.5 + std::numbers::ln2 * 0.5);
}

TEST(EvaluateTj, ZeroModelPerfectModelAndAbsentBuckets) {
  std::vector<std::vector<double>> xs{{1.0}, {-1.0}, {-2.0}, {-3.0}};
  std::vector<int> ys{1, 0, 0, 0};
  std::vector<Strategy> st{Strategy::positive, Strategy::shuffle_all, Strategy::shuffle_all, Strategy::insert_foreign};
  LinearModel zero;
  zero.weights = {0.0};
  auto mz = evaluate_tj(zero, xs, ys, st);
  EXPECT_EQ(mz.accuracy, 0.75);  // majority class
  EXPECT_FALSE(mz.precision.has_value());

  LinearModel good;
  good.weights = {5.0};
  auto mg = evaluate_tj(good, xs, ys, st);
  EXPECT_EQ(mg.accuracy, 1.0);
  EXPECT_EQ(mg.precision, 1.0);
  EXPECT_EQ(mg.recall, 1.0);
  EXPECT_EQ(mg.balanced_accuracy, 1.0);
  EXPECT_EQ(mg.per_strategy.at(Strategy::shuffle_all), 1.0);
  EXPECT_FALSE(mg.per_strategy.at(Strategy::shuffle_transitions).has_value());
  auto j = tj_metrics_to_json(mg);
  EXPECT_TRUE(j["per_strategy"]["shuffle_transitions"].is_null());
  EXPECT_NE(tj_metrics_table(mg).find("n/a"), std::string::npos);
}

TEST(TjModelJson, RoundTrip) {
  LinearModel m;
  m.weights.assign(kFeatureDim, 0.0);
  m.weights[3] = 0.125;
  m.bias = -0.5;
  auto j = tj_model_to_json(m, TjHyper{}, 2.0, TjMetrics{});
  auto back = tj_model_from_json(j);
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_EQ(back.bias, m.bias);
  j["feature_version"] = 99;
  EXPECT_THROW(tj_model_from_json(j), InputError);
}
