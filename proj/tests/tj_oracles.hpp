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

// Independent reference implementations for the weighted BCE objective.

#include <cmath>
#include <vector>

#include "tourvln/rng.hpp"
#include "tourvln/tj_learner.hpp"

namespace tj_oracles {

using namespace tourvln;

// Direct transcription of the weighted objective with long double accumulation.
inline double direct_loss(const std::vector<double>& weights, double bias, const std::vector<std::vector<double>>& xs,
                          const std::vector<int>& ys, double w) {
  long double sum = 0.0L;
  for (std::size_t n = 0; n < xs.size(); ++n) {
    long double z = bias;
    for (std::size_t i = 0; i < weights.size(); ++i) z += static_cast<long double>(weights[i]) * xs[n][i];
    // p and 1 - p each from its own exponential, so neither suffers cancellation
    long double p = 1.0L / (1.0L + std::exp(-z));
    long double q = 1.0L / (1.0L + std::exp(z));
    const long double eps = 1e-12L;
    if (p < eps) p = eps;
    if (q < eps) q = eps;
    if (p > 1.0L - eps) p = 1.0L - eps;
    if (q > 1.0L - eps) q = 1.0L - eps;
    sum += ys[n] == 1 ? static_cast<long double>(w) * std::log(p) : std::log(q);
  }
  return static_cast<double>(-sum / static_cast<long double>(xs.size()));
}

struct Draw {
  LinearModel model;
  JudgmentBatch batch;
};

// Random model and batch of dimension d; logits stay moderate so nothing clips.
inline Draw random_draw(Rng& rng, std::size_t d, std::size_t n, double scale = 0.5) {
  Draw out;
  out.model.weights.resize(d);
  for (auto& v : out.model.weights) v = rng.uniform_real(-scale, scale);
  out.model.bias = rng.uniform_real(-scale, scale);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> x(d);
    for (auto& v : x) v = rng.uniform_real(-1.0, 1.0);
    out.batch.features.push_back(std::move(x));
    out.batch.labels.push_back(rng.bernoulli(0.4) ? 1 : 0);
  }
  out.batch.w = auto_weight(out.batch.labels);
  return out;
}

// Central differences with step h over every weight and the bias.
inline std::vector<double> numeric_gradient(const LinearModel& model, const JudgmentBatch& batch, double h = 1e-6) {
  std::vector<double> g;
  LinearModel m = model;
  for (std::size_t i = 0; i <= m.weights.size(); ++i) {
    double& p = i < m.weights.size() ? m.weights[i] : m.bias;
    const double orig = p;
    p = orig + h;
    const double up = tj_loss(m, batch).loss;
    p = orig - h;
    const double down = tj_loss(m, batch).loss;
    p = orig;
    g.push_back((up - down) / (2.0 * h));
  }
  return g;
}

// Relative error with an absolute floor so near-zero components don't blow up.
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
}

}  // namespace tj_oracles
