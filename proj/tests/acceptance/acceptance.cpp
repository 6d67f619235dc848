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

// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "test_support.hpp"
#include "tj_oracles.hpp"
#include "tourvln/pipeline.hpp"
#include "tourvln/synth_corpus.hpp"

using namespace tourvln;
using namespace testing_support;

namespace {

const fs::path kData = TOURVLN_DATA_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

PipelineConfig mini_config(const fs::path& out) {
  auto c = load_config(kData / "config.json");
  c.paths.output_dir = out;
  return c;
}

Outcome construction_conformance() {
  const auto dir = temp_dir("acc_construction");
  auto c = mini_config(dir);
  stage_ingest(c);
  stage_build_trajectories(c);
  const auto registry = detail::load_registry(c);
  auto trajectories = detail::read_trajectories(dir, registry);
  std::set<std::string> videos;
  for (const auto& v : load_annotations(c.paths.annotations, detail::load_registry(c))) videos.insert(v.video_id);
  std::size_t bad = 0;
  for (const auto& t : trajectories) {
    const int k = t.length();
    int rooms = 0, transitions = 0;
    bool ordered = true;
    double last_room = -1.0, last_any = -1.0;
    for (const auto& n : t.nodes) {
      if (n.kind == NodeKind::room) {
        ++rooms;
        if (n.timestamp_s <= last_room) ordered = false;
        last_room = n.timestamp_s;
      } else {
        ++transitions;
      }
      if (n.timestamp_s < last_any) ordered = false;
      last_any = n.timestamp_s;
    }
    const bool ok = k >= 4 && k <= 7 && rooms >= 2 && rooms <= 7 && rooms == t.room_node_count &&
                    transitions == k - rooms && ordered;
    bad += !ok;
  }
  fs::remove_all(dir);
  return {videos.size() >= 10 && !trajectories.empty() && bad == 0,
          std::to_string(trajectories.size()) + " trajectories from " + std::to_string(videos.size()) +
              " videos, " + std::to_string(bad) + " violations"};
}

Outcome entropy_oracle() {
  Rng rng(101);
  std::size_t agree = 0;
  const std::size_t groups = 1000;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t n = 1 + rng.uniform_index(12);
    std::vector<FrameRecord> frames;
    for (std::size_t i = 0; i < n; ++i) {
      // repeat an earlier distribution now and then to force ties
      RoomProbs p = (i > 0 && rng.bernoulli(0.25)) ? frames[rng.uniform_index(i)].room_probs : random_probs(rng);
      frames.push_back(frame("v", static_cast<std::int64_t>(i), static_cast<double>(i), p));
    }
    NodeGroup group{"v", 0, 0, n, 0, static_cast<std::int64_t>(n - 1)};
    // brute force: entropy as -sum p ln p over nonzero entries, strict improvement only
    std::size_t best = 0;
    long double best_h = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      long double h = 0.0L;
      for (double v : frames[i].room_probs) {
        if (v > 0.0) h -= static_cast<long double>(v) * std::log(static_cast<long double>(v));
      }
      if (i == 0 || h < best_h - 1e-15L) {
        best = i;
        best_h = h;
      }
    }
    agree += select_keyframe(group, frames) == best;
  }
  return {agree == groups, std::to_string(agree) + "/" + std::to_string(groups) + " agree"};
}

Outcome loss_exactness() {
  using namespace tj_oracles;
  Rng rng(202);
  double worst_loss = 0.0;
  for (int b = 0; b < 1000; ++b) {
    auto d = random_draw(rng, 1 + rng.uniform_index(40), 1 + rng.uniform_index(64), 3.0);
    if (b % 2) d.batch.w = rng.uniform_real(0.1, 10.0);
    const double ours = tj_loss(d.model, d.batch).loss;
    const double ref = direct_loss(d.model.weights, d.model.bias, d.batch.features, d.batch.labels, d.batch.w);
    worst_loss = std::max(worst_loss, std::abs(ours - ref));
  }
  double worst_grad = 0.0;
  for (int b = 0; b < 100; ++b) {
    auto d = random_draw(rng, 1 + rng.uniform_index(12), 2 + rng.uniform_index(30));
    auto analytic = tj_loss(d.model, d.batch).gradient;
    auto numeric = numeric_gradient(d.model, d.batch);
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      worst_grad = std::max(worst_grad, relative_error(analytic[i], numeric[i]));
    }
  }
  return {worst_loss <= 1e-12 && worst_grad <= 1e-5,
          "max loss diff " + fmt("%.2e", worst_loss) + ", max grad rel err " + fmt("%.2e", worst_grad)};
}

Outcome tj_separability() {
  const auto dir = temp_dir("acc_tj");
  const auto registry = RoomTypeRegistry::defaults();
  SynthCorpusConfig sc;
  sc.videos = 200;
  sc.id_prefix = "sep";
  std::vector<Json> rows;
  for (const auto& f : synthesize_corpus(sc, 2024, registry)) rows.push_back(frame_to_json(f));
  write_file(dir / "annotations.jsonl", to_jsonl(rows));
  std::string templates;
  for (const auto& t : default_templates()) templates += t + "\n";
  write_file(dir / "templates.txt", templates);

  PipelineConfig c;
  c.paths.annotations = dir / "annotations.jsonl";
  c.paths.templates = dir / "templates.txt";
  c.paths.output_dir = dir / "out";
  c.split_fraction = 0.7;  // enough held-out videos for a stable estimate
  c.seed = 11;
  c.tj.seed = 11;
  c.tj.lr = 1.0;
  c.tj.epochs = 2000;
  stage_ingest(c);
  stage_build_trajectories(c);
  stage_gen_instructions(c);
  stage_make_samples(c);
  stage_train_tj(c);
  auto m = Json::parse(read_file(c.paths.output_dir / artifact::kTjMetrics));
  fs::remove_all(dir);
  const double acc = m["accuracy"].get<double>();
  const double bal = m["balanced_accuracy"].is_null() ? 0.0 : m["balanced_accuracy"].get<double>();
  const bool held_out = m["evaluated_on"] == "test";
  return {held_out && acc >= 0.90 && bal >= 0.90, "held-out accuracy " + fmt("%.4f", acc) + ", balanced " + fmt("%.4f", bal) +
                                       ", n_test " + std::to_string(m["n"].get<int>())};
}

Outcome probe_directionality() {
  ProbeConfig cfg;
  auto rep = run_layout_probe(cfg, 42);
  const double chance = 1.0 / 12.0;
  const bool ok = rep.n_test >= 2000 && std::abs(rep.untrained_acc - chance) <= 0.03 && rep.trained_acc >= 0.80 &&
                  rep.p_value < 0.01;
  return {ok, "untrained " + fmt("%.4f", rep.untrained_acc) + ", trained " + fmt("%.4f", rep.trained_acc) +
                  ", shuffled " + fmt("%.4f", rep.shuffled_label_acc) + ", p " + fmt("%.3g", rep.p_value) +
                  ", n_test " + std::to_string(rep.n_test)};
}

Outcome negative_contracts() {
  const auto dir = temp_dir("acc_negatives");
  auto c = mini_config(dir);
  stage_ingest(c);
  stage_build_trajectories(c);
  stage_gen_instructions(c);
  const auto registry = detail::load_registry(c);
  auto trajectories = detail::read_trajectories(dir, registry);
  auto pairs = detail::read_pairs(dir);
  fs::remove_all(dir);
  std::map<std::string, const Trajectory*> by_id;
  for (const auto& t : trajectories) by_id[t.trajectory_id] = &t;
  const auto donors = DonorPool::from_trajectories(trajectories);

  std::size_t negatives = 0, identity = 0, moved_rooms = 0, same_video = 0;
  std::map<Strategy, std::size_t> per;
  const std::size_t generations = 10000;
  for (std::size_t g = 0; g < generations; ++g) {
    const auto& p = pairs[g % pairs.size()];
    const auto& t = *by_id.at(p.trajectory_id);
    Rng rng(derive_seed(99, "acceptance", p.pair_id, g));
    for (const auto& s : make_negatives(p, t, donors, rng)) {
      ++negatives;
      per[s.strategy] += 1;
      identity += is_identity(s.node_order) || s.label != 0;
      if (s.strategy == Strategy::shuffle_transitions) {
        for (auto slot : slots_of_kind(t, NodeKind::room)) moved_rooms += s.node_order[slot] != static_cast<int>(slot);
      }
      if (s.strategy == Strategy::insert_foreign) {
        for (const auto& f : s.foreign_nodes) same_video += f.donor_video_id == t.video_id;
      }
    }
  }
  const bool ok = identity == 0 && moved_rooms == 0 && same_video == 0 && per[Strategy::shuffle_transitions] > 0 &&
                  per[Strategy::shuffle_all] > 0 && per[Strategy::insert_foreign] > 0;
  return {ok, std::to_string(negatives) + " negatives, identity " + std::to_string(identity) + ", moved room slots " +
                  std::to_string(moved_rooms) + ", same-video donors " + std::to_string(same_video)};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TOURVLN_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome run_all_determinism() {
  const std::string cfg = (kData / "config.json").string();
  const auto a = temp_dir("acc_det_a"), b = temp_dir("acc_det_b"), d = temp_dir("acc_det_c");
  const int ra = run_cli("run-all --config " + cfg + " --out " + a.string());
  const int rb = run_cli("run-all --config " + cfg + " --out " + b.string());
  const int rd = run_cli("run-all --config " + cfg + " --seed 43 --out " + d.string());
  bool ok = ra == 0 && rb == 0 && rd == 0;
  std::string detail = "exit codes " + std::to_string(ra) + "/" + std::to_string(rb) + "/" + std::to_string(rd);
  if (ok) {
    const auto ma = read_file(a / artifact::kManifest), mb = read_file(b / artifact::kManifest),
               md = read_file(d / artifact::kManifest);
    ok = ma == mb && ma != md;
    detail += std::string(", same seed ") + (ma == mb ? "identical" : "differs") + ", other seed " +
              (ma != md ? "differs" : "identical");
  }
  for (const auto& p : {a, b, d}) fs::remove_all(p);
  return {ok, detail};
}

Outcome split_conformance() {
  std::vector<std::string> ids;
  for (int i = 0; i < 40; ++i) ids.push_back("video" + std::to_string(i));
  const std::set<std::string> all(ids.begin(), ids.end());
  std::size_t bad = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    auto split = split_videos(ids, 0.95, derive_seed(s, "split"));
    std::set<std::string> train(split.train_videos.begin(), split.train_videos.end());
    std::set<std::string> test(split.test_videos.begin(), split.test_videos.end());
    std::set<std::string> both = train;
    both.insert(test.begin(), test.end());
    std::size_t overlap = train.size() + test.size() - both.size();
    bad += !(train.size() == 38 && test.size() == 2 && overlap == 0 && both == all);
  }
  return {bad == 0, "1000 splits, " + std::to_string(bad) + " nonconforming"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"construction_parameters", 10.0, construction_conformance},
      {"keyframe_entropy_oracle", 5.0, entropy_oracle},
      {"tj_loss_exactness", 30.0, loss_exactness},
      {"tj_separability", 60.0, tj_separability},
      {"layout_probe_directionality", 60.0, probe_directionality},
      {"negative_strategy_contracts", 10.0, negative_contracts},
      {"run_all_determinism", 30.0, run_all_determinism},
      {"split_conformance", 1e9, split_conformance},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s %-28s %s; %.2fs%s\n", pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str(), secs,
                in_time ? "" : " (over time budget)");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
