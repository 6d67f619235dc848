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

// File-based pipeline stages, configuration, and the run manifest.
//
// Every stage reads its inputs from the configured paths or from earlier
// outputs in the output directory, and writes line-delimited JSON back there.
// Randomness is drawn from substreams keyed by (seed, stage, video or pair id),
// so outputs depend only on inputs, configuration and seed.

#include <openssl/evp.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tourvln/annotation.hpp"
#include "tourvln/errors.hpp"
#include "tourvln/format.hpp"
#include "tourvln/instruction.hpp"
#include "tourvln/layout_probe.hpp"
#include "tourvln/rng.hpp"
#include "tourvln/samples.hpp"
#include "tourvln/stats.hpp"
#include "tourvln/tj_learner.hpp"
#include "tourvln/trajectory.hpp"

namespace tourvln {

namespace fs = std::filesystem;

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

struct PipelinePaths {
  fs::path annotations;
  fs::path templates;
  fs::path registry;  // empty: built-in default list
  fs::path output_dir = "out";
};

struct PipelineConfig {
  PipelinePaths paths;
  double rate_hz = 0.5;
  TrajectoryConfig trajectory;
  int trajectories_per_video = 4;
  StrategyCounts negatives;
  int negatives_epoch = 0;  // > 0 regenerates negatives with an epoch-specific stream
  std::size_t ranking_candidates = 3;
  double p_mask = 0.15;
  double split_fraction = 0.95;
  std::uint64_t seed = 42;
  bool strict = false;
  TjHyper tj;
  ProbeConfig probe;

  void validate() const {
    if (!(rate_hz > 0.0)) throw ConfigError("rate_hz", "must be positive");
    trajectory.validate();
    if (trajectories_per_video < 1) throw ConfigError("trajectories_per_video", "must be >= 1");
    if (negatives.shuffle_transitions < 0 || negatives.shuffle_all < 0 || negatives.insert_foreign < 0) {
      throw ConfigError("negatives_per_strategy", "counts must be >= 0");
    }
    if (negatives_epoch < 0) throw ConfigError("negatives_epoch", "must be >= 0");
    if (!(p_mask > 0.0 && p_mask < 1.0)) throw ConfigError("p_mask", "must lie in (0, 1)");
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw ConfigError("split_fraction", "must lie in (0, 1)");
    if (!(tj.lr > 0.0)) throw ConfigError("tj.lr", "must be positive");
    if (tj.epochs < 1) throw ConfigError("tj.epochs", "must be >= 1");
    if (!(tj.w_fixed > 0.0)) throw ConfigError("tj.w", "must be positive");
    if (!(probe.hyper.lr > 0.0)) throw ConfigError("probe.lr", "must be positive");
    if (probe.hyper.epochs < 1) throw ConfigError("probe.epochs", "must be >= 1");
    if (probe.rules != "star-sectors" && probe.rules != "star-random") {
      throw ConfigError("probe.rules", "must be star-sectors or star-random");
    }
  }
};

namespace detail {

template <typename T>
T config_get(const Json& j, const char* key, const std::string& prefix) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(prefix + key, "wrong type");
  }
}

inline void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& prefix) {
  for (const auto& [k, _] : j.items()) {
    if (!known.count(k)) throw ConfigError(prefix + k, "unknown configuration key");
  }
}

inline std::pair<int, int> range_field(const Json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    throw ConfigError(key, "must be a two-element integer array [lo, hi]");
  }
  return {v[0].get<int>(), v[1].get<int>()};
}

}  // namespace detail

/// Reads a JSON configuration. Relative paths resolve against `base_dir`.
/// Unknown keys and out-of-range values raise ConfigError naming the field.
inline PipelineConfig config_from_json(const Json& j, const fs::path& base_dir = {}) {
  using detail::config_get;
  if (!j.is_object()) throw ConfigError("<root>", "configuration must be a JSON object");
  detail::reject_unknown(j,
                         {"paths", "rate_hz", "merge_window", "k_range", "r_range", "shape_order",
                          "trajectories_per_video", "negatives_per_strategy", "negatives_epoch",
                          "ranking_candidates", "p_mask", "split_fraction", "seed", "strict", "tj", "probe"},
                         "");
  PipelineConfig c;
  auto resolve = [&](const std::string& p) -> fs::path {
    if (p.empty()) return {};
    fs::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    detail::reject_unknown(p, {"annotations", "templates", "registry", "output_dir"}, "paths.");
    if (p.contains("annotations")) c.paths.annotations = resolve(config_get<std::string>(p, "annotations", "paths."));
    if (p.contains("templates")) c.paths.templates = resolve(config_get<std::string>(p, "templates", "paths."));
    if (p.contains("registry")) c.paths.registry = resolve(config_get<std::string>(p, "registry", "paths."));
    if (p.contains("output_dir")) c.paths.output_dir = resolve(config_get<std::string>(p, "output_dir", "paths."));
  }
  if (j.contains("rate_hz")) c.rate_hz = config_get<double>(j, "rate_hz", "");
  if (j.contains("merge_window")) {
    int m = config_get<int>(j, "merge_window", "");
    if (m < 1) throw ConfigError("merge_window", "must be >= 1");
    c.trajectory.merge_window = static_cast<std::size_t>(m);
  }
  if (j.contains("k_range")) std::tie(c.trajectory.k_min, c.trajectory.k_max) = detail::range_field(j, "k_range");
  if (j.contains("r_range")) std::tie(c.trajectory.r_min, c.trajectory.r_max) = detail::range_field(j, "r_range");
  if (j.contains("shape_order")) {
    auto o = config_get<std::string>(j, "shape_order", "");
    if (o == "k_then_r") c.trajectory.order = ShapeOrder::k_then_r;
    else if (o == "r_then_k") c.trajectory.order = ShapeOrder::r_then_k;
    else throw ConfigError("shape_order", "must be k_then_r or r_then_k");
  }
  if (j.contains("trajectories_per_video")) c.trajectories_per_video = config_get<int>(j, "trajectories_per_video", "");
  if (j.contains("negatives_per_strategy")) {
    const auto& n = j.at("negatives_per_strategy");
    detail::reject_unknown(n, {"shuffle_transitions", "shuffle_all", "insert_foreign"}, "negatives_per_strategy.");
    if (n.contains("shuffle_transitions")) c.negatives.shuffle_transitions = config_get<int>(n, "shuffle_transitions", "negatives_per_strategy.");
    if (n.contains("shuffle_all")) c.negatives.shuffle_all = config_get<int>(n, "shuffle_all", "negatives_per_strategy.");
    if (n.contains("insert_foreign")) c.negatives.insert_foreign = config_get<int>(n, "insert_foreign", "negatives_per_strategy.");
  }
  if (j.contains("negatives_epoch")) c.negatives_epoch = config_get<int>(j, "negatives_epoch", "");
  if (j.contains("ranking_candidates")) {
    int rc = config_get<int>(j, "ranking_candidates", "");
    if (rc < 0) throw ConfigError("ranking_candidates", "must be >= 0");
    c.ranking_candidates = static_cast<std::size_t>(rc);
  }
  if (j.contains("p_mask")) c.p_mask = config_get<double>(j, "p_mask", "");
  if (j.contains("split_fraction")) c.split_fraction = config_get<double>(j, "split_fraction", "");
  if (j.contains("seed")) c.seed = config_get<std::uint64_t>(j, "seed", "");
  if (j.contains("strict")) c.strict = config_get<bool>(j, "strict", "");
  if (j.contains("tj")) {
    const auto& t = j.at("tj");
    detail::reject_unknown(t, {"lr", "epochs", "w_mode", "w"}, "tj.");
    if (t.contains("lr")) c.tj.lr = config_get<double>(t, "lr", "tj.");
    if (t.contains("epochs")) c.tj.epochs = config_get<int>(t, "epochs", "tj.");
    if (t.contains("w")) c.tj.w_fixed = config_get<double>(t, "w", "tj.");
    if (t.contains("w_mode")) {
      auto m = config_get<std::string>(t, "w_mode", "tj.");
      if (m == "auto") c.tj.w_mode = WeightMode::automatic;
      else if (m == "fixed") c.tj.w_mode = WeightMode::fixed;
      else throw ConfigError("tj.w_mode", "must be auto or fixed");
    }
  }
  if (j.contains("probe")) {
    const auto& p = j.at("probe");
    detail::reject_unknown(p, {"train_houses", "test_houses", "instances_per_house", "lr", "epochs", "negate_logits", "rules"},
                           "probe.");
    if (p.contains("train_houses")) c.probe.train_houses = config_get<std::size_t>(p, "train_houses", "probe.");
    if (p.contains("test_houses")) c.probe.test_houses = config_get<std::size_t>(p, "test_houses", "probe.");
    if (p.contains("instances_per_house")) c.probe.instances_per_house = config_get<std::size_t>(p, "instances_per_house", "probe.");
    if (p.contains("lr")) c.probe.hyper.lr = config_get<double>(p, "lr", "probe.");
    if (p.contains("epochs")) c.probe.hyper.epochs = config_get<int>(p, "epochs", "probe.");
    if (p.contains("negate_logits")) c.probe.hyper.negate_logits = config_get<bool>(p, "negate_logits", "probe.");
    if (p.contains("rules")) c.probe.rules = config_get<std::string>(p, "rules", "probe.");
  }
  c.tj.seed = c.seed;
  c.validate();
  return c;
}

inline PipelineConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const InputError& e) {
    throw ConfigError("--config", e.what());
  }
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("--config", std::string("not valid JSON: ") + e.what());
  }
  return config_from_json(j, path.parent_path());
}

/// Path-free view of the configuration, used for the manifest digest.
inline Json config_fingerprint(const PipelineConfig& c) {
  return {{"rate_hz", c.rate_hz},
          {"merge_window", c.trajectory.merge_window},
          {"k_range", {c.trajectory.k_min, c.trajectory.k_max}},
          {"r_range", {c.trajectory.r_min, c.trajectory.r_max}},
          {"shape_order", c.trajectory.order == ShapeOrder::k_then_r ? "k_then_r" : "r_then_k"},
          {"trajectories_per_video", c.trajectories_per_video},
          {"negatives_per_strategy",
           {{"shuffle_transitions", c.negatives.shuffle_transitions},
            {"shuffle_all", c.negatives.shuffle_all},
            {"insert_foreign", c.negatives.insert_foreign}}},
          {"negatives_epoch", c.negatives_epoch},
          {"ranking_candidates", c.ranking_candidates},
          {"p_mask", c.p_mask},
          {"split_fraction", c.split_fraction},
          {"seed", c.seed},
          {"strict", c.strict}};
}

/// Raised when a stage fails; carries the stage name and the process exit code.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause, int exit_code)
      : Error(stage + ": " + cause), stage_(std::move(stage)), exit_code_(exit_code) {}
  const std::string& stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitStage = 4;

// Output file names, relative to the output directory.
namespace artifact {
inline constexpr const char* kFrames = "frames.jsonl";
inline constexpr const char* kFilterReport = "filter_report.jsonl";
inline constexpr const char* kTrajectories = "trajectories.jsonl";
inline constexpr const char* kPairs = "pairs.jsonl";
inline constexpr const char* kSamples = "samples.jsonl";
inline constexpr const char* kSamplesSummary = "samples_summary.json";
inline constexpr const char* kRanking = "ranking.jsonl";
inline constexpr const char* kMlm = "mlm.jsonl";
inline constexpr const char* kSplit = "split.json";
inline constexpr const char* kStatsJson = "stats.json";
inline constexpr const char* kStatsText = "stats.txt";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kTjModel = "tj_model.json";
inline constexpr const char* kTjMetrics = "tj_metrics.json";
inline constexpr const char* kTjMetricsText = "tj_metrics.txt";
inline constexpr const char* kHouses = "houses.jsonl";
inline constexpr const char* kProbeReport = "probe_report.json";
inline constexpr const char* kProbeReportText = "probe_report.txt";
}  // namespace artifact

/// Files (relative to the output directory) written by one stage.
using StageOutputs = std::vector<std::string>;

namespace detail {

inline RoomTypeRegistry load_registry(const PipelineConfig& c) {
  return c.paths.registry.empty() ? RoomTypeRegistry::defaults() : RoomTypeRegistry::load(c.paths.registry);
}

inline void write_diagnostics(const fs::path& out, const std::string& stage, const std::vector<std::string>& notes,
                              StageOutputs& written) {
  std::vector<Json> rows;
  for (const auto& n : notes) rows.push_back({{"stage", stage}, {"note", n}});
  const std::string name = "diagnostics_" + stage + ".jsonl";
  write_file(out / name, to_jsonl(rows));
  written.push_back(name);
}

inline std::vector<Trajectory> read_trajectories(const fs::path& out, const RoomTypeRegistry& registry) {
  std::vector<Trajectory> ts;
  for (const auto& j : load_jsonl(out / artifact::kTrajectories)) ts.push_back(trajectory_from_json(j, registry));
  return ts;
}

inline std::vector<PathInstructionPair> read_pairs(const fs::path& out) {
  std::vector<PathInstructionPair> ps;
  for (const auto& j : load_jsonl(out / artifact::kPairs)) ps.push_back(pair_from_json(j));
  return ps;
}

inline std::vector<JudgmentSample> read_samples(const fs::path& out) {
  std::vector<JudgmentSample> ss;
  for (const auto& j : load_jsonl(out / artifact::kSamples)) ss.push_back(judgment_from_json(j));
  return ss;
}

inline std::vector<VideoIngest> read_filter_report(const fs::path& out) {
  std::vector<VideoIngest> rows;
  for (const auto& j : load_jsonl(out / artifact::kFilterReport)) {
    VideoIngest v;
    v.video_id = j.at("video_id").get<std::string>();
    v.raw_frames = j.at("raw_frames").get<std::size_t>();
    v.sampled_frames = j.at("sampled_frames").get<std::size_t>();
    v.kept_frames = j.at("kept_frames").get<std::size_t>();
    for (const auto& r : j.at("rejected")) {
      auto reason = r.at("reason").get<std::string>();
      RejectReason rr = reason == "person" ? RejectReason::person
                        : reason == "outdoor" ? RejectReason::outdoor
                                              : RejectReason::no_regions;
      v.rejected.push_back({{v.video_id, r.at("frame_index").get<std::int64_t>()}, rr});
    }
    rows.push_back(std::move(v));
  }
  return rows;
}

inline std::vector<FrameRecord> read_kept_frames(const fs::path& out, const RoomTypeRegistry& registry) {
  std::vector<FrameRecord> frames;
  for (auto& v : load_annotations(out / artifact::kFrames, registry, ParseOptions{true})) {
    for (auto& f : v.frames) frames.push_back(std::move(f));
  }
  return frames;
}

inline std::vector<std::string> trajectory_videos(std::span<const Trajectory> ts) {
  std::set<std::string> ids;
  for (const auto& t : ts) ids.insert(t.video_id);
  return {ids.begin(), ids.end()};
}

}  // namespace detail

/// Sparse-samples and filters every video; writes the kept frames (same schema
/// as the input annotations) and a per-video filter report.
inline StageOutputs stage_ingest(const PipelineConfig& c) {
  const auto registry = detail::load_registry(c);
  std::vector<std::string> notes;
  if (c.paths.annotations.empty()) throw InputError("no annotations path configured");
  auto videos = load_annotations(c.paths.annotations, registry, ParseOptions{c.strict}, &notes);

  std::vector<Json> frames, report;
  for (const auto& v : videos) {
    auto sampled = sparse_sample(v, c.rate_hz);
    auto filt = filter_frames(sampled);
    for (const auto& f : kept_frames(sampled)) frames.push_back(frame_to_json(f));
    Json rejected = Json::array();
    for (const auto& r : filt.rejected) {
      rejected.push_back({{"frame_index", r.frame.frame_index}, {"reason", std::string(to_string(r.reason))}});
    }
    report.push_back({{"video_id", v.video_id},
                      {"raw_frames", v.frames.size()},
                      {"sampled_frames", sampled.size()},
                      {"kept_frames", filt.kept.size()},
                      {"rejected", std::move(rejected)}});
    if (filt.kept.empty()) notes.push_back(v.video_id + ": no frames survive filtering");
  }
  StageOutputs written{artifact::kFrames, artifact::kFilterReport};
  write_file(c.paths.output_dir / artifact::kFrames, to_jsonl(frames));
  write_file(c.paths.output_dir / artifact::kFilterReport, to_jsonl(report));
  detail::write_diagnostics(c.paths.output_dir, "ingest", notes, written);
  return written;
}

inline StageOutputs stage_build_trajectories(const PipelineConfig& c) {
  const auto registry = detail::load_registry(c);
  const auto& out = c.paths.output_dir;
  std::vector<std::string> notes;
  std::vector<Json> rows;
  for (const auto& v : load_annotations(out / artifact::kFrames, registry, ParseOptions{true})) {
    auto groups = group_frames(v.frames);
    if (groups.size() < 2) {
      notes.push_back(v.video_id + ": skipped, " + std::to_string(groups.size()) + " room group(s)");
      continue;
    }
    for (int a = 0; a < c.trajectories_per_video; ++a) {
      char id[16];
      std::snprintf(id, sizeof id, "-t%02d", a);
      const std::string tid = v.video_id + id;
      try {
        auto t = generate_trajectory(v.frames, groups, c.trajectory, derive_seed(c.seed, "trajectories", v.video_id, a), tid);
        rows.push_back(trajectory_to_json(t, registry));
      } catch (const Inapplicable& e) {
        notes.push_back(tid + ": dropped, " + e.what());
      }
    }
  }
  StageOutputs written{artifact::kTrajectories};
  write_file(out / artifact::kTrajectories, to_jsonl(rows));
  detail::write_diagnostics(out, "build-trajectories", notes, written);
  return written;
}

inline StageOutputs stage_gen_instructions(const PipelineConfig& c) {
  const auto registry = detail::load_registry(c);
  const auto& out = c.paths.output_dir;
  if (c.paths.templates.empty()) throw InputError("no templates path configured");
  auto templates = load_templates(c.paths.templates);
  std::vector<std::string> notes;
  for (const auto& r : templates.rejected) notes.push_back("template line " + std::to_string(r.line) + " rejected: " + r.reason);

  std::vector<Json> rows;
  for (const auto& t : detail::read_trajectories(out, registry)) {
    Rng rng(derive_seed(c.seed, "instructions", t.trajectory_id));
    try {
      rows.push_back(pair_to_json(generate_pair(t, templates.templates, registry, rng)));
    } catch (const UnactionablePair& e) {
      notes.push_back(t.trajectory_id + ": dropped, " + e.what());
    }
  }
  StageOutputs written{artifact::kPairs};
  write_file(out / artifact::kPairs, to_jsonl(rows));
  detail::write_diagnostics(out, "gen-instructions", notes, written);
  return written;
}

inline DatasetSplit compute_split(const PipelineConfig& c, std::span<const Trajectory> trajectories) {
  auto videos = detail::trajectory_videos(trajectories);
  if (videos.empty()) throw GenerationError("no videos with trajectories to split");
  return split_videos(videos, c.split_fraction, derive_seed(c.seed, "split"));
}

/// Judgment, ranking and masked-language samples. Donor nodes and ranking
/// distractors come from the same side of the train/test split as the pair.
inline StageOutputs stage_make_samples(const PipelineConfig& c) {
  const auto registry = detail::load_registry(c);
  const auto& out = c.paths.output_dir;
  auto trajectories = detail::read_trajectories(out, registry);
  auto pairs = detail::read_pairs(out);
  std::map<std::string, const Trajectory*> by_id;
  for (const auto& t : trajectories) by_id[t.trajectory_id] = &t;

  const auto split = compute_split(c, trajectories);
  std::vector<Trajectory> side_traj[2];
  std::vector<std::string> side_pool[2];
  for (const auto& t : trajectories) side_traj[split.in_train(t.video_id) ? 0 : 1].push_back(t);
  for (const auto& p : pairs) {
    auto it = by_id.find(p.trajectory_id);
    if (it == by_id.end()) throw InputError("pair " + p.pair_id + " references unknown trajectory");
    side_pool[split.in_train(it->second->video_id) ? 0 : 1].push_back(p.trajectory_id);
  }
  const DonorPool donors[2] = {DonorPool::from_trajectories(side_traj[0]), DonorPool::from_trajectories(side_traj[1])};

  std::vector<std::string> notes;
  std::vector<Json> samples, ranking, mlm;
  std::map<std::string, std::size_t> per_strategy;
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& p : pairs) {
    const Trajectory& t = *by_id.at(p.trajectory_id);
    const int side = split.in_train(t.video_id) ? 0 : 1;

    Rng rng(c.negatives_epoch == 0 ? derive_seed(c.seed, "samples", p.pair_id)
                                   : derive_seed(c.seed, "samples", p.pair_id, c.negatives_epoch));
    std::vector<JudgmentSample> batch{make_positive(p, t)};
    for (auto& s : make_negatives(p, t, donors[side], rng, c.negatives, &notes)) batch.push_back(std::move(s));
    for (const auto& s : batch) {
      samples.push_back(judgment_to_json(s));
      per_strategy[std::string(to_string(s.strategy))] += 1;
      (s.label == 1 ? n_pos : n_neg) += 1;
    }

    Rng rank_rng(derive_seed(c.seed, "ranking", p.pair_id));
    try {
      ranking.push_back(ranking_to_json(make_ranking_set(p, side_pool[side], c.ranking_candidates, rank_rng)));
    } catch (const GenerationError& e) {
      notes.push_back(p.pair_id + ": no ranking sample, " + e.what());
    }

    Rng mlm_rng(derive_seed(c.seed, "mlm", p.pair_id));
    auto tokens = split_whitespace(p.instruction);
    auto m = make_mlm_sample(tokens, c.p_mask, mlm_rng);
    m.sample_id = p.pair_id + "-mlm";
    m.pair_id = p.pair_id;
    mlm.push_back(mlm_to_json(m));
  }

  Json summary = {{"n_pos", n_pos}, {"n_neg", n_neg}, {"per_strategy", per_strategy},
                  {"w", n_pos ? round_sig(static_cast<double>(n_neg) / static_cast<double>(n_pos)) : 1.0}};
  StageOutputs written{artifact::kSamples, artifact::kSamplesSummary, artifact::kRanking, artifact::kMlm};
  write_file(out / artifact::kSamples, to_jsonl(samples));
  write_file(out / artifact::kSamplesSummary, summary.dump(2) + "\n");
  write_file(out / artifact::kRanking, to_jsonl(ranking));
  write_file(out / artifact::kMlm, to_jsonl(mlm));
  detail::write_diagnostics(out, "make-samples", notes, written);
  return written;
}

inline StageOutputs stage_split(const PipelineConfig& c) {
  const auto registry = detail::load_registry(c);
  const auto& out = c.paths.output_dir;
  auto split = compute_split(c, detail::read_trajectories(out, registry));
  StageOutputs written{artifact::kSplit};
  write_file(out / artifact::kSplit, split_to_json(split).dump(2) + "\n");
  detail::write_diagnostics(out, "split", split.warnings, written);
  return written;
}

inline StatsReport stats_from_outputs(const PipelineConfig& c) {
  const auto registry = detail::load_registry(c);
  const auto& out = c.paths.output_dir;
  auto ingest = detail::read_filter_report(out);
  auto frames = detail::read_kept_frames(out, registry);
  auto trajectories = detail::read_trajectories(out, registry);
  auto pairs = detail::read_pairs(out);
  auto samples = detail::read_samples(out);
  DatasetArtifacts a;
  a.registry = &registry;
  a.ingest = ingest;
  a.kept_frames = frames;
  a.trajectories = trajectories;
  a.pairs = pairs;
  a.judgment_samples = samples;
  a.ranking_samples = load_jsonl(out / artifact::kRanking).size();
  a.mlm_samples = load_jsonl(out / artifact::kMlm).size();
  return compute_stats(a);
}

inline StageOutputs stage_stats(const PipelineConfig& c) {
  const ReportFormat formats[] = {ReportFormat::json, ReportFormat::text};
  emit_report(stats_from_outputs(c), c.paths.output_dir, formats);
  return {artifact::kStatsJson, artifact::kStatsText};
}

/// Trains the judgment model on train-split samples and evaluates on test-split ones.
inline StageOutputs stage_train_tj(const PipelineConfig& c) {
  const auto registry = detail::load_registry(c);
  const auto& out = c.paths.output_dir;
  auto trajectories = detail::read_trajectories(out, registry);
  std::map<std::string, const Trajectory*> by_id;
  for (const auto& t : trajectories) by_id[t.trajectory_id] = &t;
  const auto split = compute_split(c, trajectories);

  std::vector<std::vector<double>> xs[2];
  std::vector<int> ys[2];
  std::vector<Strategy> sts[2];
  for (const auto& s : detail::read_samples(out)) {
    auto it = by_id.find(s.trajectory_id);
    if (it == by_id.end()) throw InputError("sample " + s.sample_id + " references unknown trajectory");
    const int side = split.in_train(it->second->video_id) ? 0 : 1;
    xs[side].push_back(featurize(s, *it->second).values);
    ys[side].push_back(s.label);
    sts[side].push_back(s.strategy);
  }
  auto result = train_tj(xs[0], ys[0], c.tj);
  std::vector<std::string> notes;
  const int eval_side = ys[1].empty() ? 0 : 1;
  if (ys[1].empty()) notes.push_back("test split has no samples; metrics are on the training split");
  auto metrics = evaluate_tj(result.model, xs[eval_side], ys[eval_side], sts[eval_side]);

  Json metrics_json = tj_metrics_to_json(metrics);
  metrics_json["evaluated_on"] = eval_side == 1 ? "test" : "train";
  metrics_json["train_loss_first"] = round_sig(result.history.front());
  metrics_json["train_loss_last"] = round_sig(result.history.back());
  StageOutputs written{artifact::kTjModel, artifact::kTjMetrics, artifact::kTjMetricsText};
  write_file(out / artifact::kTjModel, tj_model_to_json(result.model, c.tj, result.w, metrics).dump(2) + "\n");
  write_file(out / artifact::kTjMetrics, metrics_json.dump(2) + "\n");
  write_file(out / artifact::kTjMetricsText, tj_metrics_table(metrics));
  detail::write_diagnostics(out, "train-tj", notes, written);
  return written;
}

inline StageOutputs stage_probe_layout(const PipelineConfig& c) {
  const auto registry = detail::load_registry(c);
  const auto& out = c.paths.output_dir;
  std::vector<SynthHouse> houses;
  auto rep = run_layout_probe(c.probe, c.seed, registry, &houses);
  std::vector<Json> rows;
  for (const auto& h : houses) rows.push_back(house_to_json(h, registry));
  std::string table = "untrained_acc       " + format_sig(rep.untrained_acc) + "\n" +
                      "trained_acc         " + format_sig(rep.trained_acc) + "\n" +
                      "shuffled_label_acc  " + format_sig(rep.shuffled_label_acc) + "\n" +
                      "n_train             " + std::to_string(rep.n_train) + "\n" +
                      "n_test              " + std::to_string(rep.n_test) + "\n" +
                      "p_value             " + format_sig(rep.p_value) + "\n";
  write_file(out / artifact::kHouses, to_jsonl(rows));
  write_file(out / artifact::kProbeReport, probe_report_to_json(rep).dump(2) + "\n");
  write_file(out / artifact::kProbeReportText, table);
  return {artifact::kHouses, artifact::kProbeReport, artifact::kProbeReportText};
}

/// Runs `fn` and rethrows any failure as a StageError with the right exit code.
inline StageOutputs run_stage(const std::string& name, const std::function<StageOutputs()>& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError& e) {
    throw StageError(name, e.what(), kExitConfig);
  } catch (const InputError& e) {
    throw StageError(name, e.what(), kExitInput);
  } catch (const ParseError& e) {
    throw StageError(name, e.what(), kExitInput);
  } catch (const std::exception& e) {
    throw StageError(name, e.what(), kExitStage);
  }
}

struct ManifestEntry {
  std::string path;
  std::size_t bytes = 0;
  std::string sha256;
};

struct Manifest {
  std::uint64_t seed = 0;
  std::string config_sha256;
  std::vector<std::pair<std::string, std::string>> stages;  // (name, status)
  std::vector<ManifestEntry> files;                         // sorted by path
  bool complete = false;
  std::optional<std::string> failed_stage;
  std::optional<std::string> error;
};

inline Json manifest_to_json(const Manifest& m) {
  Json j;
  j["pipeline"] = "tourvln";
  j["seed"] = m.seed;
  j["config_sha256"] = m.config_sha256;
  Json stages = Json::array();
  for (const auto& [n, s] : m.stages) stages.push_back({{"name", n}, {"status", s}});
  j["stages"] = std::move(stages);
  j["complete"] = m.complete;
  if (m.failed_stage) j["failed_stage"] = *m.failed_stage;
  if (m.error) j["error"] = *m.error;
  Json files = Json::array();
  for (const auto& f : m.files) files.push_back({{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
  j["files"] = std::move(files);
  return j;
}

inline const std::vector<std::string>& pipeline_stage_names() {
  static const std::vector<std::string> names{"ingest", "build-trajectories", "gen-instructions",
                                              "make-samples", "split", "stats"};
  return names;
}

/// Runs ingest -> trajectories -> pairs -> samples -> split -> stats and writes
/// manifest.json with a digest of every file written. On failure the manifest
/// is still written with complete = false, then the StageError is rethrown.
inline Manifest run_pipeline(const PipelineConfig& c) {
  c.validate();
  const std::map<std::string, std::function<StageOutputs()>> stages{
      {"ingest", [&] { return stage_ingest(c); }},
      {"build-trajectories", [&] { return stage_build_trajectories(c); }},
      {"gen-instructions", [&] { return stage_gen_instructions(c); }},
      {"make-samples", [&] { return stage_make_samples(c); }},
      {"split", [&] { return stage_split(c); }},
      {"stats", [&] { return stage_stats(c); }},
  };
  Manifest m;
  m.seed = c.seed;
  m.config_sha256 = sha256_hex(config_fingerprint(c).dump());
  std::set<std::string> written;
  std::optional<StageError> failure;
  for (const auto& name : pipeline_stage_names()) {
    if (failure) {
      m.stages.emplace_back(name, "not_run");
      continue;
    }
    try {
      for (auto& f : run_stage(name, stages.at(name))) written.insert(f);
      m.stages.emplace_back(name, "ok");
    } catch (const StageError& e) {
      failure = e;
      m.stages.emplace_back(name, "failed");
      m.failed_stage = e.stage();
      m.error = e.what();
    }
  }
  for (const auto& rel : written) {
    const auto p = c.paths.output_dir / rel;
    if (!fs::exists(p)) continue;
    const std::string content = read_file(p);
    m.files.push_back({rel, content.size(), sha256_hex(content)});
  }
  m.complete = !failure;
  write_file(c.paths.output_dir / artifact::kManifest, manifest_to_json(m).dump(2) + "\n");
  if (failure) throw *failure;
  return m;
}

}  // namespace tourvln
