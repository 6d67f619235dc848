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

// Writes the bundled mini-corpus: synthetic annotations, templates, the room
// registry and a pipeline configuration that points at them.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "tourvln/format.hpp"
#include "tourvln/synth_corpus.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic mini-corpus."};
  std::string out = "data/mini_corpus";
  std::uint64_t seed = 7;
  std::size_t videos = 12;
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--videos", videos, "number of videos")->check(CLI::Range(std::size_t{1}, std::size_t{100000}));
  CLI11_PARSE(app, argc, argv);

  try {
    const auto registry = tourvln::RoomTypeRegistry::defaults();
    tourvln::SynthCorpusConfig cfg;
    cfg.videos = videos;
    std::vector<tourvln::Json> rows;
    for (const auto& f : tourvln::synthesize_corpus(cfg, seed, registry)) rows.push_back(tourvln::frame_to_json(f));
    tourvln::write_file(std::string(out) + "/annotations.jsonl", tourvln::to_jsonl(rows));

    std::string templates;
    for (const auto& t : tourvln::default_templates()) templates += t + "\n";
    tourvln::write_file(std::string(out) + "/templates.txt", templates);

    std::string labels;
    for (const auto& l : registry.labels()) labels += l + "\n";
    tourvln::write_file(std::string(out) + "/registry.txt", labels);

    tourvln::Json config = {
        {"paths",
         {{"annotations", "annotations.jsonl"},
          {"templates", "templates.txt"},
          {"registry", "registry.txt"},
          {"output_dir", "out"}}},
        {"rate_hz", 0.5},
        {"merge_window", 4},
        {"k_range", {4, 7}},
        {"r_range", {2, 7}},
        {"trajectories_per_video", 4},
        {"negatives_per_strategy", {{"shuffle_transitions", 1}, {"shuffle_all", 1}, {"insert_foreign", 1}}},
        {"ranking_candidates", 3},
        {"p_mask", 0.15},
        {"split_fraction", 0.95},
        {"seed", 42},
        {"strict", true}};
    tourvln::write_file(std::string(out) + "/config.json", config.dump(2) + "\n");
    std::cout << rows.size() << " frames in " << videos << " videos written to " << out << "\n";
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
