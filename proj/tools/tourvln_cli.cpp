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

// tourvln: build path-instruction datasets from annotated house-tour videos.

#include <CLI11.hpp>

#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "tourvln/pipeline.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool strict = false;
};

tourvln::PipelineConfig resolve_config(const CommonFlags& f) {
  tourvln::PipelineConfig c;
  if (!f.config.empty()) c = tourvln::load_config(f.config);
  if (f.seed) {
    c.seed = *f.seed;
    c.tj.seed = *f.seed;
  }
  if (!f.out.empty()) c.paths.output_dir = f.out;
  if (f.strict) c.strict = true;
  c.validate();
  return c;
}

void print_manifest_summary(const tourvln::Manifest& m) {
  for (const auto& [name, status] : m.stages) std::cout << name << ": " << status << "\n";
  std::cout << "files: " << m.files.size() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convert per-frame house-tour annotations into navigation path-instruction datasets."};
  app.require_subcommand(1);

  CommonFlags flags;
  using StageFn = std::function<tourvln::StageOutputs(const tourvln::PipelineConfig&)>;
  const std::map<std::string, std::pair<std::string, StageFn>> stages{
      {"ingest", {"sparse-sample and filter annotated frames", tourvln::stage_ingest}},
      {"build-trajectories", {"group frames by room and sample trajectories", tourvln::stage_build_trajectories}},
      {"gen-instructions", {"fill templates to make path-instruction pairs", tourvln::stage_gen_instructions}},
      {"make-samples", {"emit judgment, ranking and masked-token samples", tourvln::stage_make_samples}},
      {"split", {"partition videos into train and test", tourvln::stage_split}},
      {"stats", {"compute corpus statistics", tourvln::stage_stats}},
      {"train-tj", {"train and evaluate the trajectory-judgment model", tourvln::stage_train_tj}},
      {"probe-layout", {"run the layout probe on synthetic houses", tourvln::stage_probe_layout}},
  };

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON configuration file");
    sub->add_option("--seed", flags.seed, "global seed (overrides the configuration)");
    sub->add_option("--out", flags.out, "output directory (overrides the configuration)");
    sub->add_flag("--strict", flags.strict, "reject unknown annotation fields");
  };

  std::string chosen;
  for (const auto& [name, entry] : stages) {
    auto* sub = app.add_subcommand(name, entry.first);
    add_common(sub);
    sub->callback([&chosen, name = name] { chosen = name; });
  }
  auto* run_all = app.add_subcommand("run-all", "run every dataset stage and write manifest.json");
  add_common(run_all);
  run_all->callback([&chosen] { chosen = "run-all"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? tourvln::kExitOk : tourvln::kExitConfig;
  }

  tourvln::PipelineConfig config;
  try {
    config = resolve_config(flags);
  } catch (const tourvln::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return tourvln::kExitConfig;
  } catch (const tourvln::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return tourvln::kExitConfig;
  }

  try {
    if (chosen == "run-all") {
      print_manifest_summary(tourvln::run_pipeline(config));
    } else {
      const auto& fn = stages.at(chosen).second;
      for (const auto& f : tourvln::run_stage(chosen, [&] { return fn(config); })) std::cout << f << "\n";
    }
  } catch (const tourvln::StageError& e) {
    std::cerr << "stage failed: " << e.what() << "\n";
    return e.exit_code();
  }
  return tourvln::kExitOk;
}
