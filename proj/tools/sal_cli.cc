/*
 * Copyright 2026 The SAL Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line entry point: fit, localize, evaluate, make-fixture.

#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sal/commands.h"
#include "sal/status.h"
#include "sal/synthetic.h"

namespace {

// "3:5,cat:dog" -> {{3, 5}, {3, 5}}
std::vector<std::pair<int, int>> parse_pairs(const std::string& text) {
  std::vector<std::pair<int, int>> out;
  std::stringstream ss(text);
  std::string item;
  auto cls = [](const std::string& s) {
    int k = sal::cifar10_class_index(s);
    if (k < 0) {
      try {
        k = std::stoi(s);
      } catch (const std::exception&) {
        sal::fail(sal::ErrorCode::kInvalidClass, "unknown class '" + s + "'");
      }
    }
    sal::check(k >= 0 && k < 10, sal::ErrorCode::kInvalidClass, "class out of range: " + s);
    return k;
  };
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    sal::check(colon != std::string::npos, sal::ErrorCode::kInvalidConfig, "pairs look like a:b,c:d");
    out.emplace_back(cls(item.substr(0, colon)), cls(item.substr(colon + 1)));
  }
  return out;
}

struct Options {
  std::string config_file;
  std::string pairs;
  bool smoke = false;
  sal::RunConfig run;
};

void add_run_flags(CLI::App* app, Options* o) {
  app->add_option("--config", o->config_file, "RunConfig JSON to start from");
  app->add_option("--data", o->run.data, "CIFAR-10 binary directory");
  app->add_option("--out", o->run.out, "output directory");
  app->add_option("--seed", o->run.seed, "base random seed");
  app->add_option("--experiment", o->run.experiment, "table1 | table2 | fig9 | all | none");
  app->add_option("--pairs", o->pairs, "class pairs for table1, e.g. cat:dog,0:8");
  app->add_option("--resolved-sets", o->run.resolved_sets, "confusion sets resolved in table2")->delimiter(',');
  app->add_option("--train-per-class", o->run.train_per_class, "training images per class (0 = all)");
  app->add_option("--test-per-class", o->run.test_per_class, "test images per class (0 = all)");
  app->add_flag("--smoke", o->smoke, "reduced-scale preset");
  app->add_flag("--viz", o->run.viz, "write four-panel PNGs");
}

// Flags given on the command line override the config file and smoke preset.
sal::RunConfig resolve(const Options& o, CLI::App* app) {
  sal::RunConfig cfg = o.config_file.empty() ? sal::RunConfig{} : sal::read_config(o.config_file);
  if (o.smoke) sal::apply_smoke_preset(&cfg);
  auto given = [&](const char* flag) { return app->count(flag) > 0; };
  if (given("--data")) cfg.data = o.run.data;
  if (given("--out")) cfg.out = o.run.out;
  if (given("--seed")) cfg.seed = o.run.seed;
  if (given("--experiment")) cfg.experiment = o.run.experiment;
  if (given("--resolved-sets")) cfg.resolved_sets = o.run.resolved_sets;
  if (given("--train-per-class")) cfg.train_per_class = o.run.train_per_class;
  if (given("--test-per-class")) cfg.test_per_class = o.run.test_per_class;
  if (given("--viz")) cfg.viz = true;
  if (!o.pairs.empty()) cfg.pairs = parse_pairs(o.pairs);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Statistical attention localization and two-stage classification"};
  app.require_subcommand(1);

  Options fit_opts;
  auto* fit = app.add_subcommand("fit", "fit a pipeline");
  add_run_flags(fit, &fit_opts);

  Options eval_opts;
  std::string eval_pipeline;
  auto* evaluate = app.add_subcommand("evaluate", "run an experiment on the test split");
  add_run_flags(evaluate, &eval_opts);
  evaluate->add_option("--pipeline", eval_pipeline, "fitted pipeline file")->required();

  std::string loc_pipeline;
  std::vector<std::string> loc_inputs;
  std::string loc_out = "out";
  bool loc_viz = false;
  auto* localize = app.add_subcommand("localize", "localize images with a fitted pipeline");
  localize->add_option("--pipeline", loc_pipeline, "fitted pipeline file")->required();
  localize->add_option("--images", loc_inputs, "CIFAR batch files, CIFAR directories or PNGs")->required();
  localize->add_option("--out", loc_out, "output directory");
  localize->add_flag("--viz", loc_viz, "write four-panel PNGs");

  sal::SyntheticConfig fixture;
  std::string fixture_out;
  auto* make_fixture = app.add_subcommand("make-fixture", "write a synthetic CIFAR-format dataset");
  make_fixture->add_option("--out", fixture_out, "output directory")->required();
  make_fixture->add_option("--train-per-class", fixture.train_per_class);
  make_fixture->add_option("--test-per-class", fixture.test_per_class);
  make_fixture->add_option("--seed", fixture.seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit) {
      sal::cmd_fit(resolve(fit_opts, fit));
    } else if (*evaluate) {
      for (const auto& record : sal::cmd_evaluate(eval_pipeline, resolve(eval_opts, evaluate))) {
        std::cout << sal::format_results_table(record) << "\n";
      }
    } else if (*localize) {
      std::vector<std::filesystem::path> inputs(loc_inputs.begin(), loc_inputs.end());
      return sal::cmd_localize(loc_pipeline, inputs, loc_out, loc_viz);
    } else if (*make_fixture) {
      sal::write_synthetic_cifar(fixture_out, fixture);
    }
  } catch (const sal::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
