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

#include "sal/config.h"

#include <fstream>

#include "sal/status.h"

namespace sal {

NLOHMANN_JSON_SERIALIZE_ENUM(Upsampling, {{Upsampling::kNearest, "nearest"}, {Upsampling::kBilinear, "bilinear"}})
NLOHMANN_JSON_SERIALIZE_ENUM(BoxMode, {{BoxMode::kTightest, "tightest"}, {BoxMode::kOccupancy, "occupancy"}})

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(HopOptions, energy_threshold, max_channels, min_global_energy)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(CascadeConfig, num_hops, hop, fit_images, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GbdtConfig, rounds, max_depth, learning_rate, l2,
                                                min_child_hessian, max_bins, row_subsample,
                                                binning_sample, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LogisticConfig, l2, max_iterations, gradient_tolerance, history)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Step1Config, cascade, gbdt, max_pixel_samples, window, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RefinementFeatureConfig, hop, fit_images, upsampling, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Step2Config, features, gbdt, margin, subset_images,
                                                max_samples, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SalConfig, t_att, median_radius, min_side, output_size, box_mode)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LocalizerConfig, step1, step2, step3)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ImageClassifierConfig, use_pqr, pixel, meta, second_round,
                                                hard_threshold, min_hard_samples)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RunConfig, data, out, seed, experiment, pairs,
                                                resolved_sets, fig9_pairs, smoke, viz, train_per_class,
                                                test_per_class, sal, stage1, branch, ensemble,
                                                holdout_fraction)

PairModelConfig RunConfig::pair_config() const {
  PairModelConfig p;
  p.sal = sal;
  p.branch = branch;
  p.ensemble = ensemble;
  p.holdout_fraction = holdout_fraction;
  p.seed = seed + 41;
  return p;
}

std::vector<std::pair<int, int>> default_table1_pairs() { return {{3, 5}, {0, 8}, {1, 9}, {4, 7}}; }

void apply_smoke_preset(RunConfig* cfg) {
  cfg->smoke = true;
  cfg->train_per_class = 1000;
  cfg->test_per_class = 200;
  for (Step1Config* s : {&cfg->sal.step1, &cfg->stage1.pixel, &cfg->branch.pixel}) {
    s->cascade.fit_images = 500;
    s->gbdt.rounds = 60;
    s->max_pixel_samples = 50000;
  }
  cfg->sal.step2.gbdt.rounds = 60;
  cfg->sal.step2.features.fit_images = 500;
  cfg->sal.step2.subset_images = 2000;
  cfg->sal.step2.max_samples = 50000;
}

void derive_seeds(RunConfig* cfg) {
  const std::uint64_t s = cfg->seed * 1000;
  cfg->sal.step1.seed = s + 1;
  cfg->sal.step1.cascade.seed = s + 2;
  cfg->sal.step1.gbdt.seed = s + 3;
  cfg->sal.step2.seed = s + 4;
  cfg->sal.step2.features.seed = s + 5;
  cfg->sal.step2.gbdt.seed = s + 6;
  for (auto [c, base] : {std::pair{&cfg->stage1, s + 10}, std::pair{&cfg->branch, s + 20}}) {
    c->pixel.seed = base;
    c->pixel.cascade.seed = base + 1;
    c->pixel.gbdt.seed = base + 2;
  }
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j = cfg;
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  try {
    return j.get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidConfig, std::string("bad run config: ") + e.what());
  }
}

void write_config(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ofstream out(path);
  check(static_cast<bool>(out), ErrorCode::kIoError, "cannot write " + path.string());
  out << to_json(cfg).dump(2) << "\n";
}

RunConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  check(static_cast<bool>(in), ErrorCode::kIoError, "cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidConfig, std::string("bad config file: ") + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace sal
