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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sal/classify.h"
#include "sal/localizer.h"

namespace sal {

// Everything a command needs to reproduce a run. Serialized next to every
// results file.
struct RunConfig {
  std::string data;                       // CIFAR-10 binary directory
  std::string out = "out";                // output directory
  std::uint64_t seed = 1;
  std::string experiment = "table1";      // table1 | table2 | fig9 | none
  std::vector<std::pair<int, int>> pairs;  // table1 pairs; empty = default four
  std::vector<int> resolved_sets = {25, 45};
  int fig9_pairs = 15;                    // confusion pairs scanned for fig9
  bool smoke = false;
  bool viz = false;
  std::size_t train_per_class = 0;        // 0 = all
  std::size_t test_per_class = 0;

  LocalizerConfig sal;             // global localizer and every pair localizer
  ImageClassifierConfig stage1;    // ten-class baseline
  ImageClassifierConfig branch;    // per-pair full / attention branches
  LogisticConfig ensemble;
  double holdout_fraction = 0.1;

  PairModelConfig pair_config() const;
};

// Default pairwise experiment: cat/dog, airplane/ship, automobile/truck, deer/horse.
std::vector<std::pair<int, int>> default_table1_pairs();

// Reduced-scale preset: 1000 train / 200 test per class, fewer boosting rounds
// and smaller fitting subsets.
void apply_smoke_preset(RunConfig* cfg);

// Spreads `cfg.seed` over every component seed.
void derive_seeds(RunConfig* cfg);

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

void write_config(const std::filesystem::path& path, const RunConfig& cfg);
RunConfig read_config(const std::filesystem::path& path);

}  // namespace sal
