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
#include <vector>

#include "sal/cifar.h"
#include "sal/sal_step3.h"

namespace sal {

// Generator for small CIFAR-format fixtures: one coloured, class-specific
// shape per image on a textured background, at a random position and scale.
struct SyntheticConfig {
  std::size_t train_per_class = 100;
  std::size_t test_per_class = 20;
  int min_object = 10;  // object side range in pixels
  int max_object = 18;
  double noise = 18.0;  // background noise std-dev, 0..255 scale
  std::uint64_t seed = 7;
};

struct SyntheticSplit {
  LabeledDataset data;
  std::vector<BBox> objects;  // true object box per image
};

SyntheticSplit make_synthetic(const SyntheticConfig& config, Split split);

// Writes data_batch_1..5.bin and test_batch.bin under `dir`.
void write_synthetic_cifar(const std::filesystem::path& dir, const SyntheticConfig& config);

}  // namespace sal
