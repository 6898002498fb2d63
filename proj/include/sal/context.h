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
#include <span>
#include <vector>

#include "sal/cifar.h"
#include "sal/saab.h"

namespace sal {

struct CascadeConfig {
  int num_hops = 9;
  HopOptions hop;
  std::size_t fit_images = 2000;  // class-balanced subset used to fit the hops
  std::uint64_t seed = 1;
};

// Unpadded 3x3 hops stacked without pooling, so every hop output remains
// spatially aligned with the deepest one by a fixed centre offset.
struct ContextCascade {
  std::vector<HopUnit> hops;
  std::vector<int> sizes;  // output side length per hop
  int input_size = 32;
  int input_channels = 3;

  int depth() const { return static_cast<int>(hops.size()); }
  int grid_size() const { return sizes.empty() ? 0 : sizes.back(); }
  int dim() const;
  // Offset of the deepest-grid origin inside hop u's output (u is 0-based).
  int offset(int hop) const { return (sizes[hop] - grid_size()) / 2; }

  void save(const BlobWriter& w) const;
  static ContextCascade load(const BlobReader& r);
};

// Receptive field side of hop u (1-based) in a stride-1 3x3 cascade.
inline constexpr int receptive_field(int hop) { return 1 + 2 * hop; }

// Per-position feature pyramid on the deepest hop's grid.
struct ContextGrid {
  ImageTensor features;           // grid x grid x dim
  std::vector<int> slice_begin;   // first channel of each hop's slice

  int grid_size() const { return features.height(); }
  int dim() const { return features.channels(); }
};

ContextCascade fit_cascade(std::span<const ImageTensor> images, const CascadeConfig& config);
ContextCascade fit_cascade(const LabeledDataset& train, const CascadeConfig& config);

// Output of every hop for one image, shallowest first.
std::vector<ImageTensor> apply_cascade(const ImageTensor& img, const ContextCascade& cascade);

ContextGrid extract_context(const ImageTensor& img, const ContextCascade& cascade);

}  // namespace sal
