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

#include "sal/context.h"

#include <string>

#include "sal/parallel.h"
#include "sal/status.h"

namespace sal {

int ContextCascade::dim() const {
  int d = 0;
  for (const auto& h : hops) d += h.kept_channels;
  return d;
}

void ContextCascade::save(const BlobWriter& w) const {
  w.put_int("num_hops", depth());
  w.put_int("input_size", input_size);
  w.put_int("input_channels", input_channels);
  for (int u = 0; u < depth(); ++u) hops[u].save(w.sub("hop" + std::to_string(u + 1)));
}

ContextCascade ContextCascade::load(const BlobReader& r) {
  ContextCascade c;
  c.input_size = static_cast<int>(r.integer("input_size"));
  c.input_channels = static_cast<int>(r.integer("input_channels"));
  const auto n = r.integer("num_hops");
  int size = c.input_size;
  for (int u = 0; u < n; ++u) {
    c.hops.push_back(HopUnit::load(r.sub("hop" + std::to_string(u + 1))));
    size -= c.hops.back().bank.shape.kernel_h - 1;
    c.sizes.push_back(size);
  }
  return c;
}

ContextCascade fit_cascade(std::span<const ImageTensor> images, const CascadeConfig& config) {
  check(!images.empty(), ErrorCode::kDegenerateInput, "empty training set");
  check(config.num_hops >= 1, ErrorCode::kInvalidConfig, "cascade needs at least one hop");
  ContextCascade cascade;
  cascade.input_size = images.front().height();
  cascade.input_channels = images.front().channels();
  for (const auto& img : images) {
    check(img.height() == cascade.input_size && img.width() == cascade.input_size &&
              img.channels() == cascade.input_channels,
          ErrorCode::kInvalidInput, "cascade training images must share one square shape");
  }
  check(cascade.input_size - 2 * config.num_hops >= 1, ErrorCode::kTooSmall,
        "input too small for the requested number of hops");

  std::vector<ImageTensor> maps(images.begin(), images.end());
  double parent_energy = 1.0;
  for (int u = 0; u < config.num_hops; ++u) {
    HopUnit hop = fit_hop(maps, 3, Padding::kNone, config.hop, parent_energy, config.seed + u);
    parent_energy = hop.forwarded_energy();
    if (u + 1 < config.num_hops) {
      parallel_for(maps.size(), [&](std::size_t i) { maps[i] = apply_hop(maps[i], hop); });
    }
    cascade.sizes.push_back(cascade.input_size - 2 * (u + 1));
    cascade.hops.push_back(std::move(hop));
  }
  return cascade;
}

ContextCascade fit_cascade(const LabeledDataset& train, const CascadeConfig& config) {
  check(train.size() > 0, ErrorCode::kDegenerateInput, "empty training set");
  const auto idx = balanced_indices(train.labels, train.num_classes(), config.fit_images, config.seed);
  std::vector<ImageTensor> subset;
  subset.reserve(idx.size());
  for (auto i : idx) subset.push_back(train.images[i]);
  return fit_cascade(subset, config);
}

std::vector<ImageTensor> apply_cascade(const ImageTensor& img, const ContextCascade& cascade) {
  check(cascade.depth() > 0, ErrorCode::kNotFitted, "cascade has no hops");
  check(img.height() == cascade.input_size && img.width() == cascade.input_size &&
            img.channels() == cascade.input_channels,
        ErrorCode::kInvalidInput,
        "cascade expects " + std::to_string(cascade.input_size) + "x" +
            std::to_string(cascade.input_size) + "x" + std::to_string(cascade.input_channels) +
            " input");
  std::vector<ImageTensor> outs;
  outs.reserve(cascade.hops.size());
  const ImageTensor* cur = &img;
  for (const auto& hop : cascade.hops) {
    outs.push_back(apply_hop(*cur, hop));
    cur = &outs.back();
  }
  return outs;
}

ContextGrid extract_context(const ImageTensor& img, const ContextCascade& cascade) {
  const auto outs = apply_cascade(img, cascade);
  const int g = cascade.grid_size();
  ContextGrid grid;
  grid.features = ImageTensor(g, g, cascade.dim());
  int begin = 0;
  for (int u = 0; u < cascade.depth(); ++u) {
    const int off = cascade.offset(u);
    const int c = outs[u].channels();
    check(off >= 0 && off + g <= outs[u].height(), ErrorCode::kInvalidInput,
          "hop " + std::to_string(u + 1) + " does not cover the deepest grid");
    grid.slice_begin.push_back(begin);
    for (int i = 0; i < g; ++i) {
      for (int j = 0; j < g; ++j) {
        auto src = outs[u].pixel(i + off, j + off);
        std::copy(src.begin(), src.end(), grid.features.pixel(i, j).begin() + begin);
      }
    }
    begin += c;
  }
  return grid;
}

}  // namespace sal
