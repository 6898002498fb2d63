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
#include <optional>
#include <vector>

#include "sal/sal_step1.h"
#include "sal/sal_step2.h"
#include "sal/tensor.h"

namespace sal {

struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1, row-major

  BinaryMask() = default;
  BinaryMask(int h, int w, std::uint8_t fill = 0) : height(h), width(w), bits(static_cast<std::size_t>(h) * w, fill) {}

  std::uint8_t at(int r, int c) const { return bits[static_cast<std::size_t>(r) * width + c]; }
  std::uint8_t& at(int r, int c) { return bits[static_cast<std::size_t>(r) * width + c]; }
  std::size_t count() const;
  bool operator==(const BinaryMask&) const = default;
};

// Axis-aligned box; rows [top, top + height), cols [left, left + width).
struct BBox {
  int top = 0;
  int left = 0;
  int height = 1;
  int width = 1;

  int bottom() const { return top + height; }
  int right() const { return left + width; }
  bool within(int image_h, int image_w) const {
    return top >= 0 && left >= 0 && height >= 1 && width >= 1 && bottom() <= image_h && right() <= image_w;
  }
  bool operator==(const BBox&) const = default;
};

BBox window_box(const AttentionWindow& w);

enum class BoxMode { kTightest, kOccupancy };

struct SalConfig {
  double t_att = 0.5;
  int median_radius = 3;
  int min_side = 16;
  int output_size = 32;
  BoxMode box_mode = BoxMode::kTightest;

  void validate() const;
};

// mask = 1 where map >= t_att.
BinaryMask binarize(const AttentionMap& map, double t_att);

// Majority vote over the (2r+1)^2 window clipped to the image; a tie counts as
// foreground.
BinaryMask median_clean(const BinaryMask& mask, int radius);

// Smallest box holding every foreground pixel; nullopt for an empty mask.
std::optional<BBox> tightest_bbox(const BinaryMask& mask);

// Alternative reading of occupancy pooling: among boxes spanning the k largest
// 8-connected components (k = 1..n), the one with the highest foreground
// fraction; ties prefer more foreground.
std::optional<BBox> occupancy_bbox(const BinaryMask& mask);

// Boxes whose longer side is below min_side are scaled about their centre to
// a longer side of min_side (aspect kept, half-up rounding per side), then
// shifted the least amount that brings them inside the image.
BBox regularize_bbox(const BBox& box, int min_side, int image_h, int image_w);

// Lanczos-3 kernel, sinc(x) sinc(x / 3) on |x| < 3.
double lanczos3(double x);

// Crops the box and resamples it to output_size x output_size with a
// separable Lanczos-3 filter (stretched when shrinking). Samples outside the
// crop clamp to its edge; results are clamped to the crop's per-channel range.
ImageTensor crop_resize(const ImageTensor& img, const BBox& box, int output_size);

}  // namespace sal
