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

#include "sal/localizer.h"
#include "sal/tensor.h"

namespace sal {

// 8-bit RGB raster.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB

  RgbImage() = default;
  RgbImage(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, 0) {}
  void set(int r, int c, std::uint8_t red, std::uint8_t green, std::uint8_t blue);
};

void write_png(const std::filesystem::path& path, const RgbImage& img);

// Reads any PNG as 8-bit RGB into a 0..255 tensor; io-error when unreadable.
ImageTensor read_png(const std::filesystem::path& path);

// Rounds and clamps a 3-channel tensor in 0..255 into a raster.
RgbImage to_rgb(const ImageTensor& img);

// Input with the preliminary window, heat-map overlay of the attention map,
// cleaned mask with the final box, and the rescaled crop, side by side.
RgbImage four_panel(const ImageTensor& input, const LocalizationResult& result, int scale = 4);

}  // namespace sal
