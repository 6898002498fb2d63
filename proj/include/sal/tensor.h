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

#include <cstddef>
#include <span>
#include <vector>

namespace sal {

// Dense H x W x C array, row-major with the channel as the fastest index.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int height, int width, int channels, float fill = 0.0f);
  ImageTensor(int height, int width, int channels, std::vector<float> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(int row, int col, int ch) { return data_[index(row, col, ch)]; }
  float at(int row, int col, int ch) const { return data_[index(row, col, ch)]; }

  std::span<float> pixel(int row, int col) {
    return {data_.data() + index(row, col, 0), static_cast<std::size_t>(channels_)};
  }
  std::span<const float> pixel(int row, int col) const {
    return {data_.data() + index(row, col, 0), static_cast<std::size_t>(channels_)};
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  float min_value() const;
  float max_value() const;

  bool operator==(const ImageTensor&) const = default;

 private:
  std::size_t index(int row, int col, int ch) const {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + ch;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

// Concatenates two tensors of equal spatial size along the channel axis.
ImageTensor concat_channels(const ImageTensor& a, const ImageTensor& b);

// 2x2 max-pool with stride 2; odd trailing rows/columns are dropped.
ImageTensor max_pool_2x2(const ImageTensor& in);

// Integer-factor nearest-neighbour upsampling: out(r, c) = in(r / f, c / f).
ImageTensor upsample_nearest(const ImageTensor& in, int factor);

// Integer-factor bilinear upsampling with half-pixel centres and edge clamping.
ImageTensor upsample_bilinear(const ImageTensor& in, int factor);

}  // namespace sal
