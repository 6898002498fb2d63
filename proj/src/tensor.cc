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

#include "sal/tensor.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "sal/status.h"

namespace sal {

ImageTensor::ImageTensor(int height, int width, int channels, float fill)
    : height_(height),
      width_(width),
      channels_(channels),
      data_(static_cast<std::size_t>(height) * width * channels, fill) {
  check(height >= 0 && width >= 0 && channels >= 0, ErrorCode::kInvalidInput,
        "negative tensor dimension");
}

ImageTensor::ImageTensor(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  check(height >= 0 && width >= 0 && channels >= 0, ErrorCode::kInvalidInput,
        "negative tensor dimension");
  check(data_.size() == static_cast<std::size_t>(height) * width * channels,
        ErrorCode::kInvalidInput,
        "tensor data length " + std::to_string(data_.size()) + " does not match shape");
}

float ImageTensor::min_value() const {
  if (data_.empty()) return std::numeric_limits<float>::quiet_NaN();
  return *std::min_element(data_.begin(), data_.end());
}

float ImageTensor::max_value() const {
  if (data_.empty()) return std::numeric_limits<float>::quiet_NaN();
  return *std::max_element(data_.begin(), data_.end());
}

ImageTensor concat_channels(const ImageTensor& a, const ImageTensor& b) {
  check(a.height() == b.height() && a.width() == b.width(), ErrorCode::kInvalidInput,
        "concat_channels: spatial size mismatch");
  ImageTensor out(a.height(), a.width(), a.channels() + b.channels());
  for (int r = 0; r < a.height(); ++r) {
    for (int c = 0; c < a.width(); ++c) {
      auto dst = out.pixel(r, c);
      auto pa = a.pixel(r, c);
      auto pb = b.pixel(r, c);
      std::copy(pa.begin(), pa.end(), dst.begin());
      std::copy(pb.begin(), pb.end(), dst.begin() + a.channels());
    }
  }
  return out;
}

ImageTensor max_pool_2x2(const ImageTensor& in) {
  const int oh = in.height() / 2;
  const int ow = in.width() / 2;
  ImageTensor out(oh, ow, in.channels());
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      for (int ch = 0; ch < in.channels(); ++ch) {
        out.at(r, c, ch) = std::max({in.at(2 * r, 2 * c, ch), in.at(2 * r, 2 * c + 1, ch),
                                     in.at(2 * r + 1, 2 * c, ch),
                                     in.at(2 * r + 1, 2 * c + 1, ch)});
      }
    }
  }
  return out;
}

ImageTensor upsample_nearest(const ImageTensor& in, int factor) {
  check(factor >= 1, ErrorCode::kInvalidInput, "upsample factor must be >= 1");
  ImageTensor out(in.height() * factor, in.width() * factor, in.channels());
  for (int r = 0; r < out.height(); ++r) {
    for (int c = 0; c < out.width(); ++c) {
      auto src = in.pixel(r / factor, c / factor);
      std::copy(src.begin(), src.end(), out.pixel(r, c).begin());
    }
  }
  return out;
}

namespace {

// Source taps for half-pixel-centred linear interpolation along one axis.
struct Taps {
  int lo;
  int hi;
  double frac;
};

Taps linear_taps(int dst, int factor, int src_size) {
  double s = (dst + 0.5) / factor - 0.5;
  s = std::clamp(s, 0.0, static_cast<double>(src_size - 1));
  const int lo = static_cast<int>(std::floor(s));
  const int hi = std::min(lo + 1, src_size - 1);
  return {lo, hi, s - lo};
}

}  // namespace

ImageTensor upsample_bilinear(const ImageTensor& in, int factor) {
  check(factor >= 1, ErrorCode::kInvalidInput, "upsample factor must be >= 1");
  check(in.height() > 0 && in.width() > 0, ErrorCode::kInvalidInput, "empty tensor");
  ImageTensor out(in.height() * factor, in.width() * factor, in.channels());
  for (int r = 0; r < out.height(); ++r) {
    const Taps tr = linear_taps(r, factor, in.height());
    for (int c = 0; c < out.width(); ++c) {
      const Taps tc = linear_taps(c, factor, in.width());
      for (int ch = 0; ch < in.channels(); ++ch) {
        const double top = (1 - tc.frac) * in.at(tr.lo, tc.lo, ch) + tc.frac * in.at(tr.lo, tc.hi, ch);
        const double bot = (1 - tc.frac) * in.at(tr.hi, tc.lo, ch) + tc.frac * in.at(tr.hi, tc.hi, ch);
        out.at(r, c, ch) = static_cast<float>((1 - tr.frac) * top + tr.frac * bot);
      }
    }
  }
  return out;
}

}  // namespace sal
