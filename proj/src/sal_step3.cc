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

#include "sal/sal_step3.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "sal/status.h"

namespace sal {

std::size_t BinaryMask::count() const {
  std::size_t n = 0;
  for (auto b : bits) n += b;
  return n;
}

BBox window_box(const AttentionWindow& w) { return {w.top(), w.left(), w.size, w.size}; }

void SalConfig::validate() const {
  check(t_att > 0.0 && t_att < 1.0, ErrorCode::kInvalidConfig, "t_att must lie in (0, 1)");
  check(median_radius >= 0, ErrorCode::kInvalidConfig, "median radius must be >= 0");
  check(min_side >= 1, ErrorCode::kInvalidConfig, "min_side must be >= 1");
  check(output_size >= 1, ErrorCode::kInvalidConfig, "output size must be >= 1");
}

BinaryMask binarize(const AttentionMap& map, double t_att) {
  BinaryMask mask(map.height, map.width);
  for (std::size_t i = 0; i < map.values.size(); ++i) mask.bits[i] = map.values[i] >= t_att ? 1 : 0;
  return mask;
}

BinaryMask median_clean(const BinaryMask& mask, int radius) {
  check(radius >= 0, ErrorCode::kInvalidConfig, "median radius must be >= 0");
  const int h = mask.height;
  const int w = mask.width;
  // Summed-area table with a zero border row/column.
  std::vector<int> sat(static_cast<std::size_t>(h + 1) * (w + 1), 0);
  auto s = [&](int r, int c) -> int& { return sat[static_cast<std::size_t>(r) * (w + 1) + c]; };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) s(r + 1, c + 1) = mask.at(r, c) + s(r, c + 1) + s(r + 1, c) - s(r, c);
  }
  BinaryMask out(h, w);
  for (int r = 0; r < h; ++r) {
    const int r0 = std::max(0, r - radius);
    const int r1 = std::min(h, r + radius + 1);
    for (int c = 0; c < w; ++c) {
      const int c0 = std::max(0, c - radius);
      const int c1 = std::min(w, c + radius + 1);
      const int fg = s(r1, c1) - s(r0, c1) - s(r1, c0) + s(r0, c0);
      const int n = (r1 - r0) * (c1 - c0);
      out.at(r, c) = 2 * fg >= n ? 1 : 0;
    }
  }
  return out;
}

std::optional<BBox> tightest_bbox(const BinaryMask& mask) {
  int top = mask.height;
  int left = mask.width;
  int bottom = -1;
  int right = -1;
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) {
      if (!mask.at(r, c)) continue;
      top = std::min(top, r);
      bottom = std::max(bottom, r);
      left = std::min(left, c);
      right = std::max(right, c);
    }
  }
  if (bottom < 0) return std::nullopt;
  return BBox{top, left, bottom - top + 1, right - left + 1};
}

std::optional<BBox> occupancy_bbox(const BinaryMask& mask) {
  const int h = mask.height;
  const int w = mask.width;
  struct Component {
    int size = 0;
    int top, left, bottom, right;
  };
  std::vector<Component> comps;
  std::vector<int> label(static_cast<std::size_t>(h) * w, -1);
  std::vector<int> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!mask.at(r, c) || label[static_cast<std::size_t>(r) * w + c] >= 0) continue;
      const int id = static_cast<int>(comps.size());
      Component comp{0, r, c, r, c};
      stack.assign(1, r * w + c);
      label[static_cast<std::size_t>(r) * w + c] = id;
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int pr = p / w;
        const int pc = p % w;
        ++comp.size;
        comp.top = std::min(comp.top, pr);
        comp.bottom = std::max(comp.bottom, pr);
        comp.left = std::min(comp.left, pc);
        comp.right = std::max(comp.right, pc);
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = pr + dr;
            const int nc = pc + dc;
            if (nr < 0 || nc < 0 || nr >= h || nc >= w) continue;
            auto& l = label[static_cast<std::size_t>(nr) * w + nc];
            if (mask.at(nr, nc) && l < 0) {
              l = id;
              stack.push_back(nr * w + nc);
            }
          }
        }
      }
      comps.push_back(comp);
    }
  }
  if (comps.empty()) return std::nullopt;
  std::stable_sort(comps.begin(), comps.end(),
                   [](const Component& a, const Component& b) { return a.size > b.size; });
  std::optional<BBox> best;
  double best_rate = -1.0;
  std::size_t best_fg = 0;
  Component acc = comps.front();
  acc.size = 0;
  for (const auto& comp : comps) {
    acc.top = std::min(acc.top, comp.top);
    acc.left = std::min(acc.left, comp.left);
    acc.bottom = std::max(acc.bottom, comp.bottom);
    acc.right = std::max(acc.right, comp.right);
    const BBox box{acc.top, acc.left, acc.bottom - acc.top + 1, acc.right - acc.left + 1};
    std::size_t fg = 0;
    for (int r = box.top; r < box.bottom(); ++r) {
      for (int c = box.left; c < box.right(); ++c) fg += mask.at(r, c);
    }
    const double rate = static_cast<double>(fg) / (static_cast<double>(box.height) * box.width);
    if (rate > best_rate + 1e-12 || (std::abs(rate - best_rate) <= 1e-12 && fg > best_fg)) {
      best = box;
      best_rate = rate;
      best_fg = fg;
    }
  }
  return best;
}

namespace {

// round_half_up(num / den) for positive integers.
int div_round_half_up(long long num, long long den) { return static_cast<int>((2 * num + den) / (2 * den)); }

int place(double center, int extent, int limit) {
  const int start = static_cast<int>(std::floor(center - extent / 2.0 + 0.5));
  return std::clamp(start, 0, std::max(0, limit - extent));
}

}  // namespace

BBox regularize_bbox(const BBox& box, int min_side, int image_h, int image_w) {
  check(box.height >= 1 && box.width >= 1, ErrorCode::kInvalidInput, "box has an empty side");
  check(min_side >= 1, ErrorCode::kInvalidConfig, "min_side must be >= 1");
  const int longest = std::max(box.height, box.width);
  if (longest >= min_side) return box;
  BBox out;
  out.height = std::min(image_h, div_round_half_up(static_cast<long long>(box.height) * min_side, longest));
  out.width = std::min(image_w, div_round_half_up(static_cast<long long>(box.width) * min_side, longest));
  out.top = place(box.top + box.height / 2.0, out.height, image_h);
  out.left = place(box.left + box.width / 2.0, out.width, image_w);
  return out;
}

double lanczos3(double x) {
  constexpr double a = 3.0;
  x = std::abs(x);
  if (x < 1e-12) return 1.0;
  if (x >= a) return 0.0;
  const double px = std::numbers::pi * x;
  return a * std::sin(px) * std::sin(px / a) / (px * px);
}

namespace {

struct FilterRow {
  int first = 0;
  std::vector<double> weights;
};

// Normalised Lanczos taps for each output sample along one axis.
std::vector<FilterRow> lanczos_filters(int in_size, int out_size) {
  const double scale = static_cast<double>(in_size) / out_size;
  const double stretch = std::max(1.0, scale);
  const double support = 3.0 * stretch;
  std::vector<FilterRow> rows(out_size);
  for (int o = 0; o < out_size; ++o) {
    const double center = (o + 0.5) * scale - 0.5;
    const int first = static_cast<int>(std::floor(center - support)) + 1;
    const int last = static_cast<int>(std::ceil(center + support)) - 1;
    FilterRow& fr = rows[o];
    fr.first = first;
    double total = 0.0;
    for (int j = first; j <= last; ++j) {
      const double wgt = lanczos3((j - center) / stretch);
      fr.weights.push_back(wgt);
      total += wgt;
    }
    for (double& wgt : fr.weights) wgt /= total;
  }
  return rows;
}

}  // namespace

ImageTensor crop_resize(const ImageTensor& img, const BBox& box, int output_size) {
  check(box.within(img.height(), img.width()), ErrorCode::kInvalidInput, "crop box outside the image");
  check(output_size >= 1, ErrorCode::kInvalidConfig, "output size must be >= 1");
  const int ch = img.channels();
  std::vector<float> lo(ch, std::numeric_limits<float>::max());
  std::vector<float> hi(ch, std::numeric_limits<float>::lowest());
  for (int r = box.top; r < box.bottom(); ++r) {
    for (int c = box.left; c < box.right(); ++c) {
      for (int k = 0; k < ch; ++k) {
        lo[k] = std::min(lo[k], img.at(r, c, k));
        hi[k] = std::max(hi[k], img.at(r, c, k));
      }
    }
  }
  const auto fx = lanczos_filters(box.width, output_size);
  const auto fy = lanczos_filters(box.height, output_size);
  auto clamp_idx = [](int i, int n) { return std::clamp(i, 0, n - 1); };

  // Horizontal pass: box.height x output_size.
  std::vector<double> tmp(static_cast<std::size_t>(box.height) * output_size * ch, 0.0);
  for (int r = 0; r < box.height; ++r) {
    for (int o = 0; o < output_size; ++o) {
      double* dst = tmp.data() + (static_cast<std::size_t>(r) * output_size + o) * ch;
      const auto& f = fx[o];
      for (std::size_t t = 0; t < f.weights.size(); ++t) {
        const int c = box.left + clamp_idx(f.first + static_cast<int>(t), box.width);
        for (int k = 0; k < ch; ++k) dst[k] += f.weights[t] * img.at(box.top + r, c, k);
      }
    }
  }
  ImageTensor out(output_size, output_size, ch);
  for (int o = 0; o < output_size; ++o) {
    const auto& f = fy[o];
    for (int c = 0; c < output_size; ++c) {
      for (int k = 0; k < ch; ++k) {
        double v = 0.0;
        for (std::size_t t = 0; t < f.weights.size(); ++t) {
          const int r = clamp_idx(f.first + static_cast<int>(t), box.height);
          v += f.weights[t] * tmp[(static_cast<std::size_t>(r) * output_size + c) * ch + k];
        }
        out.at(o, c, k) = std::clamp(static_cast<float>(v), lo[k], hi[k]);
      }
    }
  }
  return out;
}

}  // namespace sal
