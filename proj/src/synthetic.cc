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

#include "sal/synthetic.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "sal/status.h"

namespace sal {
namespace {

// Inside-test for class shapes in object-local coordinates u, v in [-1, 1].
bool inside(int cls, double u, double v) {
  const double r = std::sqrt(u * u + v * v);
  switch (cls) {
    case 0: return r <= 1.0;
    case 1: return std::abs(u) <= 0.9 && std::abs(v) <= 0.9;
    case 2: return v >= -1.0 && v <= 1.0 && std::abs(u) <= (v + 1.0) * 0.5;
    case 3: return (std::abs(u) <= 0.3 && std::abs(v) <= 1.0) || (std::abs(v) <= 0.3 && std::abs(u) <= 1.0);
    case 4: return r <= 1.0 && r >= 0.55;
    case 5: return std::abs(u) + std::abs(v) <= 1.0;
    case 6: return u * u + 4.0 * v * v <= 1.0;
    case 7: return std::abs(std::abs(u) - std::abs(v)) <= 0.3 && std::abs(u) <= 1.0;
    case 8: return r <= 1.0 && v >= 0.0;
    default: return std::max(std::abs(u), std::abs(v)) <= 1.0 && std::max(std::abs(u), std::abs(v)) >= 0.6;
  }
}

// Classes 3/5 and 1/9 share colours so that some pairs are only separable by shape.
constexpr std::array<std::array<double, 3>, 10> kColours = {{
    {220, 60, 50},  {60, 120, 220}, {240, 200, 40}, {200, 120, 60}, {60, 190, 90},
    {200, 120, 60}, {170, 70, 200}, {240, 240, 240}, {40, 200, 210}, {60, 120, 220},
}};

ImageTensor render(int cls, const BBox& box, std::mt19937_64& rng, const SyntheticConfig& cfg) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::array<double, 3> bg0;
  std::array<double, 3> bg1;
  for (int k = 0; k < 3; ++k) {
    bg0[k] = 60.0 + 80.0 * unit(rng);
    bg1[k] = 60.0 + 80.0 * unit(rng);
  }
  const double angle = 2.0 * M_PI * unit(rng);
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  std::array<double, 3> fg;
  for (int k = 0; k < 3; ++k) fg[k] = kColours[cls][k] + 20.0 * gauss(rng);

  ImageTensor img(kCifarSide, kCifarSide, kCifarChannels);
  const double cy = box.top + (box.height - 1) / 2.0;
  const double cx = box.left + (box.width - 1) / 2.0;
  const double hy = box.height / 2.0;
  const double hx = box.width / 2.0;
  for (int r = 0; r < kCifarSide; ++r) {
    for (int c = 0; c < kCifarSide; ++c) {
      const double t = 0.5 + ((c - 15.5) * dx + (r - 15.5) * dy) / 45.0;
      const bool obj = inside(cls, (c - cx) / hx, (r - cy) / hy);
      for (int k = 0; k < 3; ++k) {
        double v = obj ? fg[k] + 0.4 * cfg.noise * gauss(rng)
                       : (1.0 - t) * bg0[k] + t * bg1[k] + cfg.noise * gauss(rng);
        img.at(r, c, k) = static_cast<float>(std::clamp(std::round(v), 0.0, 255.0));
      }
    }
  }
  return img;
}

}  // namespace

SyntheticSplit make_synthetic(const SyntheticConfig& cfg, Split split) {
  check(cfg.min_object >= 4 && cfg.min_object <= cfg.max_object && cfg.max_object <= kCifarSide,
        ErrorCode::kInvalidConfig, "bad synthetic object size range");
  const std::size_t per_class = split == Split::kTrain ? cfg.train_per_class : cfg.test_per_class;
  std::mt19937_64 rng(cfg.seed * 2 + (split == Split::kTrain ? 0 : 1));
  std::vector<int> labels;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (int k = 0; k < 10; ++k) labels.push_back(k);
  }
  std::shuffle(labels.begin(), labels.end(), rng);

  SyntheticSplit out;
  out.data.class_names = cifar10_class_names();
  out.data.labels = labels;
  std::uniform_int_distribution<int> side(cfg.min_object, cfg.max_object);
  for (int cls : labels) {
    BBox box;
    box.height = side(rng);
    box.width = cls == 6 ? std::min(kCifarSide, box.height + 4) : box.height;
    box.top = std::uniform_int_distribution<int>(0, kCifarSide - box.height)(rng);
    box.left = std::uniform_int_distribution<int>(0, kCifarSide - box.width)(rng);
    out.data.images.push_back(render(cls, box, rng, cfg));
    out.objects.push_back(box);
  }
  return out;
}

void write_synthetic_cifar(const std::filesystem::path& dir, const SyntheticConfig& cfg) {
  std::filesystem::create_directories(dir);
  const SyntheticSplit train = make_synthetic(cfg, Split::kTrain);
  const std::size_t n = train.data.size();
  for (std::size_t b = 0; b < 5; ++b) {
    const std::size_t lo = n * b / 5;
    const std::size_t hi = n * (b + 1) / 5;
    write_cifar10_batch(dir / ("data_batch_" + std::to_string(b + 1) + ".bin"),
                        std::span(train.data.images).subspan(lo, hi - lo),
                        std::span(train.data.labels).subspan(lo, hi - lo));
  }
  const SyntheticSplit test = make_synthetic(cfg, Split::kTest);
  write_cifar10_batch(dir / "test_batch.bin", test.data.images, test.data.labels);
}

}  // namespace sal
