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
#include <memory>
#include <span>
#include <vector>

#include "sal/cifar.h"
#include "sal/context.h"
#include "sal/gbdt.h"
#include "sal/soft_classifier.h"

namespace sal {

// Spatial grid of per-class probability vectors.
struct SoftDecisionGrid {
  int grid_h = 0;
  int grid_w = 0;
  int num_classes = 0;
  std::vector<double> probs;  // row-major, class fastest

  SoftDecisionGrid() = default;
  SoftDecisionGrid(int h, int w, int k) : grid_h(h), grid_w(w), num_classes(k), probs(static_cast<std::size_t>(h) * w * k, 0.0) {}

  std::span<double> at(int r, int c) {
    return {probs.data() + (static_cast<std::size_t>(r) * grid_w + c) * num_classes,
            static_cast<std::size_t>(num_classes)};
  }
  std::span<const double> at(int r, int c) const {
    return {probs.data() + (static_cast<std::size_t>(r) * grid_w + c) * num_classes,
            static_cast<std::size_t>(num_classes)};
  }
};

// Square preliminary attention window of odd side `size`.
struct AttentionWindow {
  int center_row = 0;
  int center_col = 0;
  int size = 19;

  int top() const { return center_row - (size - 1) / 2; }
  int left() const { return center_col - (size - 1) / 2; }
  int bottom() const { return center_row + (size - 1) / 2; }  // inclusive
  int right() const { return center_col + (size - 1) / 2; }   // inclusive
  bool contains(int r, int c) const { return r >= top() && r <= bottom() && c >= left() && c <= right(); }
  bool fits(int height, int width) const {
    return top() >= 0 && left() >= 0 && bottom() < height && right() < width;
  }
  bool operator==(const AttentionWindow&) const = default;
};

// 2x2 max-pool of the context grid (14x14 -> 7x7); odd sizes are rejected.
ContextGrid pool_context(const ContextGrid& grid);

// Pixel samples taken from pooled context grids: one row per (image, cell).
struct PixelTrainingSet {
  RowMatrixF features;
  std::vector<int> labels;
  std::vector<std::uint32_t> image_of_row;
};

// Every pooled cell of every image labelled with its image's class; when that
// exceeds max_samples, a seeded class-balanced subset is kept.
PixelTrainingSet collect_pixel_samples(const ContextCascade& cascade,
                                       std::span<const ImageTensor> images,
                                       std::span<const int> labels, int num_classes,
                                       std::size_t max_samples, std::uint64_t seed);

std::unique_ptr<SoftClassifier> train_pixel_classifier(const PixelTrainingSet& samples,
                                                       int num_classes, const GbdtConfig& config);

// Classifies every cell of a (pooled) context grid.
SoftDecisionGrid predict_soft_decisions(const ContextGrid& grid, const SoftClassifier& classifier);

// Channel-wise bilinear upsampling by `factor` with half-pixel centres (the
// align-corners-false convention); each output vector is renormalised.
SoftDecisionGrid upsample_bilinear(const SoftDecisionGrid& sd, int factor = 2);

// Picks the most confident cell (largest max-class probability, smallest
// row-major index on ties) and centres a WxW window on the matching image
// pixel (cell + offset). Windows that would leave the image are translated
// back inside; for W = 19 on 32x32 input this never happens.
AttentionWindow select_window(const SoftDecisionGrid& sd14, int window = 19, int offset = 9,
                              int image_size = 32);

struct Step1Config {
  CascadeConfig cascade;
  GbdtConfig gbdt;
  std::size_t max_pixel_samples = 200000;
  int window = 19;
  std::uint64_t seed = 11;
};

// Fitted cascade + pixel classifier; produces soft decisions and windows.
class Step1Model {
 public:
  static Step1Model fit(const LabeledDataset& train, const Step1Config& config);

  int num_classes() const { return classifier_->num_classes(); }
  int window_size() const { return window_; }
  const ContextCascade& cascade() const { return cascade_; }
  const SoftClassifier& classifier() const { return *classifier_; }

  SoftDecisionGrid pooled_decisions(const ImageTensor& img) const;  // 7x7xK
  SoftDecisionGrid decisions(const ImageTensor& img) const;         // 14x14xK
  AttentionWindow select(const ImageTensor& img) const;

  void save(const BlobWriter& w) const;
  static Step1Model load(const BlobReader& r);

 private:
  ContextCascade cascade_;
  std::unique_ptr<SoftClassifier> classifier_;
  int window_ = 19;
};

}  // namespace sal
