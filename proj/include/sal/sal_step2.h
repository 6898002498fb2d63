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

#include "sal/gbdt.h"
#include "sal/sal_step1.h"
#include "sal/saab.h"

namespace sal {

struct PixelRef {
  std::uint32_t image = 0;
  std::int32_t row = 0;
  std::int32_t col = 0;
  bool operator==(const PixelRef&) const = default;
};

// Depth of an interior pixel: Chebyshev distance to the window's outer ring
// (0 on the ring itself). Negative outside the window.
int window_depth(const AttentionWindow& w, int row, int col);
// Chebyshev distance from an exterior pixel to the window (1 when adjacent).
// Zero inside the window.
int window_distance(const AttentionWindow& w, int row, int col);

struct RefinementSampleSet {
  std::vector<PixelRef> positives;
  std::vector<PixelRef> negatives;
  int margin = 3;
};

// Positives: pixels with depth >= margin inside each window. Negatives: a
// seeded uniform draw of exterior pixels farther than `margin` from the
// window, one per positive. If an image has fewer eligible exterior pixels
// than positives, its positives are subsampled to keep the classes equal.
RefinementSampleSet sample_refinement_pixels(std::span<const AttentionWindow> windows,
                                             int image_h, int image_w, int margin,
                                             std::uint64_t seed);

enum class Upsampling { kNearest, kBilinear };

struct RefinementFeatureConfig {
  HopOptions hop;
  std::size_t fit_images = 2000;
  Upsampling upsampling = Upsampling::kNearest;
  std::uint64_t seed = 21;
};

// Four reflect-padded hops; a 2x2 max-pool after hop 2 halves the resolution
// for hops 3-4, whose output is upsampled x2 and concatenated after hop 2's.
class RefinementFeatures {
 public:
  static RefinementFeatures fit(std::span<const ImageTensor> images,
                                const RefinementFeatureConfig& config);

  // One feature vector per input pixel: [hop2 | up(hop4)].
  ImageTensor extract(const ImageTensor& img) const;
  int dim() const;
  int hop2_channels() const { return hops_[1].kept_channels; }
  int hop4_channels() const { return hops_[3].kept_channels; }
  Upsampling upsampling() const { return upsampling_; }

  void save(const BlobWriter& w) const;
  static RefinementFeatures load(const BlobReader& r);

 private:
  std::vector<HopUnit> hops_;
  Upsampling upsampling_ = Upsampling::kNearest;
};

// Per-pixel foreground probability in [0, 1].
struct AttentionMap {
  int height = 0;
  int width = 0;
  std::vector<float> values;

  float at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
  float& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
};

// Gathers features for the sampled pixels (positives labelled 1) and fits a
// binary soft classifier. The set is thinned uniformly to max_samples, with
// equal counts per class, when it is larger.
std::unique_ptr<SoftClassifier> train_refiner(const RefinementSampleSet& samples,
                                              std::span<const ImageTensor> images,
                                              const RefinementFeatures& features,
                                              const GbdtConfig& config, std::size_t max_samples,
                                              std::uint64_t seed);

AttentionMap predict_attention_map(const ImageTensor& img, const RefinementFeatures& features,
                                   const SoftClassifier& refiner);

struct Step2Config {
  RefinementFeatureConfig features;
  GbdtConfig gbdt;
  int margin = 3;
  std::size_t subset_images = 10000;
  std::size_t max_samples = 200000;
  std::uint64_t seed = 31;
};

class Step2Model {
 public:
  // Fits on a seeded class-balanced subset of `train`, using each image's
  // preliminary window from `step1`.
  static Step2Model fit(const LabeledDataset& train, const Step1Model& step1,
                        const Step2Config& config);
  static Step2Model fit(std::span<const ImageTensor> images,
                        std::span<const AttentionWindow> windows, const Step2Config& config);

  AttentionMap predict(const ImageTensor& img) const;
  const RefinementFeatures& features() const { return features_; }
  const SoftClassifier& refiner() const { return *refiner_; }

  void save(const BlobWriter& w) const;
  static Step2Model load(const BlobReader& r);

 private:
  RefinementFeatures features_;
  std::unique_ptr<SoftClassifier> refiner_;
};

}  // namespace sal
