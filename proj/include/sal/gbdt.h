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

#include "sal/soft_classifier.h"

namespace sal {

struct GbdtConfig {
  int rounds = 300;
  int max_depth = 3;
  double learning_rate = 0.1;
  double l2 = 1.0;
  double min_child_hessian = 1.0;
  int max_bins = 64;
  double row_subsample = 1.0;
  std::size_t binning_sample = 100000;
  std::uint64_t seed = 1;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  float threshold = 0.0f;     // go left when x[feature] < threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;
};

// Histogram-based gradient boosting with a logistic loss for two classes and
// a softmax loss (one tree per class per round) otherwise.
class GradientBoostedTrees final : public SoftClassifier {
 public:
  static GradientBoostedTrees fit(const RowMatrixF& x, std::span<const int> labels,
                                  int num_classes, const GbdtConfig& config);

  std::string kind() const override { return "gbdt"; }
  int num_classes() const override { return num_classes_; }
  int num_features() const override { return num_features_; }
  using SoftClassifier::predict_proba;
  void predict_proba(std::span<const float> x, std::span<double> out) const override;
  void save(const BlobWriter& w) const override;
  static GradientBoostedTrees load(const BlobReader& r);

  // Raw additive scores, one per output (1 for binary, K otherwise).
  void predict_margin(std::span<const float> x, std::span<double> out) const;
  int num_trees() const { return static_cast<int>(trees_.size()); }
  const std::vector<TreeNode>& tree(int i) const { return trees_[i]; }

 private:
  int num_classes_ = 0;
  int num_outputs_ = 0;
  int num_features_ = 0;
  std::vector<double> base_score_;
  std::vector<std::vector<TreeNode>> trees_;  // round-major, num_outputs_ per round
};

}  // namespace sal
