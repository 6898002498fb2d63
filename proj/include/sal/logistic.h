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

#include <span>

#include "sal/soft_classifier.h"

namespace sal {

struct LogisticConfig {
  double l2 = 1e-3;
  int max_iterations = 300;
  double gradient_tolerance = 1e-7;
  int history = 10;  // L-BFGS memory
};

// Multinomial logistic regression fitted by L-BFGS on standardised features.
// Weights are stored in the original feature space.
class LogisticRegression final : public SoftClassifier {
 public:
  static LogisticRegression fit(const RowMatrixF& x, std::span<const int> labels,
                                int num_classes, const LogisticConfig& config);

  std::string kind() const override { return "logistic"; }
  int num_classes() const override { return static_cast<int>(intercept_.size()); }
  int num_features() const override { return static_cast<int>(weights_.cols()); }
  using SoftClassifier::predict_proba;
  void predict_proba(std::span<const float> x, std::span<double> out) const override;
  void save(const BlobWriter& w) const override;
  static LogisticRegression load(const BlobReader& r);

  const RowMatrixD& weights() const { return weights_; }  // num_classes x num_features
  const Eigen::VectorXd& intercept() const { return intercept_; }
  int iterations() const { return iterations_; }

 private:
  RowMatrixD weights_;
  Eigen::VectorXd intercept_;
  int iterations_ = 0;
};

}  // namespace sal
