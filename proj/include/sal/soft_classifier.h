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

#include <memory>
#include <span>
#include <string>

#include "sal/pipeline_io.h"
#include "sal/saab.h"

namespace sal {

// Any K-class learner that emits a probability vector per sample.
class SoftClassifier {
 public:
  virtual ~SoftClassifier() = default;

  virtual std::string kind() const = 0;
  virtual int num_classes() const = 0;
  virtual int num_features() const = 0;
  // Writes num_classes() probabilities summing to 1.
  virtual void predict_proba(std::span<const float> x, std::span<double> out) const = 0;
  virtual void save(const BlobWriter& w) const = 0;

  // Row-wise prediction, image-parallel.
  RowMatrixD predict_proba(const RowMatrixF& x) const;
};

std::unique_ptr<SoftClassifier> load_soft_classifier(const BlobReader& r);

// Throws degenerate-labels unless at least two classes occur in `labels`, and
// invalid-input when a label is outside [0, num_classes).
void check_training_labels(std::span<const int> labels, int num_classes);

}  // namespace sal
