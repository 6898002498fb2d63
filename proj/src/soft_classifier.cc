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

#include "sal/soft_classifier.h"

#include <vector>

#include "sal/gbdt.h"
#include "sal/logistic.h"
#include "sal/parallel.h"
#include "sal/status.h"

namespace sal {

RowMatrixD SoftClassifier::predict_proba(const RowMatrixF& x) const {
  const int k = num_classes();
  RowMatrixD out(x.rows(), k);
  parallel_for(static_cast<std::size_t>(x.rows()), [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    predict_proba(std::span<const float>(x.row(row).data(), static_cast<std::size_t>(x.cols())),
                  std::span<double>(out.row(row).data(), static_cast<std::size_t>(k)));
  });
  return out;
}

std::unique_ptr<SoftClassifier> load_soft_classifier(const BlobReader& r) {
  const std::string kind = r.string("kind");
  if (kind == "gbdt") return std::make_unique<GradientBoostedTrees>(GradientBoostedTrees::load(r));
  if (kind == "logistic") return std::make_unique<LogisticRegression>(LogisticRegression::load(r));
  fail(ErrorCode::kCorruptFormat, "unknown classifier kind '" + kind + "'");
}

void check_training_labels(std::span<const int> labels, int num_classes) {
  check(num_classes >= 2, ErrorCode::kDegenerateLabels, "need at least two classes");
  std::vector<bool> seen(num_classes, false);
  int distinct = 0;
  for (int y : labels) {
    check(y >= 0 && y < num_classes, ErrorCode::kInvalidInput,
          "label " + std::to_string(y) + " outside [0, " + std::to_string(num_classes) + ")");
    if (!seen[y]) {
      seen[y] = true;
      ++distinct;
    }
  }
  check(distinct >= 2, ErrorCode::kDegenerateLabels, "training labels contain a single class");
}

}  // namespace sal
