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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sal/cifar.h"
#include "sal/localizer.h"
#include "sal/logistic.h"
#include "sal/sal_step1.h"

namespace sal {

// PCA colour basis: rows of `matrix` are the P, Q, R directions in
// descending variance, each signed so its largest coefficient is positive.
struct PqrTransform {
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d variances = Eigen::Vector3d::Zero();

  ImageTensor apply(const ImageTensor& rgb) const;

  void save(const BlobWriter& w) const;
  static PqrTransform load(const BlobReader& r);
};

PqrTransform fit_pqr(std::span<const ImageTensor> images);

struct ImageClassifierConfig {
  bool use_pqr = true;
  Step1Config pixel;            // cascade + pooled pixel classifier
  LogisticConfig meta;          // over flattened 7x7xK pixel decisions
  bool second_round = true;     // refit the meta classifier on hard samples
  double hard_threshold = 0.6;  // top-1 probability below this is "hard"
  std::size_t min_hard_samples = 20;
};

// Image classifier: optional PQR conversion,
// context-grid pixel classification, then a logistic meta classifier over the
// flattened pooled decisions. With second_round, a second meta classifier is
// fitted on training images that were misclassified or low-confidence and
// takes over at inference wherever the first one is below hard_threshold.
class ImageClassifier {
 public:
  static ImageClassifier fit(const LabeledDataset& train, const ImageClassifierConfig& config);

  int num_classes() const { return pixel_.num_classes(); }
  bool has_second_round() const { return hard_meta_.has_value(); }

  std::vector<float> decision_features(const ImageTensor& img) const;
  std::vector<double> predict(const ImageTensor& img) const;
  RowMatrixD predict(std::span<const ImageTensor> images) const;

  void save(const BlobWriter& w) const;
  static ImageClassifier load(const BlobReader& r);

 private:
  std::vector<double> combine(std::span<const float> features) const;

  std::optional<PqrTransform> pqr_;
  Step1Model pixel_;
  LogisticRegression meta_;
  std::optional<LogisticRegression> hard_meta_;
  double hard_threshold_ = 0.6;
};

// Indices of the two largest entries, ties to the lower index.
std::pair<int, int> top2(std::span<const double> probs);

struct ConfusionSet {
  int class_a = 0;  // class_a < class_b
  int class_b = 1;
  std::vector<std::size_t> members;

  std::size_t size() const { return members.size(); }
};

// Groups images by their unordered top-2 class pair; non-empty sets sorted by
// descending size, then by (class_a, class_b).
std::vector<ConfusionSet> build_confusion_sets(const RowMatrixD& decisions);

enum class Strategy { kFull, kAttention, kEnsemble };
std::string strategy_name(Strategy s);

// Logistic regression over concatenated [full | attention] branch probabilities.
LogisticRegression fit_ensemble(const RowMatrixD& full, const RowMatrixD& attention,
                                std::span<const int> labels, const LogisticConfig& config);
RowMatrixD apply_ensemble(const LogisticRegression& ensemble, const RowMatrixD& full,
                          const RowMatrixD& attention);

struct PairModelConfig {
  LocalizerConfig sal;
  ImageClassifierConfig branch;
  LogisticConfig ensemble;
  double holdout_fraction = 0.1;
  std::uint64_t seed = 41;
};

struct PairDecisions {
  RowMatrixD full;
  RowMatrixD attention;
  RowMatrixD ensemble;

  const RowMatrixD& of(Strategy s) const;
};

struct PairValidation {
  double full = 0.0;
  double attention = 0.0;
  double ensemble = 0.0;
};

// Stage-2 model for one class pair: a localizer fitted on the pair, a
// full-frame branch, an attention-crop branch, and their logistic ensemble
// fitted on a held-out slice of the pair's training images.
class PairModel {
 public:
  // `train` holds all classes; only class_a and class_b images are used.
  static PairModel fit(const LabeledDataset& train, int class_a, int class_b,
                       const PairModelConfig& config);

  int class_a() const { return class_a_; }
  int class_b() const { return class_b_; }
  const Localizer& localizer() const { return localizer_; }
  const PairValidation& validation() const { return validation_; }

  // Column 0 is class_a, column 1 class_b.
  PairDecisions predict(std::span<const ImageTensor> images) const;

  void save(const BlobWriter& w) const;
  static PairModel load(const BlobReader& r);

 private:
  PairModel(int a, int b, Localizer loc, ImageClassifier full, ImageClassifier att,
            LogisticRegression ensemble, PairValidation validation);

  int class_a_;
  int class_b_;
  Localizer localizer_;
  ImageClassifier full_;
  ImageClassifier attention_;
  LogisticRegression ensemble_;
  PairValidation validation_;
};

std::string pair_key(int class_a, int class_b);

double accuracy(const RowMatrixD& decisions, std::span<const int> labels);

// Final labels after stage 2 overrides the `n_resolved` largest confusion sets.
// `stage2` maps pair_key -> decisions for that set's members (in member order).
std::vector<int> two_stage_labels(const RowMatrixD& stage1, const std::vector<ConfusionSet>& sets,
                                  const std::map<std::string, PairDecisions>& stage2,
                                  int n_resolved, Strategy strategy);

double two_stage_accuracy(const RowMatrixD& stage1, std::span<const int> labels,
                          const std::vector<ConfusionSet>& sets,
                          const std::map<std::string, PairDecisions>& stage2, int n_resolved,
                          Strategy strategy);

}  // namespace sal
