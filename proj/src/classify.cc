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

#include "sal/classify.h"

#include <algorithm>
#include <numeric>

#include "sal/parallel.h"
#include "sal/status.h"

namespace sal {

ImageTensor PqrTransform::apply(const ImageTensor& rgb) const {
  check(rgb.channels() == 3, ErrorCode::kInvalidInput, "PQR conversion needs 3 channels");
  ImageTensor out(rgb.height(), rgb.width(), 3);
  for (int r = 0; r < rgb.height(); ++r) {
    for (int c = 0; c < rgb.width(); ++c) {
      auto src = rgb.pixel(r, c);
      const Eigen::Vector3d x(src[0] - mean(0), src[1] - mean(1), src[2] - mean(2));
      const Eigen::Vector3d y = matrix * x;
      auto dst = out.pixel(r, c);
      for (int k = 0; k < 3; ++k) dst[k] = static_cast<float>(y(k));
    }
  }
  return out;
}

void PqrTransform::save(const BlobWriter& w) const {
  const Eigen::Matrix<double, 3, 3, Eigen::RowMajor> m = matrix;
  w.put_f64("matrix", std::span<const double>(m.data(), 9), {3, 3});
  w.put_f64("mean", std::span<const double>(mean.data(), 3));
  w.put_f64("variances", std::span<const double>(variances.data(), 3));
}

PqrTransform PqrTransform::load(const BlobReader& r) {
  PqrTransform t;
  auto m = r.f64("matrix");
  auto mu = r.f64("mean");
  auto var = r.f64("variances");
  check(m.size() == 9 && mu.size() == 3 && var.size() == 3, ErrorCode::kCorruptFormat,
        "bad PQR blobs");
  t.matrix = Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(m.data());
  t.mean = Eigen::Map<Eigen::Vector3d>(mu.data());
  t.variances = Eigen::Map<Eigen::Vector3d>(var.data());
  return t;
}

PqrTransform fit_pqr(std::span<const ImageTensor> images) {
  check(!images.empty(), ErrorCode::kDegenerateInput, "no images for PQR fitting");
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Matrix3d outer = Eigen::Matrix3d::Zero();
  double n = 0.0;
  // Shift by the first pixel for numerical stability.
  check(images.front().channels() == 3 && images.front().size() > 0, ErrorCode::kInvalidInput,
        "PQR fitting needs RGB images");
  const auto first = images.front().pixel(0, 0);
  const Eigen::Vector3d shift(first[0], first[1], first[2]);
  for (const auto& img : images) {
    check(img.channels() == 3, ErrorCode::kInvalidInput, "PQR fitting needs RGB images");
    const auto data = img.data();
    for (std::size_t i = 0; i < data.size(); i += 3) {
      const Eigen::Vector3d x = Eigen::Vector3d(data[i], data[i + 1], data[i + 2]) - shift;
      sum += x;
      outer += x * x.transpose();
      n += 1.0;
    }
  }
  const Eigen::Vector3d m = sum / n;
  const Eigen::Matrix3d cov = outer / n - m * m.transpose();
  check(cov.trace() > 1e-9, ErrorCode::kDegenerateInput, "training colours have no variance");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  PqrTransform t;
  t.mean = shift + m;
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d v = eig.eigenvectors().col(2 - k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    t.matrix.row(k) = v.transpose();
    t.variances(k) = std::max(0.0, eig.eigenvalues()(2 - k));
  }
  return t;
}

namespace {

std::vector<float> flatten(const SoftDecisionGrid& sd) {
  return std::vector<float>(sd.probs.begin(), sd.probs.end());
}

RowMatrixF rows_of(const std::vector<std::vector<float>>& feats, std::span<const std::size_t> idx) {
  const auto d = static_cast<Eigen::Index>(feats.front().size());
  RowMatrixF x(static_cast<Eigen::Index>(idx.size()), d);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy(feats[idx[i]].begin(), feats[idx[i]].end(), x.row(static_cast<Eigen::Index>(i)).data());
  }
  return x;
}

}  // namespace

ImageClassifier ImageClassifier::fit(const LabeledDataset& train, const ImageClassifierConfig& config) {
  train.validate();
  check_training_labels(train.labels, train.num_classes());
  ImageClassifier m;
  m.hard_threshold_ = config.hard_threshold;
  const LabeledDataset* input = &train;
  LabeledDataset converted;
  if (config.use_pqr) {
    m.pqr_ = fit_pqr(train.images);
    converted.class_names = train.class_names;
    converted.labels = train.labels;
    converted.images.resize(train.size());
    parallel_for(train.size(), [&](std::size_t i) { converted.images[i] = m.pqr_->apply(train.images[i]); });
    input = &converted;
  }
  m.pixel_ = Step1Model::fit(*input, config.pixel);

  const std::size_t n = input->size();
  std::vector<std::vector<float>> feats(n);
  parallel_for(n, [&](std::size_t i) { feats[i] = flatten(m.pixel_.pooled_decisions(input->images[i])); });
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const RowMatrixF x = rows_of(feats, all);
  m.meta_ = LogisticRegression::fit(x, input->labels, input->num_classes(), config.meta);

  if (config.second_round) {
    const RowMatrixD p = m.meta_.predict_proba(x);
    std::vector<std::size_t> hard;
    std::vector<int> hard_labels;
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::Index arg = 0;
      const double top = p.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
      if (arg != input->labels[i] || top < config.hard_threshold) {
        hard.push_back(i);
        hard_labels.push_back(input->labels[i]);
      }
    }
    const bool two_classes =
        std::adjacent_find(hard_labels.begin(), hard_labels.end(), std::not_equal_to<>()) != hard_labels.end();
    if (hard.size() >= config.min_hard_samples && two_classes) {
      m.hard_meta_ = LogisticRegression::fit(rows_of(feats, hard), hard_labels,
                                             input->num_classes(), config.meta);
    }
  }
  return m;
}

std::vector<float> ImageClassifier::decision_features(const ImageTensor& img) const {
  if (pqr_) return flatten(pixel_.pooled_decisions(pqr_->apply(img)));
  return flatten(pixel_.pooled_decisions(img));
}

std::vector<double> ImageClassifier::combine(std::span<const float> features) const {
  std::vector<double> p(meta_.num_classes());
  meta_.predict_proba(features, p);
  if (hard_meta_ && *std::max_element(p.begin(), p.end()) < hard_threshold_) {
    hard_meta_->predict_proba(features, p);
  }
  return p;
}

std::vector<double> ImageClassifier::predict(const ImageTensor& img) const {
  return combine(decision_features(img));
}

RowMatrixD ImageClassifier::predict(std::span<const ImageTensor> images) const {
  RowMatrixD out(static_cast<Eigen::Index>(images.size()), num_classes());
  parallel_for(images.size(), [&](std::size_t i) {
    const auto p = predict(images[i]);
    for (int k = 0; k < num_classes(); ++k) out(static_cast<Eigen::Index>(i), k) = p[k];
  });
  return out;
}

void ImageClassifier::save(const BlobWriter& w) const {
  if (pqr_) pqr_->save(w.sub("pqr"));
  pixel_.save(w.sub("pixel"));
  meta_.save(w.sub("meta"));
  if (hard_meta_) hard_meta_->save(w.sub("hard_meta"));
  w.put_scalar("hard_threshold", hard_threshold_);
}

ImageClassifier ImageClassifier::load(const BlobReader& r) {
  ImageClassifier m;
  if (r.has_section("pqr")) m.pqr_ = PqrTransform::load(r.sub("pqr"));
  m.pixel_ = Step1Model::load(r.sub("pixel"));
  m.meta_ = LogisticRegression::load(r.sub("meta"));
  if (r.has_section("hard_meta")) m.hard_meta_ = LogisticRegression::load(r.sub("hard_meta"));
  m.hard_threshold_ = r.scalar("hard_threshold");
  return m;
}

std::pair<int, int> top2(std::span<const double> probs) {
  check(probs.size() >= 2, ErrorCode::kInvalidInput, "top-2 needs at least two classes");
  int first = 0;
  for (int k = 1; k < static_cast<int>(probs.size()); ++k) {
    if (probs[k] > probs[first]) first = k;
  }
  int second = first == 0 ? 1 : 0;
  for (int k = 0; k < static_cast<int>(probs.size()); ++k) {
    if (k != first && probs[k] > probs[second]) second = k;
  }
  return {first, second};
}

std::vector<ConfusionSet> build_confusion_sets(const RowMatrixD& decisions) {
  const int k = static_cast<int>(decisions.cols());
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (Eigen::Index i = 0; i < decisions.rows(); ++i) {
    const auto [a, b] = top2(std::span<const double>(decisions.row(i).data(), static_cast<std::size_t>(k)));
    groups[{std::min(a, b), std::max(a, b)}].push_back(static_cast<std::size_t>(i));
  }
  std::vector<ConfusionSet> sets;
  for (auto& [pair, members] : groups) sets.push_back({pair.first, pair.second, std::move(members)});
  std::stable_sort(sets.begin(), sets.end(),
                   [](const ConfusionSet& x, const ConfusionSet& y) { return x.size() > y.size(); });
  return sets;
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kFull: return "full";
    case Strategy::kAttention: return "attention";
    case Strategy::kEnsemble: return "ensemble";
  }
  return "unknown";
}

namespace {

RowMatrixF concat_decisions(const RowMatrixD& full, const RowMatrixD& attention) {
  check(full.rows() == attention.rows(), ErrorCode::kInvalidInput,
        "branch decisions cover different numbers of images");
  RowMatrixF x(full.rows(), full.cols() + attention.cols());
  x.leftCols(full.cols()) = full.cast<float>();
  x.rightCols(attention.cols()) = attention.cast<float>();
  return x;
}

}  // namespace

LogisticRegression fit_ensemble(const RowMatrixD& full, const RowMatrixD& attention,
                                std::span<const int> labels, const LogisticConfig& config) {
  const RowMatrixF x = concat_decisions(full, attention);
  check(x.rows() == static_cast<Eigen::Index>(labels.size()), ErrorCode::kInvalidInput,
        "ensemble labels do not match branch decisions");
  return LogisticRegression::fit(x, labels, static_cast<int>(full.cols()), config);
}

RowMatrixD apply_ensemble(const LogisticRegression& ensemble, const RowMatrixD& full,
                          const RowMatrixD& attention) {
  return ensemble.predict_proba(concat_decisions(full, attention));
}

const RowMatrixD& PairDecisions::of(Strategy s) const {
  switch (s) {
    case Strategy::kFull: return full;
    case Strategy::kAttention: return attention;
    case Strategy::kEnsemble: return ensemble;
  }
  return ensemble;
}

PairModel::PairModel(int a, int b, Localizer loc, ImageClassifier full, ImageClassifier att,
                     LogisticRegression ensemble, PairValidation validation)
    : class_a_(a),
      class_b_(b),
      localizer_(std::move(loc)),
      full_(std::move(full)),
      attention_(std::move(att)),
      ensemble_(std::move(ensemble)),
      validation_(validation) {}

namespace {

std::vector<ImageTensor> crops_of(const Localizer& loc, std::span<const ImageTensor> images) {
  std::vector<ImageTensor> out(images.size());
  parallel_for(images.size(), [&](std::size_t i) { out[i] = loc.localize(images[i]).crop; });
  return out;
}

}  // namespace

PairModel PairModel::fit(const LabeledDataset& train, int class_a, int class_b,
                         const PairModelConfig& config) {
  check(class_a < class_b, ErrorCode::kInvalidClass, "pair classes must satisfy a < b");
  const LabeledDataset pair = subset_pairs(train, class_a, class_b);
  std::vector<std::size_t> fit_idx;
  std::vector<std::size_t> hold_idx;
  stratified_split(pair.labels, 2, config.holdout_fraction, config.seed, &fit_idx, &hold_idx);
  const LabeledDataset fit_set = select(pair, fit_idx);
  const LabeledDataset hold_set = select(pair, hold_idx);
  check(hold_set.size() > 0, ErrorCode::kDegenerateInput, "pair has no held-out images");

  Localizer loc = Localizer::fit(fit_set, config.sal);
  ImageClassifier full = ImageClassifier::fit(fit_set, config.branch);
  LabeledDataset crops = fit_set;
  crops.images = crops_of(loc, fit_set.images);
  ImageClassifier att = ImageClassifier::fit(crops, config.branch);

  const RowMatrixD hold_full = full.predict(hold_set.images);
  const RowMatrixD hold_att = att.predict(crops_of(loc, hold_set.images));
  LogisticRegression ens = fit_ensemble(hold_full, hold_att, hold_set.labels, config.ensemble);
  PairValidation v;
  v.full = accuracy(hold_full, hold_set.labels);
  v.attention = accuracy(hold_att, hold_set.labels);
  v.ensemble = accuracy(apply_ensemble(ens, hold_full, hold_att), hold_set.labels);
  return PairModel(class_a, class_b, std::move(loc), std::move(full), std::move(att), std::move(ens), v);
}

PairDecisions PairModel::predict(std::span<const ImageTensor> images) const {
  PairDecisions d;
  d.full = full_.predict(images);
  d.attention = attention_.predict(crops_of(localizer_, images));
  d.ensemble = apply_ensemble(ensemble_, d.full, d.attention);
  return d;
}

void PairModel::save(const BlobWriter& w) const {
  w.put_int("class_a", class_a_);
  w.put_int("class_b", class_b_);
  localizer_.save(w.sub("sal"));
  full_.save(w.sub("full"));
  attention_.save(w.sub("attention"));
  ensemble_.save(w.sub("ensemble"));
  const double v[3] = {validation_.full, validation_.attention, validation_.ensemble};
  w.put_f64("validation", v);
}

PairModel PairModel::load(const BlobReader& r) {
  const auto v = r.f64("validation");
  check(v.size() == 3, ErrorCode::kCorruptFormat, "bad pair validation record");
  return PairModel(static_cast<int>(r.integer("class_a")), static_cast<int>(r.integer("class_b")),
                   Localizer::load(r.sub("sal")), ImageClassifier::load(r.sub("full")),
                   ImageClassifier::load(r.sub("attention")), LogisticRegression::load(r.sub("ensemble")),
                   PairValidation{v[0], v[1], v[2]});
}

std::string pair_key(int class_a, int class_b) {
  return std::to_string(class_a) + "_" + std::to_string(class_b);
}

double accuracy(const RowMatrixD& decisions, std::span<const int> labels) {
  check(decisions.rows() == static_cast<Eigen::Index>(labels.size()), ErrorCode::kInvalidInput,
        "decisions and labels differ in length");
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < decisions.rows(); ++i) {
    Eigen::Index arg = 0;
    decisions.row(i).maxCoeff(&arg);
    correct += arg == labels[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::vector<int> two_stage_labels(const RowMatrixD& stage1, const std::vector<ConfusionSet>& sets,
                                  const std::map<std::string, PairDecisions>& stage2,
                                  int n_resolved, Strategy strategy) {
  const int k = static_cast<int>(stage1.cols());
  check(n_resolved >= 0 && n_resolved <= k * (k - 1) / 2, ErrorCode::kInvalidConfig,
        "cannot resolve " + std::to_string(n_resolved) + " confusion sets with " +
            std::to_string(k) + " classes");
  std::vector<int> labels(static_cast<std::size_t>(stage1.rows()));
  for (Eigen::Index i = 0; i < stage1.rows(); ++i) {
    Eigen::Index arg = 0;
    stage1.row(i).maxCoeff(&arg);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  const int limit = std::min<int>(n_resolved, static_cast<int>(sets.size()));
  for (int s = 0; s < limit; ++s) {
    const auto& set = sets[s];
    auto it = stage2.find(pair_key(set.class_a, set.class_b));
    check(it != stage2.end(), ErrorCode::kNotFitted,
          "no stage-2 decisions for pair " + pair_key(set.class_a, set.class_b));
    const RowMatrixD& d = it->second.of(strategy);
    check(d.rows() == static_cast<Eigen::Index>(set.size()), ErrorCode::kInvalidInput,
          "stage-2 decisions do not match confusion set size");
    for (std::size_t m = 0; m < set.size(); ++m) {
      const auto row = static_cast<Eigen::Index>(m);
      labels[set.members[m]] = d(row, 1) > d(row, 0) ? set.class_b : set.class_a;
    }
  }
  return labels;
}

double two_stage_accuracy(const RowMatrixD& stage1, std::span<const int> labels,
                          const std::vector<ConfusionSet>& sets,
                          const std::map<std::string, PairDecisions>& stage2, int n_resolved,
                          Strategy strategy) {
  const auto predicted = two_stage_labels(stage1, sets, stage2, n_resolved, strategy);
  check(predicted.size() == labels.size(), ErrorCode::kInvalidInput, "label count mismatch");
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace sal
