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

#include "sal/sal_step1.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "sal/parallel.h"
#include "sal/status.h"

namespace sal {

ContextGrid pool_context(const ContextGrid& grid) {
  const int g = grid.features.height();
  check(g > 0 && g % 2 == 0 && grid.features.width() == g, ErrorCode::kInvalidInput,
        "pool_context needs an even square grid, got " + std::to_string(g));
  ContextGrid out;
  out.features = max_pool_2x2(grid.features);
  out.slice_begin = grid.slice_begin;
  return out;
}

PixelTrainingSet collect_pixel_samples(const ContextCascade& cascade,
                                       std::span<const ImageTensor> images,
                                       std::span<const int> labels, int num_classes,
                                       std::size_t max_samples, std::uint64_t seed) {
  check(images.size() == labels.size(), ErrorCode::kInvalidInput, "images/labels mismatch");
  check(!images.empty(), ErrorCode::kDegenerateInput, "no training images");
  const int pooled = cascade.grid_size() / 2;
  const int cells = pooled * pooled;
  std::vector<int> cell_labels;
  cell_labels.reserve(images.size() * cells);
  for (int y : labels) cell_labels.insert(cell_labels.end(), cells, y);
  const auto chosen = balanced_indices(cell_labels, num_classes, max_samples, seed);

  // chosen is sorted, so each image owns one contiguous run of rows.
  std::vector<std::size_t> run_begin(images.size() + 1, 0);
  for (auto id : chosen) ++run_begin[id / cells + 1];
  for (std::size_t i = 0; i < images.size(); ++i) run_begin[i + 1] += run_begin[i];

  PixelTrainingSet out;
  out.features.resize(static_cast<Eigen::Index>(chosen.size()), cascade.dim());
  out.labels.resize(chosen.size());
  out.image_of_row.resize(chosen.size());
  parallel_for(images.size(), [&](std::size_t i) {
    if (run_begin[i] == run_begin[i + 1]) return;
    const ContextGrid grid = pool_context(extract_context(images[i], cascade));
    for (std::size_t row = run_begin[i]; row < run_begin[i + 1]; ++row) {
      const int cell = static_cast<int>(chosen[row] % cells);
      auto v = grid.features.pixel(cell / pooled, cell % pooled);
      std::copy(v.begin(), v.end(), out.features.row(static_cast<Eigen::Index>(row)).data());
      out.labels[row] = labels[i];
      out.image_of_row[row] = static_cast<std::uint32_t>(i);
    }
  });
  return out;
}

std::unique_ptr<SoftClassifier> train_pixel_classifier(const PixelTrainingSet& samples,
                                                       int num_classes, const GbdtConfig& config) {
  return std::make_unique<GradientBoostedTrees>(
      GradientBoostedTrees::fit(samples.features, samples.labels, num_classes, config));
}

SoftDecisionGrid predict_soft_decisions(const ContextGrid& grid, const SoftClassifier& classifier) {
  const int h = grid.features.height();
  const int w = grid.features.width();
  SoftDecisionGrid sd(h, w, classifier.num_classes());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) classifier.predict_proba(grid.features.pixel(r, c), sd.at(r, c));
  }
  return sd;
}

SoftDecisionGrid upsample_bilinear(const SoftDecisionGrid& sd, int factor) {
  check(sd.grid_h > 0 && sd.grid_w > 0 && factor >= 1, ErrorCode::kInvalidInput,
        "bad soft decision grid for upsampling");
  SoftDecisionGrid out(sd.grid_h * factor, sd.grid_w * factor, sd.num_classes);
  auto taps = [factor](int dst, int n) {
    const double s = std::clamp((dst + 0.5) / factor - 0.5, 0.0, static_cast<double>(n - 1));
    const int lo = static_cast<int>(std::floor(s));
    return std::tuple<int, int, double>{lo, std::min(lo + 1, n - 1), s - lo};
  };
  for (int r = 0; r < out.grid_h; ++r) {
    const auto [r0, r1, fr] = taps(r, sd.grid_h);
    for (int c = 0; c < out.grid_w; ++c) {
      const auto [c0, c1, fc] = taps(c, sd.grid_w);
      auto dst = out.at(r, c);
      double total = 0.0;
      for (int k = 0; k < sd.num_classes; ++k) {
        const double v = (1 - fr) * ((1 - fc) * sd.at(r0, c0)[k] + fc * sd.at(r0, c1)[k]) +
                         fr * ((1 - fc) * sd.at(r1, c0)[k] + fc * sd.at(r1, c1)[k]);
        dst[k] = v;
        total += v;
      }
      if (total > 0.0) {
        for (double& v : dst) v /= total;
      }
    }
  }
  return out;
}

AttentionWindow select_window(const SoftDecisionGrid& sd14, int window, int offset, int image_size) {
  check(window >= 1 && window % 2 == 1, ErrorCode::kInvalidConfig, "window size must be odd");
  check(window <= image_size, ErrorCode::kInvalidConfig, "window larger than the image");
  check(sd14.grid_h > 0 && sd14.grid_w > 0, ErrorCode::kInvalidInput, "empty soft decision grid");
  int best_r = 0;
  int best_c = 0;
  double best = -1.0;
  for (int r = 0; r < sd14.grid_h; ++r) {
    for (int c = 0; c < sd14.grid_w; ++c) {
      auto p = sd14.at(r, c);
      const double conf = *std::max_element(p.begin(), p.end());
      if (conf > best) {
        best = conf;
        best_r = r;
        best_c = c;
      }
    }
  }
  const int half = (window - 1) / 2;
  AttentionWindow w;
  w.size = window;
  w.center_row = std::clamp(best_r + offset, half, image_size - 1 - half);
  w.center_col = std::clamp(best_c + offset, half, image_size - 1 - half);
  return w;
}

Step1Model Step1Model::fit(const LabeledDataset& train, const Step1Config& config) {
  train.validate();
  Step1Model m;
  m.window_ = config.window;
  m.cascade_ = fit_cascade(train, config.cascade);
  const auto samples = collect_pixel_samples(m.cascade_, train.images, train.labels,
                                             train.num_classes(), config.max_pixel_samples,
                                             config.seed);
  m.classifier_ = train_pixel_classifier(samples, train.num_classes(), config.gbdt);
  return m;
}

SoftDecisionGrid Step1Model::pooled_decisions(const ImageTensor& img) const {
  check(classifier_ != nullptr, ErrorCode::kNotFitted, "step-1 model not fitted");
  return predict_soft_decisions(pool_context(extract_context(img, cascade_)), *classifier_);
}

SoftDecisionGrid Step1Model::decisions(const ImageTensor& img) const {
  return upsample_bilinear(pooled_decisions(img), 2);
}

AttentionWindow Step1Model::select(const ImageTensor& img) const {
  const int offset = (cascade_.input_size - cascade_.grid_size()) / 2;
  return select_window(decisions(img), window_, offset, cascade_.input_size);
}

void Step1Model::save(const BlobWriter& w) const {
  check(classifier_ != nullptr, ErrorCode::kNotFitted, "step-1 model not fitted");
  cascade_.save(w.sub("cascade"));
  classifier_->save(w.sub("classifier"));
  w.put_int("window", window_);
}

Step1Model Step1Model::load(const BlobReader& r) {
  Step1Model m;
  m.cascade_ = ContextCascade::load(r.sub("cascade"));
  m.classifier_ = load_soft_classifier(r.sub("classifier"));
  m.window_ = static_cast<int>(r.integer("window"));
  return m;
}

}  // namespace sal
