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

#include "sal/sal_step2.h"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "sal/parallel.h"
#include "sal/status.h"

namespace sal {

int window_depth(const AttentionWindow& w, int row, int col) {
  if (!w.contains(row, col)) return -1;
  return std::min({row - w.top(), w.bottom() - row, col - w.left(), w.right() - col});
}

int window_distance(const AttentionWindow& w, int row, int col) {
  if (w.contains(row, col)) return 0;
  return std::max({w.top() - row, row - w.bottom(), w.left() - col, col - w.right()});
}

RefinementSampleSet sample_refinement_pixels(std::span<const AttentionWindow> windows,
                                             int image_h, int image_w, int margin,
                                             std::uint64_t seed) {
  check(margin >= 0, ErrorCode::kInvalidConfig, "margin must be non-negative");
  RefinementSampleSet set;
  set.margin = margin;
  std::mt19937_64 rng(seed);
  std::vector<PixelRef> pos;
  std::vector<PixelRef> neg;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    check(w.fits(image_h, image_w), ErrorCode::kInvalidInput,
          "attention window " + std::to_string(i) + " leaves the image");
    pos.clear();
    neg.clear();
    const auto id = static_cast<std::uint32_t>(i);
    for (int r = 0; r < image_h; ++r) {
      for (int c = 0; c < image_w; ++c) {
        if (w.contains(r, c)) {
          if (window_depth(w, r, c) >= margin) pos.push_back({id, r, c});
        } else if (window_distance(w, r, c) > margin) {
          neg.push_back({id, r, c});
        }
      }
    }
    check(!neg.empty(), ErrorCode::kDegenerateGeometry,
          "no background pixels outside window " + std::to_string(i));
    const std::size_t n = std::min(pos.size(), neg.size());
    if (pos.size() > n) {
      std::vector<PixelRef> kept;
      std::sample(pos.begin(), pos.end(), std::back_inserter(kept), n, rng);
      pos.swap(kept);
    }
    std::sample(neg.begin(), neg.end(), std::back_inserter(set.negatives), n, rng);
    set.positives.insert(set.positives.end(), pos.begin(), pos.end());
  }
  return set;
}

RefinementFeatures RefinementFeatures::fit(std::span<const ImageTensor> images,
                                           const RefinementFeatureConfig& config) {
  check(!images.empty(), ErrorCode::kDegenerateInput, "no images for refinement features");
  RefinementFeatures f;
  f.upsampling_ = config.upsampling;
  std::vector<ImageTensor> maps(images.begin(), images.end());
  double parent = 1.0;
  for (int u = 0; u < 4; ++u) {
    HopUnit hop = fit_hop(maps, 3, Padding::kReflect, config.hop, parent, config.seed + u);
    parent = hop.forwarded_energy();
    if (u < 3) {
      parallel_for(maps.size(), [&](std::size_t i) {
        maps[i] = apply_hop(maps[i], hop);
        if (u == 1) maps[i] = max_pool_2x2(maps[i]);
      });
    }
    f.hops_.push_back(std::move(hop));
  }
  return f;
}

ImageTensor RefinementFeatures::extract(const ImageTensor& img) const {
  check(hops_.size() == 4, ErrorCode::kNotFitted, "refinement features not fitted");
  check(img.height() % 2 == 0 && img.width() % 2 == 0, ErrorCode::kInvalidInput,
        "refinement input needs even spatial size");
  const ImageTensor h1 = apply_hop(img, hops_[0]);
  const ImageTensor h2 = apply_hop(h1, hops_[1]);
  const ImageTensor h3 = apply_hop(max_pool_2x2(h2), hops_[2]);
  const ImageTensor h4 = apply_hop(h3, hops_[3]);
  const ImageTensor up = upsampling_ == Upsampling::kNearest ? upsample_nearest(h4, 2)
                                                             : upsample_bilinear(h4, 2);
  return concat_channels(h2, up);
}

int RefinementFeatures::dim() const {
  check(hops_.size() == 4, ErrorCode::kNotFitted, "refinement features not fitted");
  return hops_[1].kept_channels + hops_[3].kept_channels;
}

void RefinementFeatures::save(const BlobWriter& w) const {
  for (std::size_t u = 0; u < hops_.size(); ++u) hops_[u].save(w.sub("hop" + std::to_string(u + 1)));
  w.put_int("upsampling", upsampling_ == Upsampling::kBilinear ? 1 : 0);
}

RefinementFeatures RefinementFeatures::load(const BlobReader& r) {
  RefinementFeatures f;
  for (int u = 0; u < 4; ++u) f.hops_.push_back(HopUnit::load(r.sub("hop" + std::to_string(u + 1))));
  f.upsampling_ = r.integer("upsampling") == 1 ? Upsampling::kBilinear : Upsampling::kNearest;
  return f;
}

std::unique_ptr<SoftClassifier> train_refiner(const RefinementSampleSet& samples,
                                              std::span<const ImageTensor> images,
                                              const RefinementFeatures& features,
                                              const GbdtConfig& config, std::size_t max_samples,
                                              std::uint64_t seed) {
  check(!samples.positives.empty() && !samples.negatives.empty(), ErrorCode::kDegenerateLabels,
        "refiner needs both positive and negative pixels");
  std::vector<PixelRef> pos = samples.positives;
  std::vector<PixelRef> neg = samples.negatives;
  const std::size_t per_class = std::max<std::size_t>(1, max_samples / 2);
  std::mt19937_64 rng(seed);
  auto thin = [&](std::vector<PixelRef>& v) {
    if (v.size() <= per_class) return;
    std::vector<PixelRef> kept;
    std::sample(v.begin(), v.end(), std::back_inserter(kept), per_class, rng);
    v.swap(kept);
  };
  thin(pos);
  thin(neg);

  // Group rows per image so each image's features are computed once.
  struct Row {
    PixelRef ref;
    int label;
  };
  std::vector<Row> rows;
  rows.reserve(pos.size() + neg.size());
  for (const auto& p : pos) rows.push_back({p, 1});
  for (const auto& n : neg) rows.push_back({n, 0});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.ref.image < b.ref.image; });
  std::vector<std::size_t> run_begin(images.size() + 1, 0);
  for (const auto& r : rows) {
    check(r.ref.image < images.size(), ErrorCode::kInvalidInput, "sample refers to a missing image");
    ++run_begin[r.ref.image + 1];
  }
  for (std::size_t i = 0; i < images.size(); ++i) run_begin[i + 1] += run_begin[i];

  RowMatrixF x(static_cast<Eigen::Index>(rows.size()), features.dim());
  std::vector<int> y(rows.size());
  parallel_for(images.size(), [&](std::size_t i) {
    if (run_begin[i] == run_begin[i + 1]) return;
    const ImageTensor f = features.extract(images[i]);
    for (std::size_t k = run_begin[i]; k < run_begin[i + 1]; ++k) {
      auto v = f.pixel(rows[k].ref.row, rows[k].ref.col);
      std::copy(v.begin(), v.end(), x.row(static_cast<Eigen::Index>(k)).data());
      y[k] = rows[k].label;
    }
  });
  return std::make_unique<GradientBoostedTrees>(GradientBoostedTrees::fit(x, y, 2, config));
}

AttentionMap predict_attention_map(const ImageTensor& img, const RefinementFeatures& features,
                                   const SoftClassifier& refiner) {
  const ImageTensor f = features.extract(img);
  AttentionMap map;
  map.height = f.height();
  map.width = f.width();
  map.values.resize(static_cast<std::size_t>(map.height) * map.width);
  double p[2];
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      refiner.predict_proba(f.pixel(r, c), p);
      map.at(r, c) = static_cast<float>(std::clamp(p[1], 0.0, 1.0));
    }
  }
  return map;
}

Step2Model Step2Model::fit(std::span<const ImageTensor> images,
                           std::span<const AttentionWindow> windows, const Step2Config& config) {
  check(images.size() == windows.size(), ErrorCode::kInvalidInput, "one window per image required");
  check(!images.empty(), ErrorCode::kDegenerateInput, "no images for the refiner");
  Step2Model m;
  const std::size_t n_fit = std::min(images.size(), config.features.fit_images);
  m.features_ = RefinementFeatures::fit(images.first(n_fit), config.features);
  const auto samples = sample_refinement_pixels(windows, images.front().height(),
                                                images.front().width(), config.margin, config.seed);
  m.refiner_ = train_refiner(samples, images, m.features_, config.gbdt, config.max_samples,
                             config.seed + 1);
  return m;
}

Step2Model Step2Model::fit(const LabeledDataset& train, const Step1Model& step1,
                           const Step2Config& config) {
  train.validate();
  const auto idx = balanced_indices(train.labels, train.num_classes(), config.subset_images, config.seed);
  // Interleave classes so the head used for hop fitting stays balanced.
  std::vector<std::size_t> order(idx.begin(), idx.end());
  std::mt19937_64 rng(config.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<ImageTensor> images;
  images.reserve(order.size());
  for (auto i : order) images.push_back(train.images[i]);
  std::vector<AttentionWindow> windows(images.size());
  parallel_for(images.size(), [&](std::size_t i) { windows[i] = step1.select(images[i]); });
  return fit(images, windows, config);
}

AttentionMap Step2Model::predict(const ImageTensor& img) const {
  check(refiner_ != nullptr, ErrorCode::kNotFitted, "refiner not fitted");
  return predict_attention_map(img, features_, *refiner_);
}

void Step2Model::save(const BlobWriter& w) const {
  check(refiner_ != nullptr, ErrorCode::kNotFitted, "refiner not fitted");
  features_.save(w.sub("features"));
  refiner_->save(w.sub("refiner"));
}

Step2Model Step2Model::load(const BlobReader& r) {
  Step2Model m;
  m.features_ = RefinementFeatures::load(r.sub("features"));
  m.refiner_ = load_soft_classifier(r.sub("refiner"));
  return m;
}

}  // namespace sal
