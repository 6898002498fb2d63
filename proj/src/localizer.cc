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

#include "sal/localizer.h"

#include <utility>

#include "sal/status.h"

namespace sal {

LocalizationResult finalize_region(const ImageTensor& img, const AttentionWindow& window,
                                   AttentionMap attention, const SalConfig& config) {
  config.validate();
  LocalizationResult res;
  res.window = window;
  res.attention = std::move(attention);
  res.mask = binarize(res.attention, config.t_att);
  res.cleaned = median_clean(res.mask, config.median_radius);
  const auto found = config.box_mode == BoxMode::kTightest ? tightest_bbox(res.cleaned)
                                                           : occupancy_bbox(res.cleaned);
  res.used_fallback = !found.has_value();
  res.raw_box = found.value_or(window_box(window));
  res.box = regularize_bbox(res.raw_box, config.min_side, img.height(), img.width());
  res.crop = crop_resize(img, res.box, config.output_size);
  return res;
}

Localizer::Localizer(Step1Model step1, Step2Model step2, SalConfig step3)
    : step1_(std::move(step1)), step2_(std::move(step2)), step3_(step3) {
  step3_.validate();
}

Localizer Localizer::fit(const LabeledDataset& train, const LocalizerConfig& config) {
  config.step3.validate();
  Step1Model step1 = Step1Model::fit(train, config.step1);
  Step2Model step2 = Step2Model::fit(train, step1, config.step2);
  return Localizer(std::move(step1), std::move(step2), config.step3);
}

LocalizationResult Localizer::localize(const ImageTensor& img) const {
  const AttentionWindow window = step1_.select(img);
  return finalize_region(img, window, step2_.predict(img), step3_);
}

void Localizer::save(const BlobWriter& w) const {
  step1_.save(w.sub("step1"));
  step2_.save(w.sub("step2"));
  const BlobWriter c = w.sub("step3");
  c.put_scalar("t_att", step3_.t_att);
  c.put_int("median_radius", step3_.median_radius);
  c.put_int("min_side", step3_.min_side);
  c.put_int("output_size", step3_.output_size);
  c.put_int("box_mode", step3_.box_mode == BoxMode::kOccupancy ? 1 : 0);
}

Localizer Localizer::load(const BlobReader& r) {
  const BlobReader c = r.sub("step3");
  SalConfig cfg;
  cfg.t_att = c.scalar("t_att");
  cfg.median_radius = static_cast<int>(c.integer("median_radius"));
  cfg.min_side = static_cast<int>(c.integer("min_side"));
  cfg.output_size = static_cast<int>(c.integer("output_size"));
  cfg.box_mode = c.integer("box_mode") == 1 ? BoxMode::kOccupancy : BoxMode::kTightest;
  return Localizer(Step1Model::load(r.sub("step1")), Step2Model::load(r.sub("step2")), cfg);
}

}  // namespace sal
