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

#include "sal/sal_step1.h"
#include "sal/sal_step2.h"
#include "sal/sal_step3.h"

namespace sal {

struct LocalizerConfig {
  Step1Config step1;
  Step2Config step2;
  SalConfig step3;
};

// Everything one image passes through on its way to the final crop.
struct LocalizationResult {
  AttentionWindow window;
  AttentionMap attention;
  BinaryMask mask;
  BinaryMask cleaned;
  BBox raw_box;
  BBox box;
  bool used_fallback = false;  // no foreground survived cleaning
  ImageTensor crop;
};

// Three-step attention localizer: preliminary window, refined map, final box.
class Localizer {
 public:
  static Localizer fit(const LabeledDataset& train, const LocalizerConfig& config);
  Localizer(Step1Model step1, Step2Model step2, SalConfig step3);

  LocalizationResult localize(const ImageTensor& img) const;

  const Step1Model& step1() const { return step1_; }
  const Step2Model& step2() const { return step2_; }
  const SalConfig& config() const { return step3_; }

  void save(const BlobWriter& w) const;
  static Localizer load(const BlobReader& r);

 private:
  Step1Model step1_;
  Step2Model step2_;
  SalConfig step3_;
};

// Binarize -> clean -> box (window fallback) -> regularize -> crop.
LocalizationResult finalize_region(const ImageTensor& img, const AttentionWindow& window,
                                   AttentionMap attention, const SalConfig& config);

}  // namespace sal
