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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sal/tensor.h"

namespace sal {

enum class Split { kTrain, kTest };

struct LabeledDataset {
  std::vector<ImageTensor> images;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  std::size_t size() const { return images.size(); }
  int num_classes() const { return static_cast<int>(class_names.size()); }

  // Throws invalid-input when images/labels disagree in length or a label is
  // outside [0, num_classes).
  void validate() const;
};

inline constexpr int kCifarSide = 32;
inline constexpr int kCifarChannels = 3;
inline constexpr std::size_t kCifarPixelBytes = 3072;
inline constexpr std::size_t kCifarRecordBytes = 3073;

const std::vector<std::string>& cifar10_class_names();

// Index of a CIFAR-10 class by its name ("cat"), or -1.
int cifar10_class_index(const std::string& name);

// Decodes one 3073-byte record (label byte, then planar R, G, B rows) into a
// channel-last image. Pixel values are preserved exactly.
ImageTensor decode_cifar10_record(std::span<const std::uint8_t> record, int* label);

// Inverse of decode: values are rounded and clamped to [0, 255].
void encode_cifar10_record(const ImageTensor& image, int label, std::span<std::uint8_t> record);

// Reads one binary batch file; file length must be a multiple of 3073.
LabeledDataset read_cifar10_batch(const std::filesystem::path& file);

void write_cifar10_batch(const std::filesystem::path& file, std::span<const ImageTensor> images,
                         std::span<const int> labels);

// Loads data_batch_{1..5}.bin (train) or test_batch.bin (test) from `dir`, or
// from `dir`/cifar-10-batches-bin when the archive was extracted in place.
LabeledDataset load_cifar10(const std::filesystem::path& dir, Split split);

// Keeps only images of the two classes, relabelled class_a -> 0, class_b -> 1,
// in original order.
LabeledDataset subset_pairs(const LabeledDataset& ds, int class_a, int class_b);

// First `per_class` images of every class, original order preserved.
LabeledDataset take_per_class(const LabeledDataset& ds, std::size_t per_class);

// Selects rows by index, preserving the order given.
LabeledDataset select(const LabeledDataset& ds, std::span<const std::size_t> indices);

// Up to `max_total` indices drawn round-robin across classes from seeded
// per-class shuffles; returned sorted ascending. All indices when the dataset
// already fits.
std::vector<std::size_t> balanced_indices(std::span<const int> labels, int num_classes,
                                          std::size_t max_total, std::uint64_t seed);

// Deterministic stratified split: `fraction` of each class goes to `held_out`.
void stratified_split(std::span<const int> labels, int num_classes, double fraction,
                      std::uint64_t seed, std::vector<std::size_t>* kept,
                      std::vector<std::size_t>* held_out);

}  // namespace sal
