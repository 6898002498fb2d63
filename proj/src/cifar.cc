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

#include "sal/cifar.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "sal/status.h"

namespace sal {

namespace fs = std::filesystem;

void LabeledDataset::validate() const {
  check(images.size() == labels.size(), ErrorCode::kInvalidInput,
        "dataset has " + std::to_string(images.size()) + " images but " +
            std::to_string(labels.size()) + " labels");
  for (int label : labels) {
    check(label >= 0 && label < num_classes(), ErrorCode::kInvalidInput,
          "label " + std::to_string(label) + " outside class range");
  }
}

const std::vector<std::string>& cifar10_class_names() {
  static const std::vector<std::string> kNames = {
      "airplane", "automobile", "bird", "cat", "deer",
      "dog",      "frog",       "horse", "ship", "truck"};
  return kNames;
}

int cifar10_class_index(const std::string& name) {
  const auto& names = cifar10_class_names();
  auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

ImageTensor decode_cifar10_record(std::span<const std::uint8_t> record, int* label) {
  check(record.size() == kCifarRecordBytes, ErrorCode::kCorruptFormat,
        "record of " + std::to_string(record.size()) + " bytes");
  *label = record[0];
  ImageTensor img(kCifarSide, kCifarSide, kCifarChannels);
  const std::uint8_t* planes = record.data() + 1;
  for (int ch = 0; ch < kCifarChannels; ++ch) {
    for (int r = 0; r < kCifarSide; ++r) {
      for (int c = 0; c < kCifarSide; ++c) {
        img.at(r, c, ch) = planes[(ch * kCifarSide + r) * kCifarSide + c];
      }
    }
  }
  return img;
}

void encode_cifar10_record(const ImageTensor& image, int label, std::span<std::uint8_t> record) {
  check(image.height() == kCifarSide && image.width() == kCifarSide &&
            image.channels() == kCifarChannels,
        ErrorCode::kInvalidInput, "CIFAR records hold 32x32x3 images");
  check(label >= 0 && label < 256, ErrorCode::kInvalidInput, "label does not fit a byte");
  check(record.size() == kCifarRecordBytes, ErrorCode::kInvalidInput, "bad record buffer");
  record[0] = static_cast<std::uint8_t>(label);
  for (int ch = 0; ch < kCifarChannels; ++ch) {
    for (int r = 0; r < kCifarSide; ++r) {
      for (int c = 0; c < kCifarSide; ++c) {
        const float v = std::clamp(std::round(image.at(r, c, ch)), 0.0f, 255.0f);
        record[1 + (ch * kCifarSide + r) * kCifarSide + c] = static_cast<std::uint8_t>(v);
      }
    }
  }
}

LabeledDataset read_cifar10_batch(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  check(static_cast<bool>(in), ErrorCode::kDatasetNotFound, "cannot open " + file.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  check(!bytes.empty() && bytes.size() % kCifarRecordBytes == 0, ErrorCode::kCorruptFormat,
        file.string() + ": size " + std::to_string(bytes.size()) +
            " is not a whole number of 3073-byte records");
  LabeledDataset ds;
  ds.class_names = cifar10_class_names();
  const std::size_t n = bytes.size() / kCifarRecordBytes;
  ds.images.reserve(n);
  ds.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    int label = 0;
    ds.images.push_back(decode_cifar10_record(
        std::span<const std::uint8_t>(bytes.data() + i * kCifarRecordBytes, kCifarRecordBytes),
        &label));
    check(label < ds.num_classes(), ErrorCode::kCorruptFormat,
          file.string() + ": record " + std::to_string(i) + " has label " +
              std::to_string(label));
    ds.labels.push_back(label);
  }
  return ds;
}

void write_cifar10_batch(const fs::path& file, std::span<const ImageTensor> images,
                         std::span<const int> labels) {
  check(images.size() == labels.size(), ErrorCode::kInvalidInput, "images/labels mismatch");
  std::vector<std::uint8_t> bytes(images.size() * kCifarRecordBytes);
  for (std::size_t i = 0; i < images.size(); ++i) {
    encode_cifar10_record(images[i], labels[i],
                          std::span<std::uint8_t>(bytes.data() + i * kCifarRecordBytes,
                                                  kCifarRecordBytes));
  }
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  check(static_cast<bool>(out), ErrorCode::kIoError, "cannot write " + file.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  check(static_cast<bool>(out), ErrorCode::kIoError, "short write to " + file.string());
}

namespace {

fs::path resolve_batch_dir(const fs::path& dir) {
  check(fs::is_directory(dir), ErrorCode::kDatasetNotFound,
        "dataset directory " + dir.string() + " does not exist");
  if (fs::exists(dir / "test_batch.bin") || fs::exists(dir / "data_batch_1.bin")) return dir;
  const fs::path nested = dir / "cifar-10-batches-bin";
  if (fs::is_directory(nested)) return nested;
  return dir;
}

}  // namespace

LabeledDataset load_cifar10(const fs::path& dir, Split split) {
  const fs::path root = resolve_batch_dir(dir);
  std::vector<fs::path> files;
  if (split == Split::kTrain) {
    for (int b = 1; b <= 5; ++b) files.push_back(root / ("data_batch_" + std::to_string(b) + ".bin"));
  } else {
    files.push_back(root / "test_batch.bin");
  }
  LabeledDataset ds;
  ds.class_names = cifar10_class_names();
  for (const auto& f : files) {
    check(fs::exists(f), ErrorCode::kDatasetNotFound, "missing batch file " + f.string());
    LabeledDataset part = read_cifar10_batch(f);
    std::move(part.images.begin(), part.images.end(), std::back_inserter(ds.images));
    ds.labels.insert(ds.labels.end(), part.labels.begin(), part.labels.end());
  }
  return ds;
}

LabeledDataset subset_pairs(const LabeledDataset& ds, int class_a, int class_b) {
  const int k = ds.num_classes();
  check(class_a >= 0 && class_a < k && class_b >= 0 && class_b < k, ErrorCode::kInvalidClass,
        "class index out of range");
  check(class_a != class_b, ErrorCode::kInvalidClass, "pair classes must differ");
  LabeledDataset out;
  out.class_names = {ds.class_names[class_a], ds.class_names[class_b]};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.labels[i] == class_a || ds.labels[i] == class_b) {
      out.images.push_back(ds.images[i]);
      out.labels.push_back(ds.labels[i] == class_a ? 0 : 1);
    }
  }
  return out;
}

LabeledDataset take_per_class(const LabeledDataset& ds, std::size_t per_class) {
  std::vector<std::size_t> counts(ds.num_classes(), 0);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (counts[ds.labels[i]]++ < per_class) keep.push_back(i);
  }
  return select(ds, keep);
}

LabeledDataset select(const LabeledDataset& ds, std::span<const std::size_t> indices) {
  LabeledDataset out;
  out.class_names = ds.class_names;
  out.images.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    check(i < ds.size(), ErrorCode::kInvalidInput, "select: index out of range");
    out.images.push_back(ds.images[i]);
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

namespace {

std::vector<std::vector<std::size_t>> shuffled_by_class(std::span<const int> labels,
                                                        int num_classes, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::mt19937_64 rng(seed);
  for (auto& members : by_class) std::shuffle(members.begin(), members.end(), rng);
  return by_class;
}

}  // namespace

std::vector<std::size_t> balanced_indices(std::span<const int> labels, int num_classes,
                                          std::size_t max_total, std::uint64_t seed) {
  std::vector<std::size_t> out;
  if (labels.size() <= max_total) {
    out.resize(labels.size());
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
  }
  auto by_class = shuffled_by_class(labels, num_classes, seed);
  for (std::size_t round = 0; out.size() < max_total; ++round) {
    bool any = false;
    for (const auto& members : by_class) {
      if (round < members.size() && out.size() < max_total) {
        out.push_back(members[round]);
        any = true;
      }
    }
    if (!any) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

void stratified_split(std::span<const int> labels, int num_classes, double fraction,
                      std::uint64_t seed, std::vector<std::size_t>* kept,
                      std::vector<std::size_t>* held_out) {
  check(fraction >= 0.0 && fraction < 1.0, ErrorCode::kInvalidConfig,
        "held-out fraction must lie in [0, 1)");
  kept->clear();
  held_out->clear();
  auto by_class = shuffled_by_class(labels, num_classes, seed);
  for (const auto& members : by_class) {
    const auto n_out = static_cast<std::size_t>(std::llround(fraction * members.size()));
    held_out->insert(held_out->end(), members.begin(), members.begin() + n_out);
    kept->insert(kept->end(), members.begin() + n_out, members.end());
  }
  std::sort(kept->begin(), kept->end());
  std::sort(held_out->begin(), held_out->end());
}

}  // namespace sal
