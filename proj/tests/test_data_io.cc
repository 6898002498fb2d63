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

#include <filesystem>
#include <functional>
#include <fstream>
#include <random>

#include "doctest.h"
#include "sal/cifar.h"
#include "sal/pipeline_io.h"
#include "sal/status.h"
#include "test_util.h"

namespace fs = std::filesystem;
using namespace sal;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("sal_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIoError;
}

// Record whose pixel bytes encode their own position: byte(i) = (i * 7 + 3) % 256.
std::vector<std::uint8_t> patterned_record(std::uint8_t label) {
  std::vector<std::uint8_t> rec(kCifarRecordBytes);
  rec[0] = label;
  for (std::size_t i = 0; i < kCifarPixelBytes; ++i) rec[1 + i] = static_cast<std::uint8_t>((i * 7 + 3) % 256);
  return rec;
}

}  // namespace

TEST_SUITE("data_io") {

TEST_CASE("record decode follows the planar layout") {
  const auto rec = patterned_record(7);
  int label = -1;
  const ImageTensor img = decode_cifar10_record(rec, &label);
  CHECK(label == 7);
  REQUIRE(img.height() == 32);
  REQUIRE(img.width() == 32);
  REQUIRE(img.channels() == 3);
  // Independent index formula: channel plane, then row, then column.
  for (int ch = 0; ch < 3; ++ch)
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c) {
        const std::size_t offset = 1 + static_cast<std::size_t>(ch) * 1024 + r * 32 + c;
        CHECK(img.at(r, c, ch) == static_cast<float>(rec[offset]));
      }
  std::vector<std::uint8_t> back(kCifarRecordBytes);
  encode_cifar10_record(img, label, back);
  CHECK(back == rec);
}

TEST_CASE("batch files: labels, corruption, missing files") {
  const fs::path dir = temp_dir("cifar");
  std::vector<std::uint8_t> bytes;
  for (std::uint8_t l : {7, 0, 9}) {
    const auto rec = patterned_record(l);
    bytes.insert(bytes.end(), rec.begin(), rec.end());
  }
  write_bytes(dir / "test_batch.bin", bytes);
  const LabeledDataset ds = load_cifar10(dir, Split::kTest);
  REQUIRE(ds.size() == 3);
  CHECK(ds.labels == std::vector<int>{7, 0, 9});
  CHECK(ds.num_classes() == 10);
  CHECK(ds.images[0].min_value() >= 0.0f);
  CHECK(ds.images[0].max_value() <= 255.0f);

  bytes.pop_back();
  write_bytes(dir / "short.bin", bytes);
  CHECK(code_of([&] { read_cifar10_batch(dir / "short.bin"); }) == ErrorCode::kCorruptFormat);
  write_bytes(dir / "empty.bin", {});
  CHECK(code_of([&] { read_cifar10_batch(dir / "empty.bin"); }) == ErrorCode::kCorruptFormat);
  CHECK(code_of([&] { load_cifar10(dir, Split::kTrain); }) == ErrorCode::kDatasetNotFound);
  CHECK(code_of([&] { load_cifar10(dir / "nowhere", Split::kTest); }) == ErrorCode::kDatasetNotFound);
}

TEST_CASE("subset_pairs keeps order and relabels") {
  LabeledDataset ds;
  ds.class_names = cifar10_class_names();
  const std::vector<int> labels = {3, 5, 1, 5, 3, 3, 9};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ds.images.emplace_back(2, 2, 3, static_cast<float>(i));
    ds.labels.push_back(labels[i]);
  }
  const LabeledDataset pair = subset_pairs(ds, 3, 5);
  CHECK(pair.labels == std::vector<int>{0, 1, 1, 0, 0});
  std::vector<float> ids;
  for (const auto& img : pair.images) ids.push_back(img.at(0, 0, 0));
  CHECK(ids == std::vector<float>{0, 1, 3, 4, 5});
  CHECK(pair.num_classes() == 2);
  CHECK(code_of([&] { subset_pairs(ds, 3, 3); }) == ErrorCode::kInvalidClass);
  CHECK(code_of([&] { subset_pairs(ds, 3, 10); }) == ErrorCode::kInvalidClass);
}

TEST_CASE("balanced and stratified index helpers") {
  std::vector<int> labels;
  for (int i = 0; i < 300; ++i) labels.push_back(i % 3 == 0 ? 0 : (i % 3 == 1 ? 1 : 2));
  const auto idx = balanced_indices(labels, 3, 90, 5);
  REQUIRE(idx.size() == 90);
  std::vector<int> counts(3, 0);
  for (auto i : idx) ++counts[labels[i]];
  CHECK(counts == std::vector<int>{30, 30, 30});
  CHECK(std::is_sorted(idx.begin(), idx.end()));
  CHECK(balanced_indices(labels, 3, 90, 5) == idx);

  std::vector<std::size_t> kept, held;
  stratified_split(labels, 3, 0.1, 9, &kept, &held);
  CHECK(kept.size() + held.size() == labels.size());
  CHECK(held.size() == 30);
}

TEST_CASE("pipeline container round-trip and error paths") {
  TrainedPipeline p;
  BlobWriter w(p, "");
  const std::vector<float> f = {1.5f, -2.25f, 3.0f, 0.0f, 1e-7f, 6.0f};
  const std::vector<double> d = {0.1, 0.2, 1e300};
  w.sub("a").put_f32("weights", f, {2, 3});
  w.sub("a").sub("b").put_f64("values", d);
  w.put_int("count", -42);
  w.put_string("name", "hop");
  const fs::path dir = temp_dir("pipe");
  save_pipeline(p, dir / "p.salp");
  const TrainedPipeline q = load_pipeline(dir / "p.salp");
  CHECK(q == p);
  BlobReader r(q, "");
  CHECK(r.sub("a").f32("weights") == f);
  CHECK(r.sub("a").shape("weights") == std::vector<std::uint64_t>{2, 3});
  CHECK(r.sub("a").sub("b").f64("values") == d);
  CHECK(r.integer("count") == -42);
  CHECK(r.string("name") == "hop");
  CHECK(code_of([&] { r.f64("count"); }) == ErrorCode::kCorruptFormat);
  CHECK(code_of([&] { r.f64("missing"); }) == ErrorCode::kCorruptFormat);

  write_bytes(dir / "empty.salp", {});
  CHECK(code_of([&] { load_pipeline(dir / "empty.salp"); }) == ErrorCode::kCorruptFormat);

  auto bytes = serialize_pipeline(p);
  auto future = bytes;
  future[8] = 2;  // version u32 follows the 8-byte magic
  CHECK(code_of([&] { deserialize_pipeline(future); }) == ErrorCode::kUnsupportedVersion);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK(code_of([&] { deserialize_pipeline(truncated); }) == ErrorCode::kCorruptFormat);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(code_of([&] { deserialize_pipeline(bad_magic); }) == ErrorCode::kCorruptFormat);
}

TEST_CASE("pipeline bytes are little-endian") {
  TrainedPipeline p;
  BlobWriter(p, "").put_i32("x", std::vector<std::int32_t>{0x01020304});
  const auto bytes = serialize_pipeline(p);
  CHECK(bytes[8] == 1);
  CHECK(bytes[9] == 0);
  CHECK(bytes[12] == 1);  // one blob
  const std::vector<std::uint8_t> tail(bytes.end() - 4, bytes.end());
  CHECK(tail == std::vector<std::uint8_t>{4, 3, 2, 1});
}

TEST_CASE("tensor helpers") {
  ImageTensor a(4, 4, 1);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) a.at(r, c, 0) = static_cast<float>(r * 4 + c);
  const ImageTensor pooled = max_pool_2x2(a);
  CHECK(pooled.height() == 2);
  CHECK(pooled.at(0, 0, 0) == 5.0f);
  CHECK(pooled.at(1, 1, 0) == 15.0f);
  const ImageTensor up = upsample_nearest(pooled, 2);
  CHECK(up.at(3, 2, 0) == pooled.at(1, 1, 0));
  const ImageTensor cat = concat_channels(a, up);
  CHECK(cat.channels() == 2);
  CHECK(cat.at(2, 1, 0) == a.at(2, 1, 0));
  CHECK(cat.at(2, 1, 1) == up.at(2, 1, 0));

  // Nearest-neighbour x2 of a 16x16 map: (5, 5) reads source (2, 2).
  std::mt19937_64 rng(3);
  const ImageTensor src = testing::random_image(16, 16, 2, rng);
  const ImageTensor big = upsample_nearest(src, 2);
  CHECK(big.height() == 32);
  CHECK(big.at(5, 5, 1) == src.at(2, 2, 1));
}

}  // TEST_SUITE
