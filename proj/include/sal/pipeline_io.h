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
#include <map>
#include <span>
#include <string>
#include <vector>

namespace sal {

enum class DType : std::uint8_t { kU8 = 1, kI32 = 2, kI64 = 3, kF32 = 4, kF64 = 5 };

std::size_t dtype_size(DType t);

// One named tensor: element type, shape, and little-endian payload bytes.
struct Blob {
  DType dtype = DType::kU8;
  std::vector<std::uint64_t> shape;
  std::vector<std::uint8_t> bytes;

  std::uint64_t element_count() const;
  bool operator==(const Blob&) const = default;
};

inline constexpr char kPipelineMagic[8] = {'S', 'A', 'L', 'P', 'I', 'P', 'E', '\0'};
inline constexpr std::uint32_t kPipelineFormatVersion = 1;

// Self-describing container of named, typed tensors. Names use '/' to group
// the parts of one model ("sal/step1/cascade/hop3/kernels").
struct TrainedPipeline {
  std::uint32_t version = kPipelineFormatVersion;
  std::map<std::string, Blob> blobs;

  bool has(const std::string& name) const { return blobs.contains(name); }
  bool has_prefix(const std::string& prefix) const;
  bool operator==(const TrainedPipeline&) const = default;
};

// Wire layout: magic[8] | version u32 | count u32 | count x (name_len u32,
// name bytes, dtype u8, ndim u32, dims u64[ndim], payload_len u64, payload).
// All integers little-endian.
std::vector<std::uint8_t> serialize_pipeline(const TrainedPipeline& p);
TrainedPipeline deserialize_pipeline(std::span<const std::uint8_t> bytes);

void save_pipeline(const TrainedPipeline& p, const std::filesystem::path& path);
TrainedPipeline load_pipeline(const std::filesystem::path& path);

// Typed writer scoped to a name prefix.
class BlobWriter {
 public:
  BlobWriter(TrainedPipeline& p, std::string prefix) : p_(&p), prefix_(std::move(prefix)) {}

  BlobWriter sub(const std::string& name) const { return {*p_, prefix_ + name + "/"}; }

  void put_f32(const std::string& key, std::span<const float> v, std::vector<std::uint64_t> shape = {}) const;
  void put_f64(const std::string& key, std::span<const double> v, std::vector<std::uint64_t> shape = {}) const;
  void put_i32(const std::string& key, std::span<const std::int32_t> v, std::vector<std::uint64_t> shape = {}) const;
  void put_i64(const std::string& key, std::span<const std::int64_t> v, std::vector<std::uint64_t> shape = {}) const;
  void put_string(const std::string& key, const std::string& s) const;
  void put_scalar(const std::string& key, double v) const { put_f64(key, std::span<const double>(&v, 1)); }
  void put_int(const std::string& key, std::int64_t v) const { put_i64(key, std::span<const std::int64_t>(&v, 1)); }

 private:
  TrainedPipeline* p_;
  std::string prefix_;
};

// Typed reader scoped to a name prefix; a missing name or wrong dtype fails
// with corrupt-format.
class BlobReader {
 public:
  BlobReader(const TrainedPipeline& p, std::string prefix) : p_(&p), prefix_(std::move(prefix)) {}

  BlobReader sub(const std::string& name) const { return {*p_, prefix_ + name + "/"}; }
  bool has(const std::string& key) const { return p_->has(prefix_ + key); }
  bool has_section(const std::string& name) const { return p_->has_prefix(prefix_ + name + "/"); }
  const std::string& prefix() const { return prefix_; }

  std::vector<float> f32(const std::string& key) const;
  std::vector<double> f64(const std::string& key) const;
  std::vector<std::int32_t> i32(const std::string& key) const;
  std::vector<std::int64_t> i64(const std::string& key) const;
  std::string string(const std::string& key) const;
  double scalar(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  const std::vector<std::uint64_t>& shape(const std::string& key) const;

 private:
  const Blob& blob(const std::string& key, DType expected) const;

  const TrainedPipeline* p_;
  std::string prefix_;
};

}  // namespace sal
