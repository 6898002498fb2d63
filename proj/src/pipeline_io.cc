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

#include "sal/pipeline_io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sal/status.h"

namespace sal {

std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::kU8: return 1;
    case DType::kI32: return 4;
    case DType::kI64: return 8;
    case DType::kF32: return 4;
    case DType::kF64: return 8;
  }
  fail(ErrorCode::kCorruptFormat, "unknown dtype tag");
}

std::uint64_t Blob::element_count() const {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

bool TrainedPipeline::has_prefix(const std::string& prefix) const {
  auto it = blobs.lower_bound(prefix);
  return it != blobs.end() && it->first.compare(0, prefix.size(), prefix) == 0;
}

namespace {

// Values are stored little-endian; on a big-endian host each element is
// byte-reversed on the way in and out.
void to_little_endian(std::uint8_t* data, std::size_t count, std::size_t width) {
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint8_t* e = data + i * width;
      for (std::size_t a = 0, b = width - 1; a < b; ++a, --b) std::swap(e[a], e[b]);
    }
  } else {
    (void)data;
    (void)count;
    (void)width;
  }
}

template <typename T>
Blob make_blob(DType dtype, std::span<const T> v, std::vector<std::uint64_t> shape) {
  Blob b;
  b.dtype = dtype;
  b.shape = shape.empty() ? std::vector<std::uint64_t>{v.size()} : std::move(shape);
  check(b.element_count() == v.size(), ErrorCode::kInvalidInput, "blob shape/length mismatch");
  b.bytes.resize(v.size_bytes());
  if (!v.empty()) std::memcpy(b.bytes.data(), v.data(), v.size_bytes());
  to_little_endian(b.bytes.data(), v.size(), sizeof(T));
  return b;
}

template <typename T>
std::vector<T> read_blob(const Blob& b) {
  std::vector<T> out(b.bytes.size() / sizeof(T));
  std::vector<std::uint8_t> tmp = b.bytes;
  to_little_endian(tmp.data(), out.size(), sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), tmp.data(), tmp.size());
  return out;
}

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    to_little_endian(raw, 1, sizeof(T));
    out_.insert(out_.end(), raw, raw + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    to_little_endian(raw, 1, sizeof(T));
    T v;
    std::memcpy(&v, raw, sizeof(T));
    return v;
  }
  std::span<const std::uint8_t> get_bytes(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    check(n <= in_.size() - pos_, ErrorCode::kCorruptFormat, "pipeline file truncated");
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

bool valid_dtype(std::uint8_t tag) { return tag >= 1 && tag <= 5; }

}  // namespace

std::vector<std::uint8_t> serialize_pipeline(const TrainedPipeline& p) {
  ByteWriter w;
  w.put_bytes(kPipelineMagic, sizeof(kPipelineMagic));
  w.put<std::uint32_t>(p.version);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(p.blobs.size()));
  for (const auto& [name, blob] : p.blobs) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.put_bytes(name.data(), name.size());
    w.put<std::uint8_t>(static_cast<std::uint8_t>(blob.dtype));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(blob.shape.size()));
    for (auto d : blob.shape) w.put<std::uint64_t>(d);
    w.put<std::uint64_t>(blob.bytes.size());
    w.put_bytes(blob.bytes.data(), blob.bytes.size());
  }
  return w.take();
}

TrainedPipeline deserialize_pipeline(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.get_bytes(sizeof(kPipelineMagic));
  check(std::memcmp(magic.data(), kPipelineMagic, sizeof(kPipelineMagic)) == 0,
        ErrorCode::kCorruptFormat, "bad pipeline magic");
  TrainedPipeline p;
  p.version = r.get<std::uint32_t>();
  check(p.version == kPipelineFormatVersion, ErrorCode::kUnsupportedVersion,
        "pipeline format version " + std::to_string(p.version) + ", expected " +
            std::to_string(kPipelineFormatVersion));
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint32_t>();
    auto name_bytes = r.get_bytes(name_len);
    std::string name(name_bytes.begin(), name_bytes.end());
    const auto tag = r.get<std::uint8_t>();
    check(valid_dtype(tag), ErrorCode::kCorruptFormat, "unknown dtype tag in " + name);
    Blob b;
    b.dtype = static_cast<DType>(tag);
    const auto ndim = r.get<std::uint32_t>();
    check(ndim <= 16, ErrorCode::kCorruptFormat, "implausible rank for " + name);
    for (std::uint32_t d = 0; d < ndim; ++d) b.shape.push_back(r.get<std::uint64_t>());
    const auto len = r.get<std::uint64_t>();
    check(len == b.element_count() * dtype_size(b.dtype), ErrorCode::kCorruptFormat,
          "payload length mismatch for " + name);
    auto payload = r.get_bytes(len);
    b.bytes.assign(payload.begin(), payload.end());
    check(p.blobs.emplace(std::move(name), std::move(b)).second, ErrorCode::kCorruptFormat,
          "duplicate blob name");
  }
  check(r.done(), ErrorCode::kCorruptFormat, "trailing bytes after last blob");
  return p;
}

void save_pipeline(const TrainedPipeline& p, const std::filesystem::path& path) {
  const auto bytes = serialize_pipeline(p);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check(static_cast<bool>(out), ErrorCode::kIoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  check(static_cast<bool>(out), ErrorCode::kIoError, "short write to " + path.string());
}

TrainedPipeline load_pipeline(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  check(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_pipeline(bytes);
}

void BlobWriter::put_f32(const std::string& key, std::span<const float> v,
                         std::vector<std::uint64_t> shape) const {
  p_->blobs[prefix_ + key] = make_blob(DType::kF32, v, std::move(shape));
}
void BlobWriter::put_f64(const std::string& key, std::span<const double> v,
                         std::vector<std::uint64_t> shape) const {
  p_->blobs[prefix_ + key] = make_blob(DType::kF64, v, std::move(shape));
}
void BlobWriter::put_i32(const std::string& key, std::span<const std::int32_t> v,
                         std::vector<std::uint64_t> shape) const {
  p_->blobs[prefix_ + key] = make_blob(DType::kI32, v, std::move(shape));
}
void BlobWriter::put_i64(const std::string& key, std::span<const std::int64_t> v,
                         std::vector<std::uint64_t> shape) const {
  p_->blobs[prefix_ + key] = make_blob(DType::kI64, v, std::move(shape));
}
void BlobWriter::put_string(const std::string& key, const std::string& s) const {
  std::span<const std::uint8_t> raw(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
  p_->blobs[prefix_ + key] = make_blob(DType::kU8, raw, {});
}

const Blob& BlobReader::blob(const std::string& key, DType expected) const {
  auto it = p_->blobs.find(prefix_ + key);
  check(it != p_->blobs.end(), ErrorCode::kCorruptFormat, "missing blob " + prefix_ + key);
  check(it->second.dtype == expected, ErrorCode::kCorruptFormat,
        "blob " + prefix_ + key + " has unexpected dtype");
  return it->second;
}

std::vector<float> BlobReader::f32(const std::string& key) const {
  return read_blob<float>(blob(key, DType::kF32));
}
std::vector<double> BlobReader::f64(const std::string& key) const {
  return read_blob<double>(blob(key, DType::kF64));
}
std::vector<std::int32_t> BlobReader::i32(const std::string& key) const {
  return read_blob<std::int32_t>(blob(key, DType::kI32));
}
std::vector<std::int64_t> BlobReader::i64(const std::string& key) const {
  return read_blob<std::int64_t>(blob(key, DType::kI64));
}
std::string BlobReader::string(const std::string& key) const {
  const Blob& b = blob(key, DType::kU8);
  return {b.bytes.begin(), b.bytes.end()};
}
double BlobReader::scalar(const std::string& key) const {
  auto v = f64(key);
  check(v.size() == 1, ErrorCode::kCorruptFormat, "blob " + prefix_ + key + " is not a scalar");
  return v[0];
}
std::int64_t BlobReader::integer(const std::string& key) const {
  auto v = i64(key);
  check(v.size() == 1, ErrorCode::kCorruptFormat, "blob " + prefix_ + key + " is not a scalar");
  return v[0];
}
const std::vector<std::uint64_t>& BlobReader::shape(const std::string& key) const {
  auto it = p_->blobs.find(prefix_ + key);
  check(it != p_->blobs.end(), ErrorCode::kCorruptFormat, "missing blob " + prefix_ + key);
  return it->second.shape;
}

}  // namespace sal
