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

#include "sal/saab.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "sal/status.h"

namespace sal {

namespace {

// numpy-style "reflect" (edge sample not repeated): -1 -> 1, n -> n - 2.
int reflect_index(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

}  // namespace

PatchMatrix extract_patches(const ImageTensor& fm, int kernel, Padding padding) {
  check(kernel >= 1 && kernel % 2 == 1, ErrorCode::kInvalidKernel,
        "kernel size " + std::to_string(kernel) + " must be odd");
  const int h = fm.height();
  const int w = fm.width();
  const int c = fm.channels();
  const int half = kernel / 2;
  PatchMatrix out;
  out.shape = {kernel, kernel, c};
  if (padding == Padding::kNone) {
    check(h >= kernel && w >= kernel, ErrorCode::kTooSmall,
          std::to_string(h) + "x" + std::to_string(w) + " map is smaller than the kernel");
    out.grid_h = h - kernel + 1;
    out.grid_w = w - kernel + 1;
  } else {
    check(h >= 1 && w >= 1, ErrorCode::kTooSmall, "empty feature map");
    out.grid_h = h;
    out.grid_w = w;
  }
  const int dim = out.shape.dim();
  out.rows.resize(static_cast<Eigen::Index>(out.grid_h) * out.grid_w, dim);
  for (int gr = 0; gr < out.grid_h; ++gr) {
    for (int gc = 0; gc < out.grid_w; ++gc) {
      float* dst = out.rows.row(static_cast<Eigen::Index>(gr) * out.grid_w + gc).data();
      for (int kr = 0; kr < kernel; ++kr) {
        for (int kc = 0; kc < kernel; ++kc) {
          int sr = gr + kr;
          int sc = gc + kc;
          if (padding == Padding::kReflect) {
            sr = reflect_index(gr + kr - half, h);
            sc = reflect_index(gc + kc - half, w);
          }
          auto px = fm.pixel(sr, sc);
          std::copy(px.begin(), px.end(), dst);
          dst += c;
        }
      }
    }
  }
  return out;
}

PatchStatistics::PatchStatistics(int dim)
    : dim_(dim), sum_(Eigen::VectorXd::Zero(dim)), outer_(Eigen::MatrixXd::Zero(dim, dim)) {}

void PatchStatistics::add(const RowMatrixF& rows) {
  if (rows.rows() == 0) return;
  check(rows.cols() == dim_, ErrorCode::kInvalidInput, "patch dimension mismatch");
  if (count_ == 0) {
    first_ = rows.row(0).transpose();
    shift_ = rows.cast<double>().colwise().mean().transpose();
  }
  if (!distinct_) {
    for (Eigen::Index i = 0; i < rows.rows() && !distinct_; ++i) {
      distinct_ = (rows.row(i).transpose() - first_).cwiseAbs().maxCoeff() > 0.0f;
    }
  }
  const Eigen::MatrixXd centered = rows.cast<double>().rowwise() - shift_.transpose();
  sum_ += centered.colwise().sum().transpose();
  outer_.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  max_norm_sq_ = std::max(max_norm_sq_, rows.cast<double>().rowwise().squaredNorm().maxCoeff());
  count_ += static_cast<std::uint64_t>(rows.rows());
}

Eigen::VectorXd PatchStatistics::mean() const {
  if (count_ == 0) return Eigen::VectorXd::Zero(dim_);
  return shift_ + sum_ / static_cast<double>(count_);
}

Eigen::MatrixXd PatchStatistics::covariance() const {
  check(count_ > 0, ErrorCode::kDegenerateInput, "no patches accumulated");
  const double n = static_cast<double>(count_);
  const Eigen::VectorXd m = sum_ / n;
  Eigen::MatrixXd cov = outer_.selfadjointView<Eigen::Lower>();
  cov /= n;
  cov -= m * m.transpose();
  return cov;
}

namespace {

// Orthonormal basis (d x (d-1)) of the complement of the constant direction,
// taken from the Householder reflector that maps e_0 onto 1/sqrt(d).
Eigen::MatrixXd ac_subspace_basis(int d) {
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d));
  Eigen::VectorXd v = Eigen::VectorXd::Constant(d, -inv_sqrt);
  v(0) += 1.0;
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(d, d);
  const double vv = v.squaredNorm();
  if (vv > 0.0) h -= 2.0 * v * v.transpose() / vv;
  return h.rightCols(d - 1);
}

}  // namespace

SaabFilterBank fit_saab(const PatchStatistics& stats, PatchShape shape, double energy_threshold) {
  check(energy_threshold > 0.0 && energy_threshold <= 1.0, ErrorCode::kInvalidConfig,
        "energy threshold must lie in (0, 1]");
  check(shape.dim() == stats.dim(), ErrorCode::kInvalidInput, "patch shape/statistics mismatch");
  check(stats.count() >= 2 && stats.has_distinct_patches(), ErrorCode::kDegenerateInput,
        "need at least two distinct patches to fit a filter bank");
  const int d = stats.dim();
  SaabFilterBank bank;
  bank.shape = shape;
  bank.mean = stats.mean();
  bank.bias = stats.max_norm();
  bank.dc_kernel = Eigen::VectorXd::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));

  const Eigen::MatrixXd cov = stats.covariance();
  bank.dc_variance = std::max(0.0, bank.dc_kernel.dot(cov * bank.dc_kernel));
  if (d == 1) {
    bank.ac_kernels.resize(0, 1);
    bank.ac_variances.resize(0);
    return bank;
  }

  const Eigen::MatrixXd basis = ac_subspace_basis(d);
  const Eigen::MatrixXd reduced = basis.transpose() * cov * basis;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reduced);
  check(eig.info() == Eigen::Success, ErrorCode::kDegenerateInput, "eigensolver failed");

  const int m = d - 1;
  bank.ac_kernels.resize(m, d);
  bank.ac_variances.resize(m);
  for (int k = 0; k < m; ++k) {
    const int src = m - 1 - k;  // Eigen sorts ascending
    Eigen::VectorXd kernel = basis * eig.eigenvectors().col(src);
    kernel.normalize();
    Eigen::Index arg = 0;
    kernel.cwiseAbs().maxCoeff(&arg);
    if (kernel(arg) < 0.0) kernel = -kernel;
    bank.ac_kernels.row(k) = kernel.transpose();
    bank.ac_variances(k) = std::max(0.0, eig.eigenvalues()(src));
  }

  const double total = bank.ac_variances.sum();
  const double trace = std::max(1.0, cov.trace());
  bank.energies.assign(m, 0.0);
  if (total <= 1e-12 * trace) return bank;  // only DC carries information
  for (int k = 0; k < m; ++k) bank.energies[k] = bank.ac_variances(k) / total;
  double cumulative = 0.0;
  while (bank.kept_ac < m && cumulative < energy_threshold - 1e-12) {
    cumulative += bank.energies[bank.kept_ac];
    ++bank.kept_ac;
  }
  return bank;
}

SaabFilterBank fit_saab(const PatchMatrix& patches, double energy_threshold) {
  PatchStatistics stats(patches.shape.dim());
  stats.add(patches.rows);
  return fit_saab(stats, patches.shape, energy_threshold);
}

void SaabFilterBank::save(const BlobWriter& w) const {
  const std::int64_t shp[3] = {shape.kernel_h, shape.kernel_w, shape.channels};
  w.put_i64("patch_shape", shp);
  w.put_f64("mean", std::span<const double>(mean.data(), mean.size()));
  w.put_f64("dc_kernel", std::span<const double>(dc_kernel.data(), dc_kernel.size()));
  w.put_f64("ac_kernels", std::span<const double>(ac_kernels.data(), ac_kernels.size()),
            {static_cast<std::uint64_t>(ac_kernels.rows()),
             static_cast<std::uint64_t>(ac_kernels.cols())});
  w.put_f64("ac_variances", std::span<const double>(ac_variances.data(), ac_variances.size()));
  w.put_f64("energies", energies);
  w.put_scalar("dc_variance", dc_variance);
  w.put_scalar("bias", bias);
  w.put_int("kept_ac", kept_ac);
}

SaabFilterBank SaabFilterBank::load(const BlobReader& r) {
  SaabFilterBank b;
  const auto shp = r.i64("patch_shape");
  check(shp.size() == 3, ErrorCode::kCorruptFormat, "bad patch shape");
  b.shape = {static_cast<int>(shp[0]), static_cast<int>(shp[1]), static_cast<int>(shp[2])};
  const int d = b.shape.dim();
  auto mean = r.f64("mean");
  auto dc = r.f64("dc_kernel");
  auto ac = r.f64("ac_kernels");
  auto var = r.f64("ac_variances");
  check(static_cast<int>(mean.size()) == d && static_cast<int>(dc.size()) == d &&
            ac.size() == static_cast<std::size_t>(d) * var.size(),
        ErrorCode::kCorruptFormat, "filter bank sizes disagree");
  b.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), d);
  b.dc_kernel = Eigen::Map<Eigen::VectorXd>(dc.data(), d);
  b.ac_kernels = Eigen::Map<RowMatrixD>(ac.data(), static_cast<Eigen::Index>(var.size()), d);
  b.ac_variances = Eigen::Map<Eigen::VectorXd>(var.data(), static_cast<Eigen::Index>(var.size()));
  b.energies = r.f64("energies");
  b.dc_variance = r.scalar("dc_variance");
  b.bias = r.scalar("bias");
  b.kept_ac = static_cast<int>(r.integer("kept_ac"));
  return b;
}

double HopUnit::forwarded_energy() const {
  double e = 0.0;
  for (int k = 0; k + 1 < kept_channels; ++k) e += global_energy(k);
  return e;
}

void HopUnit::save(const BlobWriter& w) const {
  bank.save(w.sub("bank"));
  w.put_int("padding", padding == Padding::kReflect ? 1 : 0);
  w.put_int("kept_channels", kept_channels);
  w.put_scalar("parent_energy", parent_energy);
}

HopUnit HopUnit::load(const BlobReader& r) {
  HopUnit u;
  u.bank = SaabFilterBank::load(r.sub("bank"));
  u.padding = r.integer("padding") == 1 ? Padding::kReflect : Padding::kNone;
  u.kept_channels = static_cast<int>(r.integer("kept_channels"));
  u.parent_energy = r.scalar("parent_energy");
  check(u.kept_channels >= 1 && u.kept_channels <= u.bank.total_channels(),
        ErrorCode::kCorruptFormat, "kept channel count out of range");
  return u;
}

HopUnit make_hop(SaabFilterBank bank, Padding padding, const HopOptions& options,
                 double parent_energy) {
  check(options.max_channels >= 1, ErrorCode::kInvalidConfig, "max_channels must be >= 1");
  HopUnit unit;
  unit.padding = padding;
  unit.parent_energy = parent_energy;
  int kept_ac = std::min(bank.kept_ac, options.max_channels - 1);
  while (kept_ac > 0 && parent_energy * bank.energies[kept_ac - 1] < options.min_global_energy) {
    --kept_ac;
  }
  unit.kept_channels = 1 + kept_ac;
  unit.bank = std::move(bank);
  return unit;
}

HopUnit fit_hop(std::span<const ImageTensor> maps, int kernel, Padding padding,
                const HopOptions& options, double parent_energy, std::uint64_t seed,
                std::uint64_t max_patches) {
  check(!maps.empty(), ErrorCode::kDegenerateInput, "no feature maps to fit a hop on");
  const PatchShape shape{kernel, kernel, maps.front().channels()};
  PatchStatistics stats(shape.dim());
  if (shape.dim() <= 512) {
    for (const auto& fm : maps) stats.add(extract_patches(fm, kernel, padding).rows);
  } else {
    // Selection sampling: exactly min(total, max_patches) patches, uniformly.
    std::uint64_t total = 0;
    for (const auto& fm : maps) {
      const auto probe = extract_patches(fm, kernel, padding);
      total += static_cast<std::uint64_t>(probe.rows.rows());
    }
    std::uint64_t needed = std::min(total, max_patches);
    std::uint64_t remaining = total;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit01(0.0, 1.0);
    for (const auto& fm : maps) {
      const auto patches = extract_patches(fm, kernel, padding);
      RowMatrixF chosen(patches.rows.rows(), patches.rows.cols());
      Eigen::Index n = 0;
      for (Eigen::Index i = 0; i < patches.rows.rows(); ++i, --remaining) {
        if (needed > 0 && unit01(rng) * static_cast<double>(remaining) < static_cast<double>(needed)) {
          chosen.row(n++) = patches.rows.row(i);
          --needed;
        }
      }
      stats.add(chosen.topRows(n));
    }
  }
  return make_hop(fit_saab(stats, shape, options.energy_threshold), padding, options,
                  parent_energy);
}

ImageTensor apply_hop(const ImageTensor& fm, const HopUnit& unit) {
  const auto& bank = unit.bank;
  check(fm.channels() == bank.shape.channels, ErrorCode::kInvalidInput,
        "hop expects " + std::to_string(bank.shape.channels) + " channels, got " +
            std::to_string(fm.channels()));
  const PatchMatrix patches = extract_patches(fm, bank.shape.kernel_h, unit.padding);
  const int out_c = unit.kept_channels;
  RowMatrixF kernels(out_c, bank.shape.dim());
  kernels.row(0) = bank.dc_kernel.transpose().cast<float>();
  for (int k = 1; k < out_c; ++k) kernels.row(k) = bank.ac_kernels.row(k - 1).cast<float>();
  RowMatrixF response = patches.rows * kernels.transpose();
  response.col(0).array() += static_cast<float>(bank.bias);
  std::vector<float> data(response.data(), response.data() + response.size());
  return ImageTensor(patches.grid_h, patches.grid_w, out_c, std::move(data));
}

}  // namespace sal
