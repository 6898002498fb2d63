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
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sal/pipeline_io.h"
#include "sal/tensor.h"

namespace sal {

using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Padding { kNone, kReflect };

struct PatchShape {
  int kernel_h = 3;
  int kernel_w = 3;
  int channels = 1;

  int dim() const { return kernel_h * kernel_w * channels; }
  bool operator==(const PatchShape&) const = default;
};

// Flattened neighbourhoods, one row per output grid position. Each row is
// ordered (row, col, channel) within the kernel window.
struct PatchMatrix {
  int grid_h = 0;
  int grid_w = 0;
  PatchShape shape;
  RowMatrixF rows;
};

PatchMatrix extract_patches(const ImageTensor& fm, int kernel, Padding padding);

// Streaming patch moments. Accumulation is shifted by the first batch mean so
// deep hops with large DC responses keep precision.
class PatchStatistics {
 public:
  explicit PatchStatistics(int dim);

  void add(const RowMatrixF& rows);

  int dim() const { return dim_; }
  std::uint64_t count() const { return count_; }
  bool has_distinct_patches() const { return distinct_; }
  double max_norm() const { return std::sqrt(max_norm_sq_); }

  Eigen::VectorXd mean() const;
  Eigen::MatrixXd covariance() const;

 private:
  int dim_;
  std::uint64_t count_ = 0;
  bool distinct_ = false;
  double max_norm_sq_ = 0.0;
  Eigen::VectorXf first_;
  Eigen::VectorXd shift_;
  Eigen::VectorXd sum_;
  Eigen::MatrixXd outer_;
};

struct SaabFilterBank {
  PatchShape shape;
  Eigen::VectorXd mean;          // per-dimension training patch mean
  Eigen::VectorXd dc_kernel;     // 1/sqrt(d) everywhere
  RowMatrixD ac_kernels;         // (d - 1) x d, rows sorted by variance
  Eigen::VectorXd ac_variances;  // raw eigenvalues, non-increasing
  std::vector<double> energies;  // ac_variances / sum, sums to 1 (all 0 if no AC variance)
  double dc_variance = 0.0;
  double bias = 0.0;             // largest training patch norm
  int kept_ac = 0;               // AC channels needed to reach the energy threshold

  int total_channels() const { return 1 + static_cast<int>(ac_kernels.rows()); }

  void save(const BlobWriter& w) const;
  static SaabFilterBank load(const BlobReader& r);
};

// Fits the bank from accumulated statistics. Throws degenerate-input when the
// statistics saw fewer than two distinct patches.
SaabFilterBank fit_saab(const PatchStatistics& stats, PatchShape shape, double energy_threshold);
SaabFilterBank fit_saab(const PatchMatrix& patches, double energy_threshold);

// One cascade stage: a bank plus the channels it forwards (DC first, then the
// leading AC channels).
struct HopUnit {
  SaabFilterBank bank;
  Padding padding = Padding::kNone;
  int kept_channels = 1;
  double parent_energy = 1.0;  // energy fraction carried into this hop

  // Energy of AC channel k relative to the cascade input.
  double global_energy(int k) const { return parent_energy * bank.energies[k]; }
  // Energy carried forward by the kept AC channels.
  double forwarded_energy() const;

  void save(const BlobWriter& w) const;
  static HopUnit load(const BlobReader& r);
};

struct HopOptions {
  double energy_threshold = 0.98;
  int max_channels = 32;             // cap on forwarded channels, DC included
  double min_global_energy = 1e-4;   // cross-hop pruning of tiny children
};

HopUnit make_hop(SaabFilterBank bank, Padding padding, const HopOptions& options,
                 double parent_energy);

// Fits one hop from a set of input feature maps. Patch covariance is exact for
// patch dimension <= 512; larger patches are uniformly subsampled to at most
// `max_patches` with a seeded draw.
HopUnit fit_hop(std::span<const ImageTensor> maps, int kernel, Padding padding,
                const HopOptions& options, double parent_energy, std::uint64_t seed,
                std::uint64_t max_patches = 1'000'000);

// Projects every patch onto the kept kernels. The DC response is shifted by the
// bank bias, which keeps it non-negative; AC kernels are orthogonal to the DC
// direction, so their responses ignore the patch mean and vanish on flat input.
ImageTensor apply_hop(const ImageTensor& fm, const HopUnit& unit);

}  // namespace sal
