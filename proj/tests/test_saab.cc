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

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>

#include "doctest.h"
#include "sal/context.h"
#include "sal/saab.h"
#include "sal/status.h"
#include "test_util.h"

using namespace sal;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIoError;
}

PatchMatrix random_patches(int n, PatchShape shape, std::mt19937_64& rng) {
  std::normal_distribution<float> g(0.0f, 1.0f);
  PatchMatrix pm;
  pm.grid_h = n;
  pm.grid_w = 1;
  pm.shape = shape;
  pm.rows.resize(n, shape.dim());
  // Correlated columns so the spectrum is well separated.
  Eigen::MatrixXf mix = Eigen::MatrixXf::Random(shape.dim(), shape.dim());
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXf z(shape.dim());
    for (int j = 0; j < shape.dim(); ++j) z(j) = g(rng);
    pm.rows.row(i) = (mix * z).transpose().array() + 5.0f;
  }
  return pm;
}

std::vector<std::vector<double>> as_rows(const RowMatrixF& m) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i].push_back(m(i, j));
  return out;
}

Eigen::MatrixXd kernel_matrix(const SaabFilterBank& b) {
  Eigen::MatrixXd k(b.total_channels(), b.shape.dim());
  k.row(0) = b.dc_kernel.transpose();
  k.bottomRows(b.ac_kernels.rows()) = b.ac_kernels;
  return k;
}

}  // namespace

TEST_SUITE("saab") {

TEST_CASE("extract_patches shapes and errors") {
  std::mt19937_64 rng(1);
  const ImageTensor img = testing::random_image(32, 32, 3, rng);
  const PatchMatrix p = extract_patches(img, 3, Padding::kNone);
  CHECK(p.grid_h == 30);
  CHECK(p.grid_w == 30);
  CHECK(p.rows.cols() == 27);
  // Row-major (row, col, channel) order inside the window.
  CHECK(p.rows(0, 0) == img.at(0, 0, 0));
  CHECK(p.rows(0, 5) == img.at(0, 1, 2));
  CHECK(p.rows(31, 9) == img.at(2, 1, 0));

  const ImageTensor small = testing::random_image(14, 14, 4, rng);
  const PatchMatrix r = extract_patches(small, 3, Padding::kReflect);
  CHECK(r.grid_h == 14);
  CHECK(r.grid_w == 14);
  // Reflect (no edge repeat): index -1 maps to 1.
  CHECK(r.rows(0, 0) == small.at(1, 1, 0));
  CHECK(r.rows(13, 8 * 4 + 2) == small.at(1, 12, 2));

  ImageTensor flat(8, 8, 2, 3.5f);
  const PatchMatrix f = extract_patches(flat, 3, Padding::kNone);
  CHECK((f.rows.array() == 3.5f).all());

  CHECK(code_of([&] { extract_patches(img, 4, Padding::kNone); }) == ErrorCode::kInvalidKernel);
  CHECK(code_of([&] { extract_patches(ImageTensor(2, 5, 1), 3, Padding::kNone); }) == ErrorCode::kTooSmall);
}

TEST_CASE("fit matches a Jacobi eigensolver on DC-removed covariance") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const PatchMatrix pm = random_patches(300, {3, 3, 1}, rng);
    const SaabFilterBank b = fit_saab(pm, 0.98);
    const Eigen::MatrixXd cov = testing::naive_covariance(as_rows(pm.rows));
    const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(9, 9) - Eigen::MatrixXd::Constant(9, 9, 1.0 / 9.0);
    const auto [vals, vecs] = testing::jacobi_eigen(proj * cov * proj);
    REQUIRE(b.ac_kernels.rows() == 8);
    for (int k = 0; k < 8; ++k) {
      CHECK(b.ac_variances(k) == doctest::Approx(vals(k)).epsilon(1e-8));
      CHECK(std::abs(b.ac_kernels.row(k).dot(vecs.col(k))) == doctest::Approx(1.0).epsilon(1e-7));
    }
    CHECK(b.dc_kernel.isApprox(Eigen::VectorXd::Constant(9, 1.0 / 3.0), 1e-12));
    const Eigen::MatrixXd gram = kernel_matrix(b) * kernel_matrix(b).transpose();
    CHECK((gram - Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff() < 1e-6);
    const double sum = std::accumulate(b.energies.begin(), b.energies.end(), 0.0);
    CHECK(std::abs(sum - 1.0) < 1e-9);
    CHECK(std::is_sorted(b.energies.rbegin(), b.energies.rend()));
    double max_norm = 0.0;
    for (Eigen::Index i = 0; i < pm.rows.rows(); ++i)
      max_norm = std::max(max_norm, pm.rows.row(i).cast<double>().norm());
    CHECK(b.bias == doctest::Approx(max_norm).epsilon(1e-9));
  }
}

TEST_CASE("sign convention and energy threshold") {
  std::mt19937_64 rng(3);
  const PatchMatrix pm = random_patches(200, {3, 3, 2}, rng);
  for (double thr : {0.5, 0.9, 0.98, 1.0}) {
    const SaabFilterBank b = fit_saab(pm, thr);
    for (Eigen::Index k = 0; k < b.ac_kernels.rows(); ++k) {
      Eigen::Index arg = 0;
      b.ac_kernels.row(k).cwiseAbs().maxCoeff(&arg);
      CHECK(b.ac_kernels(k, arg) > 0.0);
    }
    double before = 0.0;
    for (int k = 0; k + 1 < b.kept_ac; ++k) before += b.energies[k];
    const double at = before + b.energies[b.kept_ac - 1];
    CHECK(before < thr);
    CHECK(at >= thr - 1e-12);
  }
}

TEST_CASE("degenerate patches") {
  PatchMatrix same;
  same.shape = {3, 3, 1};
  same.rows = RowMatrixF::Constant(10, 9, 2.0f);
  CHECK(code_of([&] { fit_saab(same, 0.98); }) == ErrorCode::kDegenerateInput);

  // Every patch flat but at different levels: no AC variance, DC only.
  PatchMatrix flat = same;
  for (int i = 0; i < 10; ++i) flat.rows.row(i).setConstant(static_cast<float>(i));
  const SaabFilterBank b = fit_saab(flat, 0.98);
  CHECK(b.kept_ac == 0);
  for (double e : b.energies) CHECK(e == 0.0);
  CHECK(make_hop(b, Padding::kNone, {}, 1.0).kept_channels == 1);
}

TEST_CASE("apply_hop against dense products") {
  std::mt19937_64 rng(4);
  const PatchMatrix pm = random_patches(200, {3, 3, 1}, rng);
  HopUnit unit = make_hop(fit_saab(pm, 1.0), Padding::kNone, {1.0, 32, 0.0}, 1.0);
  REQUIRE(unit.kept_channels == 9);

  const ImageTensor img = testing::random_image(3, 3, 1, rng);
  const ImageTensor out = apply_hop(img, unit);
  REQUIRE(out.height() == 1);
  REQUIRE(out.channels() == 9);
  Eigen::VectorXd x(9);
  for (int i = 0; i < 9; ++i) x(i) = img.data()[i];
  const Eigen::VectorXd centered = x.array() - x.mean();
  CHECK(out.at(0, 0, 0) == doctest::Approx(x.sum() / 3.0 + unit.bank.bias).epsilon(1e-5));
  for (int k = 1; k < 9; ++k) {
    double dot = 0.0;
    for (int i = 0; i < 9; ++i) dot += unit.bank.ac_kernels(k - 1, i) * centered(i);
    CHECK(out.at(0, 0, k) == doctest::Approx(dot).epsilon(1e-4).scale(1.0));
  }

  const ImageTensor flat(6, 6, 1, 42.0f);
  const ImageTensor fo = apply_hop(flat, unit);
  CHECK(fo.height() == 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      for (int k = 1; k < 9; ++k) CHECK(std::abs(fo.at(r, c, k)) < 1e-3);

  CHECK(code_of([&] { apply_hop(ImageTensor(5, 5, 2), unit); }) == ErrorCode::kInvalidInput);
}

TEST_CASE("responses on training patches conserve total variance") {
  std::mt19937_64 rng(5);
  const PatchMatrix pm = random_patches(500, {3, 3, 1}, rng);
  const SaabFilterBank b = fit_saab(pm, 1.0);
  const Eigen::MatrixXd x = pm.rows.cast<double>();
  const Eigen::MatrixXd resp = x * kernel_matrix(b).transpose();
  const Eigen::RowVectorXd mean = resp.colwise().mean();
  const double total = (resp.rowwise() - mean).squaredNorm() / static_cast<double>(resp.rows());
  const double trace = testing::naive_covariance(as_rows(pm.rows)).trace();
  CHECK(std::abs(total - trace) < 1e-6 * std::max(1.0, trace));
}

TEST_CASE("patch order does not matter beyond sign") {
  std::mt19937_64 rng(6);
  const PatchMatrix pm = random_patches(400, {3, 3, 1}, rng);
  PatchMatrix shuffled = pm;
  std::vector<int> order(400);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (int i = 0; i < 400; ++i) shuffled.rows.row(i) = pm.rows.row(order[i]);
  const SaabFilterBank a = fit_saab(pm, 1.0);
  const SaabFilterBank b = fit_saab(shuffled, 1.0);
  const Eigen::MatrixXd ra = (pm.rows.cast<double>() * kernel_matrix(a).transpose()).cwiseAbs();
  const Eigen::MatrixXd rb = (pm.rows.cast<double>() * kernel_matrix(b).transpose()).cwiseAbs();
  CHECK((ra - rb).cwiseAbs().maxCoeff() < 1e-6 * std::max(1.0, ra.maxCoeff()));
}

TEST_CASE("hop pruning and serialization") {
  std::mt19937_64 rng(7);
  std::vector<ImageTensor> maps;
  for (int i = 0; i < 10; ++i) maps.push_back(testing::random_image(10, 10, 3, rng));
  const HopUnit u = fit_hop(maps, 3, Padding::kReflect, {0.98, 5, 1e-4}, 0.5, 1);
  CHECK(u.kept_channels <= 5);
  CHECK(u.kept_channels <= u.bank.total_channels());
  CHECK(u.parent_energy == 0.5);
  for (int k = 0; k + 1 < u.kept_channels; ++k) CHECK(u.global_energy(k) >= 1e-4);
  TrainedPipeline p;
  u.save(BlobWriter(p, "hop/"));
  const HopUnit v = HopUnit::load(BlobReader(p, "hop/"));
  CHECK(apply_hop(maps[0], u) == apply_hop(maps[0], v));
}

}  // TEST_SUITE

TEST_SUITE("context") {

TEST_CASE("receptive field and size chain") {
  CHECK(receptive_field(1) == 3);
  CHECK(receptive_field(9) == 19);
  std::mt19937_64 rng(8);
  std::vector<ImageTensor> imgs;
  for (int i = 0; i < 6; ++i) imgs.push_back(testing::random_image(32, 32, 3, rng));
  CascadeConfig cfg;
  cfg.hop.max_channels = 4;
  const ContextCascade cas = fit_cascade(imgs, cfg);
  CHECK(cas.depth() == 9);
  CHECK(cas.sizes == std::vector<int>{30, 28, 26, 24, 22, 20, 18, 16, 14});
  for (int u = 0; u < 9; ++u) CHECK(cas.offset(u) == 8 - u);

  const ImageTensor img = testing::random_image(32, 32, 3, rng);
  const auto outs = apply_cascade(img, cas);
  const ContextGrid grid = extract_context(img, cas);
  CHECK(grid.grid_size() == 14);
  int dim = 0;
  for (const auto& h : cas.hops) dim += h.kept_channels;
  CHECK(grid.dim() == dim);
  // Hop u (1-based) sits at (i + 9 - u, j + 9 - u).
  for (int u = 1; u <= 9; ++u) {
    for (int i : {0, 5, 13}) {
      for (int j : {0, 7, 13}) {
        for (int k = 0; k < outs[u - 1].channels(); ++k) {
          CHECK(grid.features.at(i, j, grid.slice_begin[u - 1] + k) ==
                outs[u - 1].at(i + 9 - u, j + 9 - u, k));
        }
      }
    }
  }
  CHECK(grid.features.at(0, 0, 0) == outs[0].at(8, 8, 0));

  const ContextGrid flat = extract_context(ImageTensor(32, 32, 3, 90.0f), cas);
  for (int i = 0; i < 14; ++i)
    for (int j = 0; j < 14; ++j)
      for (int k = 0; k < flat.dim(); ++k) CHECK(flat.features.at(i, j, k) == flat.features.at(0, 0, k));

  CHECK(extract_context(img, cas).features == grid.features);
  CHECK(code_of([&] { extract_context(ImageTensor(30, 30, 3), cas); }) == ErrorCode::kInvalidInput);

  TrainedPipeline p;
  cas.save(BlobWriter(p, "c/"));
  CHECK(extract_context(img, ContextCascade::load(BlobReader(p, "c/"))).features == grid.features);
}

TEST_CASE("degenerate cascade inputs") {
  CascadeConfig cfg;
  const std::vector<ImageTensor> none;
  CHECK(code_of([&] { fit_cascade(std::span<const ImageTensor>(none), cfg); }) == ErrorCode::kDegenerateInput);
  const std::vector<ImageTensor> flat = {ImageTensor(32, 32, 3, 10.0f)};
  CHECK(code_of([&] { fit_cascade(std::span<const ImageTensor>(flat), cfg); }) == ErrorCode::kDegenerateInput);
}

}  // TEST_SUITE
