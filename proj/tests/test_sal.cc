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
#include <cmath>
#include <functional>
#include <random>
#include <set>

#include "doctest.h"
#include "sal/localizer.h"
#include "sal/sal_step1.h"
#include "sal/sal_step2.h"
#include "sal/sal_step3.h"
#include "sal/status.h"
#include "sal/synthetic.h"
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

SoftDecisionGrid uniform_grid(int n, int k) {
  SoftDecisionGrid g(n, n, k);
  std::fill(g.probs.begin(), g.probs.end(), 1.0 / k);
  return g;
}

SoftDecisionGrid random_grid(int n, int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  SoftDecisionGrid g(n, n, k);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      auto p = g.at(r, c);
      double s = 0.0;
      for (double& v : p) s += (v = u(rng));
      for (double& v : p) v /= s;
    }
  return g;
}

BinaryMask random_mask(int h, int w, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution b(density);
  BinaryMask m(h, w);
  for (auto& v : m.bits) v = b(rng) ? 1 : 0;
  return m;
}

double tent(double x) { return std::max(0.0, 1.0 - std::abs(x)); }

}  // namespace

TEST_SUITE("sal_step1") {

TEST_CASE("pool_context") {
  ContextGrid g;
  g.features = ImageTensor(14, 14, 2);
  g.features.at(0, 0, 0) = 1.0f;
  g.features.at(1, 1, 1) = 1.0f;
  const ContextGrid p = pool_context(g);
  CHECK(p.grid_size() == 7);
  CHECK(p.features.at(0, 0, 0) == 1.0f);
  CHECK(p.features.at(0, 0, 1) == 1.0f);
  CHECK(p.features.at(3, 3, 0) == 0.0f);
  ContextGrid same;
  same.features = ImageTensor(14, 14, 3, 0.25f);
  CHECK(pool_context(same).features == ImageTensor(7, 7, 3, 0.25f));
  ContextGrid odd;
  odd.features = ImageTensor(13, 13, 1);
  CHECK(code_of([&] { pool_context(odd); }) == ErrorCode::kInvalidInput);
}

TEST_CASE("bilinear upsampling matches the tent-kernel sum") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const SoftDecisionGrid sd = random_grid(7, 4, rng);
    const SoftDecisionGrid up = upsample_bilinear(sd, 2);
    REQUIRE(up.grid_h == 14);
    REQUIRE(up.grid_w == 14);
    REQUIRE(up.num_classes == 4);
    std::uniform_int_distribution<int> pos(0, 13);
    for (int s = 0; s < 20; ++s) {
      const int r = pos(rng);
      const int c = pos(rng);
      const double sy = std::clamp((r + 0.5) / 2.0 - 0.5, 0.0, 6.0);
      const double sx = std::clamp((c + 0.5) / 2.0 - 0.5, 0.0, 6.0);
      std::vector<double> expect(4, 0.0);
      double total = 0.0;
      for (int k = 0; k < 4; ++k) {
        for (int i = 0; i < 7; ++i)
          for (int j = 0; j < 7; ++j) expect[k] += tent(sy - i) * tent(sx - j) * sd.at(i, j)[k];
        total += expect[k];
      }
      for (int k = 0; k < 4; ++k) CHECK(std::abs(up.at(r, c)[k] - expect[k] / total) < 1e-9);
    }
    for (int r = 0; r < 14; ++r)
      for (int c = 0; c < 14; ++c) {
        double s = 0.0;
        for (double v : up.at(r, c)) s += v;
        CHECK(std::abs(s - 1.0) < 1e-6);
      }
  }
  const SoftDecisionGrid flat = upsample_bilinear(uniform_grid(7, 10), 2);
  for (double v : flat.probs) CHECK(std::abs(v - 0.1) < 1e-12);
}

TEST_CASE("window selection") {
  CHECK(select_window(uniform_grid(14, 10)) == AttentionWindow{9, 9, 19});
  SoftDecisionGrid g = uniform_grid(14, 10);
  auto p = g.at(4, 11);
  p[3] = 0.9;
  for (int k = 0; k < 10; ++k)
    if (k != 3) p[k] = 0.1 / 9;
  CHECK(select_window(g) == AttentionWindow{13, 20, 19});
  // Exhaustive over all 196 cells.
  for (int r = 0; r < 14; ++r)
    for (int c = 0; c < 14; ++c) {
      SoftDecisionGrid h = uniform_grid(14, 2);
      h.at(r, c)[0] = 0.8;
      h.at(r, c)[1] = 0.2;
      const AttentionWindow w = select_window(h);
      CHECK(w.center_row == r + 9);
      CHECK(w.center_col == c + 9);
      CHECK(w.fits(32, 32));
    }
  SoftDecisionGrid corner = uniform_grid(14, 2);
  corner.at(13, 13)[0] = 0.7;
  corner.at(13, 13)[1] = 0.3;
  const AttentionWindow w = select_window(corner);
  CHECK(w.top() == 13);
  CHECK(w.bottom() == 31);
}

TEST_CASE("monotone transforms of confidence keep the window") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const SoftDecisionGrid g = random_grid(14, 5, rng);
    SoftDecisionGrid sq = g;
    for (double& v : sq.probs) v = v * v * v;
    CHECK(select_window(g) == select_window(sq));
  }
}

TEST_CASE("pixel classifier on separable samples") {
  std::mt19937_64 rng(12);
  std::normal_distribution<float> n(0.0f, 0.3f);
  PixelTrainingSet s;
  s.features.resize(98, 3);
  for (int i = 0; i < 98; ++i) {
    const int y = i % 2;
    s.labels.push_back(y);
    s.image_of_row.push_back(static_cast<std::uint32_t>(i / 49));
    s.features(i, 0) = (y ? 2.0f : -2.0f) + n(rng);
    s.features(i, 1) = n(rng);
    s.features(i, 2) = n(rng);
  }
  GbdtConfig cfg;
  cfg.rounds = 30;
  const auto clf = train_pixel_classifier(s, 2, cfg);
  const RowMatrixD p = clf->predict_proba(s.features);
  for (int i = 0; i < 98; ++i) {
    CHECK(std::abs(p.row(i).sum() - 1.0) < 1e-9);
    Eigen::Index arg = 0;
    p.row(i).maxCoeff(&arg);
    CHECK(arg == s.labels[i]);
  }
  std::vector<int> one(98, 1);
  PixelTrainingSet bad = s;
  bad.labels = one;
  CHECK(code_of([&] { train_pixel_classifier(bad, 2, cfg); }) == ErrorCode::kDegenerateLabels);
}

}  // TEST_SUITE

TEST_SUITE("sal_step2") {

TEST_CASE("sampling geometry, exhaustive over window centres") {
  for (int margin : {0, 3}) {
    std::vector<AttentionWindow> windows;
    for (int r = 9; r <= 22; ++r)
      for (int c = 9; c <= 22; ++c) windows.push_back({r, c, 19});
    const RefinementSampleSet s = sample_refinement_pixels(windows, 32, 32, margin, 5);
    CHECK(s.positives.size() == s.negatives.size());
    const std::size_t per_image = margin == 3 ? 169 : 361;
    CHECK(s.positives.size() == per_image * windows.size());
    std::vector<int> pos_count(windows.size(), 0);
    std::vector<int> neg_count(windows.size(), 0);
    std::set<std::tuple<int, int, int>> seen;
    for (const PixelRef& p : s.positives) {
      const auto& w = windows[p.image];
      CHECK(w.contains(p.row, p.col));
      CHECK(std::min({p.row - w.top(), w.bottom() - p.row, p.col - w.left(), w.right() - p.col}) >= margin);
      ++pos_count[p.image];
    }
    for (const PixelRef& p : s.negatives) {
      const auto& w = windows[p.image];
      CHECK(p.row >= 0);
      CHECK(p.row < 32);
      CHECK(p.col >= 0);
      CHECK(p.col < 32);
      CHECK_FALSE(w.contains(p.row, p.col));
      const int dr = std::max({w.top() - p.row, p.row - w.bottom(), 0});
      const int dc = std::max({w.left() - p.col, p.col - w.right(), 0});
      CHECK(std::max(dr, dc) > margin);
      CHECK(seen.insert({static_cast<int>(p.image), p.row, p.col}).second);
      ++neg_count[p.image];
    }
    for (std::size_t i = 0; i < windows.size(); ++i) {
      CHECK(pos_count[i] == static_cast<int>(per_image));
      CHECK(neg_count[i] == static_cast<int>(per_image));
    }
  }
}

TEST_CASE("depth and distance helpers") {
  const AttentionWindow w{9, 9, 19};
  int deep = 0;
  int outside0 = 0;
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) {
      deep += window_depth(w, r, c) >= 3;
      outside0 += window_distance(w, r, c) > 0;
    }
  CHECK(deep == 169);
  CHECK(outside0 == 1024 - 361);
  CHECK(window_distance(w, 19, 0) == 1);
  CHECK(window_depth(w, 0, 0) == 0);
}

TEST_CASE("whole-image window has no negatives") {
  const std::vector<AttentionWindow> w = {{15, 15, 31}};
  CHECK(code_of([&] { sample_refinement_pixels(w, 31, 31, 3, 1); }) == ErrorCode::kDegenerateGeometry);
  CHECK(code_of([&] { sample_refinement_pixels(w, 32, 32, 3, 1); }) == ErrorCode::kDegenerateGeometry);
}

TEST_CASE("refiner on the synthetic fixture") {
  SyntheticConfig sc;
  sc.train_per_class = 8;
  const SyntheticSplit train = make_synthetic(sc, Split::kTrain);
  // Windows around the true objects stand in for step 1.
  std::vector<AttentionWindow> windows;
  for (const BBox& b : train.objects) {
    const int cr = std::clamp(b.top + b.height / 2, 9, 22);
    const int cc = std::clamp(b.left + b.width / 2, 9, 22);
    windows.push_back({cr, cc, 19});
  }
  Step2Config cfg;
  cfg.features.hop.max_channels = 8;
  cfg.gbdt.rounds = 40;
  const Step2Model m = Step2Model::fit(train.data.images, windows, cfg);
  CHECK(m.features().dim() == m.features().hop2_channels() + m.features().hop4_channels());
  const ImageTensor f = m.features().extract(train.data.images[0]);
  CHECK(f.height() == 32);
  CHECK(f.width() == 32);

  int good = 0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const AttentionMap map = m.predict(train.data.images[i]);
    REQUIRE(map.height == 32);
    double in = 0, out = 0;
    int nin = 0, nout = 0;
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c) {
        const float v = map.at(r, c);
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
        if (windows[i].contains(r, c)) {
          in += v;
          ++nin;
        } else {
          out += v;
          ++nout;
        }
      }
    good += in / nin > out / nout;
  }
  CHECK(good >= static_cast<int>(0.9 * windows.size()));

  const AttentionMap flat = m.predict(ImageTensor(32, 32, 3, 128.0f));
  const auto [lo, hi] = std::minmax_element(flat.values.begin(), flat.values.end());
  CHECK(*hi - *lo < 0.2f);

  TrainedPipeline p;
  m.save(BlobWriter(p, "s2/"));
  CHECK(Step2Model::load(BlobReader(p, "s2/")).predict(train.data.images[1]).values ==
        m.predict(train.data.images[1]).values);
}

}  // TEST_SUITE

TEST_SUITE("sal_step3") {

TEST_CASE("binarize") {
  AttentionMap m{4, 4, std::vector<float>(16, 0.7f)};
  CHECK(binarize(m, 0.5).count() == 16);
  std::fill(m.values.begin(), m.values.end(), 0.3f);
  CHECK(binarize(m, 0.5).count() == 0);
  m.at(1, 2) = 0.5f;
  const BinaryMask b = binarize(m, 0.5);
  CHECK(b.at(1, 2) == 1);
  CHECK(b.count() == 1);
}

TEST_CASE("median_clean against a brute-force majority count") {
  BinaryMask single(32, 32);
  single.at(10, 10) = 1;
  CHECK(median_clean(single, 3).count() == 0);
  CHECK(median_clean(BinaryMask(32, 32, 1), 3).count() == 1024);

  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const int radius = trial % 4;
    const BinaryMask m = random_mask(16, 16, 0.2 + 0.6 * (trial % 5) / 4.0, rng);
    const BinaryMask out = median_clean(m, radius);
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 16; ++c) {
        int ones = 0, total = 0;
        for (int i = r - radius; i <= r + radius; ++i)
          for (int j = c - radius; j <= c + radius; ++j) {
            if (i < 0 || j < 0 || i >= 16 || j >= 16) continue;
            ones += m.at(i, j);
            ++total;
          }
        CHECK(out.at(r, c) == (2 * ones >= total ? 1 : 0));
      }
  }
}

TEST_CASE("median_clean is monotone") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const BinaryMask a = random_mask(16, 16, 0.4, rng);
    BinaryMask b = a;
    const BinaryMask extra = random_mask(16, 16, 0.2, rng);
    for (std::size_t i = 0; i < b.bits.size(); ++i) b.bits[i] |= extra.bits[i];
    const BinaryMask ca = median_clean(a, 3);
    const BinaryMask cb = median_clean(b, 3);
    for (std::size_t i = 0; i < ca.bits.size(); ++i) CHECK(cb.bits[i] >= ca.bits[i]);
  }
}

TEST_CASE("tightest_bbox against a min/max scan") {
  BinaryMask m(32, 32);
  m.at(3, 4) = 1;
  m.at(10, 20) = 1;
  CHECK(tightest_bbox(m) == BBox{3, 4, 8, 17});
  CHECK(tightest_bbox(BinaryMask(32, 32, 1)) == BBox{0, 0, 32, 32});
  CHECK_FALSE(tightest_bbox(BinaryMask(8, 8)).has_value());

  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    const BinaryMask r = random_mask(16, 16, 0.02 + 0.01 * (trial % 10), rng);
    int top = 99, left = 99, bottom = -1, right = -1;
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j)
        if (r.at(i, j)) {
          top = std::min(top, i);
          bottom = std::max(bottom, i);
          left = std::min(left, j);
          right = std::max(right, j);
        }
    const auto box = tightest_bbox(r);
    if (bottom < 0) {
      CHECK_FALSE(box.has_value());
    } else {
      REQUIRE(box.has_value());
      CHECK(*box == BBox{top, left, bottom - top + 1, right - left + 1});
    }
  }
}

TEST_CASE("occupancy mode prefers the dense component") {
  BinaryMask m(32, 32);
  for (int r = 5; r < 15; ++r)
    for (int c = 5; c < 15; ++c) m.at(r, c) = 1;
  m.at(30, 30) = 1;
  const auto box = occupancy_bbox(m);
  REQUIRE(box.has_value());
  CHECK(*box == BBox{5, 5, 10, 10});
  CHECK(*tightest_bbox(m) == BBox{5, 5, 26, 26});
  CHECK_FALSE(occupancy_bbox(BinaryMask(4, 4)).has_value());
}

TEST_CASE("regularize_bbox") {
  CHECK(regularize_bbox({10, 10, 8, 4}, 16, 32, 32).height == 16);
  CHECK(regularize_bbox({10, 10, 8, 4}, 16, 32, 32).width == 8);
  CHECK(regularize_bbox({3, 3, 20, 10}, 16, 32, 32) == BBox{3, 3, 20, 10});
  CHECK(regularize_bbox({0, 0, 2, 2}, 16, 32, 32) == BBox{0, 0, 16, 16});
  CHECK(regularize_bbox({30, 30, 2, 2}, 16, 32, 32) == BBox{16, 16, 16, 16});
  // Half-up rounding: 16 * 5 / 7 = 11.43 -> 11; 16 * 3 / 6 = 8 exactly.
  CHECK(regularize_bbox({10, 10, 7, 5}, 16, 32, 32).width == 11);
  CHECK(regularize_bbox({10, 10, 6, 3}, 16, 32, 32).width == 8);
  // Corner placements all end inside the image and keep the side.
  for (int top = 0; top < 32; ++top)
    for (int left = 0; left < 32; ++left)
      for (int h : {1, 2, 5}) {
        if (top + h > 32 || left + h > 32) continue;
        const BBox b = regularize_bbox({top, left, h, h}, 16, 32, 32);
        CHECK(b.within(32, 32));
        CHECK(b.height == 16);
        CHECK(regularize_bbox(b, 16, 32, 32) == b);
      }
}

TEST_CASE("crop_resize") {
  std::mt19937_64 rng(16);
  const ImageTensor img = testing::random_image(32, 32, 3, rng);
  const ImageTensor same = crop_resize(img, {0, 0, 32, 32}, 32);
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(std::abs(same.data()[i] - img.data()[i]) < 1e-6);

  ImageTensor flat(32, 32, 3);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) {
      flat.at(r, c, 0) = 10.0f;
      flat.at(r, c, 1) = 200.0f;
      flat.at(r, c, 2) = 77.0f;
    }
  const ImageTensor fc = crop_resize(flat, {4, 6, 13, 21}, 32);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) {
      CHECK(std::abs(fc.at(r, c, 0) - 10.0f) < 1e-4);
      CHECK(std::abs(fc.at(r, c, 1) - 200.0f) < 1e-4);
      CHECK(std::abs(fc.at(r, c, 2) - 77.0f) < 1e-4);
    }

  // 16x16 crop upscaled x2: direct 2-D kernel sum with edge clamping.
  const BBox box{8, 5, 16, 16};
  const ImageTensor up = crop_resize(img, box, 32);
  for (auto [orow, ocol] : {std::pair{15, 16}, std::pair{16, 16}, std::pair{0, 31}, std::pair{7, 22}}) {
    const double cy = (orow + 0.5) / 2.0 - 0.5;
    const double cx = (ocol + 0.5) / 2.0 - 0.5;
    for (int k = 0; k < 3; ++k) {
      double num = 0.0, den = 0.0, lo = 1e9, hi = -1e9;
      for (int i = -10; i < 30; ++i)
        for (int j = -10; j < 30; ++j) {
          const double wgt = lanczos3(i - cy) * lanczos3(j - cx);
          const int si = std::clamp(i, 0, 15);
          const int sj = std::clamp(j, 0, 15);
          num += wgt * img.at(box.top + si, box.left + sj, k);
          den += wgt;
        }
      for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
          lo = std::min<double>(lo, img.at(box.top + i, box.left + j, k));
          hi = std::max<double>(hi, img.at(box.top + i, box.left + j, k));
        }
      const double expect = std::clamp(num / den, lo, hi);
      CHECK(std::abs(up.at(orow, ocol, k) - expect) < 1e-3);
    }
  }
  CHECK(lanczos3(0.0) == 1.0);
  CHECK(std::abs(lanczos3(1.0)) < 1e-15);
  CHECK(lanczos3(3.0) == 0.0);
  CHECK(code_of([&] { crop_resize(img, {20, 20, 16, 16}, 32); }) == ErrorCode::kInvalidInput);
}

TEST_CASE("finalize_region always emits a 32x32x3 crop") {
  std::mt19937_64 rng(17);
  SalConfig cfg;
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  int fallbacks = 0;
  for (int t = 0; t < 100; ++t) {
    const ImageTensor img = testing::random_image(32, 32, 3, rng);
    AttentionMap map{32, 32, std::vector<float>(1024)};
    const float scale = (t % 4) * 0.3f;
    for (float& v : map.values) v = u(rng) * scale;
    const AttentionWindow w{9 + t % 14, 9 + (t / 7) % 14, 19};
    const LocalizationResult res = finalize_region(img, w, map, cfg);
    CHECK(res.crop.height() == 32);
    CHECK(res.crop.width() == 32);
    CHECK(res.crop.channels() == 3);
    CHECK(res.box.within(32, 32));
    CHECK(std::max(res.box.height, res.box.width) >= 16);
    if (res.used_fallback) {
      ++fallbacks;
      CHECK(res.raw_box == window_box(w));
    }
  }
  CHECK(fallbacks > 0);
}

TEST_CASE("config validation") {
  SalConfig c;
  c.t_att = 1.0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::kInvalidConfig);
  c = SalConfig{};
  c.median_radius = -1;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::kInvalidConfig);
  c = SalConfig{};
  c.min_side = 0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::kInvalidConfig);
}

}  // TEST_SUITE
