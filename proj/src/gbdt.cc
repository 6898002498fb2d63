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

#include "sal/gbdt.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "sal/status.h"

namespace sal {

namespace {

// Quantile cut points per feature and the binned uint8 copy of the data.
struct BinnedData {
  int rows = 0;
  int cols = 0;
  std::vector<std::vector<float>> cuts;  // ascending, unique
  std::vector<std::uint8_t> bins;        // row-major rows x cols

  int num_bins(int f) const { return static_cast<int>(cuts[f].size()) + 1; }
};

BinnedData bin_features(const RowMatrixF& x, const GbdtConfig& config) {
  check(config.max_bins >= 2 && config.max_bins <= 256, ErrorCode::kInvalidConfig,
        "max_bins must lie in [2, 256]");
  BinnedData b;
  b.rows = static_cast<int>(x.rows());
  b.cols = static_cast<int>(x.cols());
  b.cuts.resize(b.cols);
  const std::size_t sample = std::min<std::size_t>(b.rows, std::max<std::size_t>(config.binning_sample, 1));
  const double stride = static_cast<double>(b.rows) / static_cast<double>(sample);
  std::vector<float> values(sample);
  for (int f = 0; f < b.cols; ++f) {
    for (std::size_t s = 0; s < sample; ++s) {
      values[s] = x(static_cast<Eigen::Index>(s * stride), f);
    }
    std::sort(values.begin(), values.end());
    auto& cuts = b.cuts[f];
    for (int q = 1; q < config.max_bins; ++q) {
      const std::size_t pos = q * sample / config.max_bins;
      if (pos == 0 || pos >= sample) continue;
      // Midpoint between neighbours so the cut separates distinct values.
      const float lo = values[pos - 1];
      const float hi = values[pos];
      if (hi <= lo) continue;
      const float cut = lo + (hi - lo) * 0.5f;
      const float c = cut > lo ? cut : hi;
      if (cuts.empty() || c > cuts.back()) cuts.push_back(c);
    }
  }
  b.bins.resize(static_cast<std::size_t>(b.rows) * b.cols);
  for (int i = 0; i < b.rows; ++i) {
    for (int f = 0; f < b.cols; ++f) {
      const auto& cuts = b.cuts[f];
      b.bins[static_cast<std::size_t>(i) * b.cols + f] = static_cast<std::uint8_t>(
          std::upper_bound(cuts.begin(), cuts.end(), x(i, f)) - cuts.begin());
    }
  }
  return b;
}

struct GradPair {
  double g = 0.0;
  double h = 0.0;
};

struct Split {
  double gain = 0.0;
  int feature = -1;
  int bin = -1;  // rows with bin < this go left
};

class TreeBuilder {
 public:
  TreeBuilder(const BinnedData& data, const GbdtConfig& config)
      : data_(data), config_(config) {
    offsets_.resize(data.cols + 1, 0);
    for (int f = 0; f < data.cols; ++f) offsets_[f + 1] = offsets_[f] + data.num_bins(f);
  }

  // Grows one tree over rows[0, n) and adds its shrunken leaf values to `scores`.
  std::vector<TreeNode> build(std::vector<int>& rows, std::span<const GradPair> grad,
                              std::span<double> scores, int score_stride, int score_col) {
    std::vector<TreeNode> tree;
    struct Pending {
      int node;
      int begin;
      int end;
      int depth;
      std::vector<GradPair> hist;
    };
    std::vector<Pending> frontier;
    tree.emplace_back();
    frontier.push_back({0, 0, static_cast<int>(rows.size()), 0,
                        build_hist(rows, 0, static_cast<int>(rows.size()), grad)});
    while (!frontier.empty()) {
      std::vector<Pending> next;
      for (auto& p : frontier) {
        const GradPair total = node_total(p.hist);
        Split split;
        if (p.depth < config_.max_depth && p.end - p.begin >= 2) split = best_split(p.hist, total);
        if (split.feature < 0) {
          const double value = -total.g / (total.h + config_.l2) * config_.learning_rate;
          tree[p.node].value = value;
          for (int i = p.begin; i < p.end; ++i) {
            scores[static_cast<std::size_t>(rows[i]) * score_stride + score_col] += value;
          }
          continue;
        }
        // Stable partition keeps row order deterministic within each child.
        const int f = split.feature;
        auto mid_it = std::stable_partition(rows.begin() + p.begin, rows.begin() + p.end, [&](int r) {
          return data_.bins[static_cast<std::size_t>(r) * data_.cols + f] < split.bin;
        });
        const int mid = static_cast<int>(mid_it - rows.begin());
        TreeNode& node = tree[p.node];
        node.feature = f;
        node.threshold = data_.cuts[f][split.bin - 1];
        node.left = static_cast<int>(tree.size());
        node.right = node.left + 1;
        tree.emplace_back();
        tree.emplace_back();
        const int left_id = tree[p.node].left;
        const int right_id = tree[p.node].right;
        std::vector<GradPair> small_hist;
        std::vector<GradPair> large_hist = std::move(p.hist);
        const bool left_small = (mid - p.begin) <= (p.end - mid);
        if (left_small) {
          small_hist = build_hist(rows, p.begin, mid, grad);
        } else {
          small_hist = build_hist(rows, mid, p.end, grad);
        }
        for (std::size_t k = 0; k < large_hist.size(); ++k) {
          large_hist[k].g -= small_hist[k].g;
          large_hist[k].h -= small_hist[k].h;
        }
        if (left_small) {
          next.push_back({left_id, p.begin, mid, p.depth + 1, std::move(small_hist)});
          next.push_back({right_id, mid, p.end, p.depth + 1, std::move(large_hist)});
        } else {
          next.push_back({left_id, p.begin, mid, p.depth + 1, std::move(large_hist)});
          next.push_back({right_id, mid, p.end, p.depth + 1, std::move(small_hist)});
        }
      }
      frontier = std::move(next);
    }
    return tree;
  }

 private:
  std::vector<GradPair> build_hist(const std::vector<int>& rows, int begin, int end,
                                   std::span<const GradPair> grad) const {
    std::vector<GradPair> hist(offsets_.back());
    const int cols = data_.cols;
    for (int i = begin; i < end; ++i) {
      const int r = rows[i];
      const GradPair gp = grad[r];
      const std::uint8_t* b = data_.bins.data() + static_cast<std::size_t>(r) * cols;
      for (int f = 0; f < cols; ++f) {
        GradPair& cell = hist[offsets_[f] + b[f]];
        cell.g += gp.g;
        cell.h += gp.h;
      }
    }
    return hist;
  }

  GradPair node_total(const std::vector<GradPair>& hist) const {
    GradPair t;
    for (int b = offsets_[0]; b < offsets_[1]; ++b) {
      t.g += hist[b].g;
      t.h += hist[b].h;
    }
    return t;
  }

  Split best_split(const std::vector<GradPair>& hist, GradPair total) const {
    Split best;
    const double lambda = config_.l2;
    const double parent = total.g * total.g / (total.h + lambda);
    for (int f = 0; f < data_.cols; ++f) {
      GradPair left;
      const int nb = data_.num_bins(f);
      for (int b = 1; b < nb; ++b) {
        left.g += hist[offsets_[f] + b - 1].g;
        left.h += hist[offsets_[f] + b - 1].h;
        const double rg = total.g - left.g;
        const double rh = total.h - left.h;
        if (left.h < config_.min_child_hessian || rh < config_.min_child_hessian) continue;
        const double gain = left.g * left.g / (left.h + lambda) + rg * rg / (rh + lambda) - parent;
        if (gain > best.gain + 1e-12) best = {gain, f, b};
      }
    }
    return best;
  }

  const BinnedData& data_;
  const GbdtConfig& config_;
  std::vector<int> offsets_;
};

double traverse(const std::vector<TreeNode>& tree, std::span<const float> x) {
  int n = 0;
  while (tree[n].feature >= 0) n = x[tree[n].feature] < tree[n].threshold ? tree[n].left : tree[n].right;
  return tree[n].value;
}

void softmax_inplace(std::span<double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double& e : v) {
    e = std::exp(e - m);
    s += e;
  }
  for (double& e : v) e /= s;
}

}  // namespace

GradientBoostedTrees GradientBoostedTrees::fit(const RowMatrixF& x, std::span<const int> labels,
                                               int num_classes, const GbdtConfig& config) {
  check(x.rows() == static_cast<Eigen::Index>(labels.size()), ErrorCode::kInvalidInput,
        "feature rows and labels differ in length");
  check_training_labels(labels, num_classes);
  check(config.rounds >= 0 && config.max_depth >= 0 && config.learning_rate > 0.0,
        ErrorCode::kInvalidConfig, "invalid boosting configuration");

  GradientBoostedTrees model;
  model.num_classes_ = num_classes;
  model.num_outputs_ = num_classes == 2 ? 1 : num_classes;
  model.num_features_ = static_cast<int>(x.cols());
  const int n = static_cast<int>(x.rows());
  const int k_out = model.num_outputs_;

  std::vector<double> prior(num_classes, 0.0);
  for (int y : labels) prior[y] += 1.0;
  for (double& p : prior) p = std::max(p / n, 1e-6);
  if (k_out == 1) {
    model.base_score_ = {std::log(prior[1] / prior[0])};
  } else {
    for (double p : prior) model.base_score_.push_back(std::log(p));
  }

  const BinnedData data = bin_features(x, config);
  TreeBuilder builder(data, config);
  std::vector<double> scores(static_cast<std::size_t>(n) * k_out);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < k_out; ++k) scores[static_cast<std::size_t>(i) * k_out + k] = model.base_score_[k];
  }
  std::vector<GradPair> grad(n);
  std::vector<double> prob(static_cast<std::size_t>(n) * k_out);
  std::mt19937_64 rng(config.seed);
  std::vector<int> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), 0);
  std::vector<int> rows;

  for (int round = 0; round < config.rounds; ++round) {
    for (int i = 0; i < n; ++i) {
      double* s = scores.data() + static_cast<std::size_t>(i) * k_out;
      double* p = prob.data() + static_cast<std::size_t>(i) * k_out;
      if (k_out == 1) {
        p[0] = 1.0 / (1.0 + std::exp(-s[0]));
      } else {
        std::copy(s, s + k_out, p);
        softmax_inplace(std::span<double>(p, k_out));
      }
    }
    for (int k = 0; k < k_out; ++k) {
      for (int i = 0; i < n; ++i) {
        const double p = prob[static_cast<std::size_t>(i) * k_out + k];
        const double target = k_out == 1 ? (labels[i] == 1 ? 1.0 : 0.0) : (labels[i] == k ? 1.0 : 0.0);
        grad[i] = {p - target, std::max(p * (1.0 - p), 1e-12)};
      }
      if (config.row_subsample < 1.0) {
        rows.clear();
        std::bernoulli_distribution keep(config.row_subsample);
        for (int i = 0; i < n; ++i) {
          if (keep(rng)) rows.push_back(i);
        }
        if (rows.empty()) rows.push_back(static_cast<int>(rng() % n));
        // Out-of-sample rows still need their score updated by the new tree.
        std::vector<double> delta(static_cast<std::size_t>(n), 0.0);
        auto tree = builder.build(rows, grad, delta, 1, 0);
        for (int i = 0; i < n; ++i) {
          const float* xi = x.row(i).data();
          scores[static_cast<std::size_t>(i) * k_out + k] +=
              traverse(tree, std::span<const float>(xi, x.cols()));
        }
        model.trees_.push_back(std::move(tree));
      } else {
        rows = all_rows;
        model.trees_.push_back(builder.build(rows, grad, scores, k_out, k));
      }
    }
  }
  return model;
}

void GradientBoostedTrees::predict_margin(std::span<const float> x, std::span<double> out) const {
  check(static_cast<int>(x.size()) == num_features_, ErrorCode::kInvalidInput,
        "expected " + std::to_string(num_features_) + " features, got " + std::to_string(x.size()));
  std::copy(base_score_.begin(), base_score_.end(), out.begin());
  for (std::size_t t = 0; t < trees_.size(); ++t) out[t % num_outputs_] += traverse(trees_[t], x);
}

void GradientBoostedTrees::predict_proba(std::span<const float> x, std::span<double> out) const {
  check(num_classes_ > 0, ErrorCode::kNotFitted, "boosted trees not fitted");
  if (num_outputs_ == 1) {
    double m = 0.0;
    predict_margin(x, std::span<double>(&m, 1));
    const double p1 = 1.0 / (1.0 + std::exp(-m));
    out[0] = 1.0 - p1;
    out[1] = p1;
    return;
  }
  predict_margin(x, out.first(num_outputs_));
  softmax_inplace(out.first(num_outputs_));
}

void GradientBoostedTrees::save(const BlobWriter& w) const {
  w.put_string("kind", kind());
  w.put_int("num_classes", num_classes_);
  w.put_int("num_outputs", num_outputs_);
  w.put_int("num_features", num_features_);
  w.put_f64("base_score", base_score_);
  std::vector<std::int64_t> offsets = {0};
  std::vector<std::int32_t> structure;
  std::vector<float> thresholds;
  std::vector<double> values;
  for (const auto& tree : trees_) {
    for (const auto& node : tree) {
      structure.insert(structure.end(), {node.feature, node.left, node.right});
      thresholds.push_back(node.threshold);
      values.push_back(node.value);
    }
    offsets.push_back(static_cast<std::int64_t>(values.size()));
  }
  w.put_i64("tree_offsets", offsets);
  w.put_i32("nodes", structure, {values.size(), 3});
  w.put_f32("thresholds", thresholds);
  w.put_f64("values", values);
}

GradientBoostedTrees GradientBoostedTrees::load(const BlobReader& r) {
  GradientBoostedTrees m;
  m.num_classes_ = static_cast<int>(r.integer("num_classes"));
  m.num_outputs_ = static_cast<int>(r.integer("num_outputs"));
  m.num_features_ = static_cast<int>(r.integer("num_features"));
  m.base_score_ = r.f64("base_score");
  const auto offsets = r.i64("tree_offsets");
  const auto structure = r.i32("nodes");
  const auto thresholds = r.f32("thresholds");
  const auto values = r.f64("values");
  check(structure.size() == 3 * values.size() && thresholds.size() == values.size() &&
            !offsets.empty() && offsets.back() == static_cast<std::int64_t>(values.size()) &&
            static_cast<int>(m.base_score_.size()) == m.num_outputs_,
        ErrorCode::kCorruptFormat, "boosted tree blobs disagree");
  for (std::size_t t = 0; t + 1 < offsets.size(); ++t) {
    std::vector<TreeNode> tree;
    const auto size = offsets[t + 1] - offsets[t];
    for (auto i = offsets[t]; i < offsets[t + 1]; ++i) {
      TreeNode node{structure[3 * i], thresholds[i], structure[3 * i + 1], structure[3 * i + 2], values[i]};
      check(node.feature < m.num_features_ && node.left < size && node.right < size,
            ErrorCode::kCorruptFormat, "tree node out of range");
      tree.push_back(node);
    }
    m.trees_.push_back(std::move(tree));
  }
  return m;
}

}  // namespace sal
