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

#include "sal/logistic.h"

#include <cmath>
#include <deque>
#include <string>

#include "sal/status.h"

namespace sal {

namespace {

struct Objective {
  const Eigen::MatrixXd& z;        // n x d standardised features
  const Eigen::MatrixXd& onehot;   // n x k
  double l2;

  int k() const { return static_cast<int>(onehot.cols()); }
  int d() const { return static_cast<int>(z.cols()); }

  // theta = [W row-major (k x d), b (k)]
  double eval(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
    const int kk = k();
    const int dd = d();
    const double n = static_cast<double>(z.rows());
    Eigen::Map<const RowMatrixD> w(theta.data(), kk, dd);
    Eigen::Map<const Eigen::VectorXd> b(theta.data() + kk * dd, kk);
    Eigen::MatrixXd s = z * w.transpose();
    s.rowwise() += b.transpose();
    const Eigen::VectorXd row_max = s.rowwise().maxCoeff();
    s.colwise() -= row_max;
    Eigen::MatrixXd p = s.array().exp().matrix();
    const Eigen::VectorXd norm = p.rowwise().sum();
    p.array().colwise() /= norm.array();
    const double log_lik = (onehot.array() * s.array()).sum() - norm.array().log().sum();
    const double value = -log_lik / n + 0.5 * l2 * w.squaredNorm();
    const Eigen::MatrixXd diff = (p - onehot) / n;  // n x k
    grad->resize(theta.size());
    Eigen::Map<RowMatrixD> gw(grad->data(), kk, dd);
    gw = diff.transpose() * z + l2 * w;
    Eigen::Map<Eigen::VectorXd>(grad->data() + kk * dd, kk) = diff.colwise().sum().transpose();
    return value;
  }
};

}  // namespace

LogisticRegression LogisticRegression::fit(const RowMatrixF& x, std::span<const int> labels,
                                           int num_classes, const LogisticConfig& config) {
  check(x.rows() == static_cast<Eigen::Index>(labels.size()), ErrorCode::kInvalidInput,
        "feature rows and labels differ in length");
  check_training_labels(labels, num_classes);
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  const int k = num_classes;

  Eigen::MatrixXd z = x.cast<double>();
  const Eigen::VectorXd mu = z.colwise().mean().transpose();
  z.rowwise() -= mu.transpose();
  Eigen::VectorXd sigma = (z.colwise().squaredNorm() / n).cwiseSqrt().transpose();
  for (int j = 0; j < d; ++j) {
    if (sigma(j) < 1e-12) sigma(j) = 1.0;
  }
  z.array().rowwise() /= sigma.transpose().array();
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, k);
  for (int i = 0; i < n; ++i) onehot(i, labels[i]) = 1.0;

  const Objective obj{z, onehot, config.l2};
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k) * d + k);
  Eigen::VectorXd grad;
  double f = obj.eval(theta, &grad);
  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  int iter = 0;
  for (; iter < config.max_iterations; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() < config.gradient_tolerance) break;
    // Two-loop recursion.
    Eigen::VectorXd q = grad;
    std::vector<double> alpha(s_hist.size());
    for (int m = static_cast<int>(s_hist.size()) - 1; m >= 0; --m) {
      alpha[m] = s_hist[m].dot(q) / y_hist[m].dot(s_hist[m]);
      q -= alpha[m] * y_hist[m];
    }
    if (!s_hist.empty()) {
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    } else {
      q /= std::max(1.0, grad.norm());
    }
    for (std::size_t m = 0; m < s_hist.size(); ++m) {
      const double beta = y_hist[m].dot(q) / y_hist[m].dot(s_hist[m]);
      q += (alpha[m] - beta) * s_hist[m];
    }
    Eigen::VectorXd dir = -q;
    double slope = grad.dot(dir);
    if (slope >= 0.0) {
      dir = -grad;
      slope = -grad.squaredNorm();
      s_hist.clear();
      y_hist.clear();
    }
    double step = 1.0;
    Eigen::VectorXd next;
    Eigen::VectorXd next_grad;
    double next_f = f;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      next = theta + step * dir;
      next_f = obj.eval(next, &next_grad);
      if (next_f <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    Eigen::VectorXd s = next - theta;
    Eigen::VectorXd yv = next_grad - grad;
    if (s.dot(yv) > 1e-12) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      if (static_cast<int>(s_hist.size()) > config.history) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }
    const double change = f - next_f;
    theta = std::move(next);
    grad = std::move(next_grad);
    f = next_f;
    if (change <= 1e-12 * std::max(1.0, std::abs(f))) {
      ++iter;
      break;
    }
  }

  LogisticRegression model;
  model.iterations_ = iter;
  Eigen::Map<const RowMatrixD> w(theta.data(), k, d);
  Eigen::Map<const Eigen::VectorXd> b(theta.data() + static_cast<Eigen::Index>(k) * d, k);
  model.weights_ = w.array().rowwise() / sigma.transpose().array();
  model.intercept_ = b - model.weights_ * mu;
  return model;
}

void LogisticRegression::predict_proba(std::span<const float> x, std::span<double> out) const {
  check(intercept_.size() > 0, ErrorCode::kNotFitted, "logistic regression not fitted");
  check(static_cast<Eigen::Index>(x.size()) == weights_.cols(), ErrorCode::kInvalidInput,
        "expected " + std::to_string(weights_.cols()) + " features, got " + std::to_string(x.size()));
  const Eigen::Map<const Eigen::VectorXf> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  Eigen::VectorXd s = weights_ * xv.cast<double>() + intercept_;
  s.array() -= s.maxCoeff();
  s = s.array().exp().matrix();
  s /= s.sum();
  for (Eigen::Index i = 0; i < s.size(); ++i) out[i] = s(i);
}

void LogisticRegression::save(const BlobWriter& w) const {
  w.put_string("kind", kind());
  w.put_f64("weights", std::span<const double>(weights_.data(), weights_.size()),
            {static_cast<std::uint64_t>(weights_.rows()), static_cast<std::uint64_t>(weights_.cols())});
  w.put_f64("intercept", std::span<const double>(intercept_.data(), intercept_.size()));
}

LogisticRegression LogisticRegression::load(const BlobReader& r) {
  LogisticRegression m;
  auto w = r.f64("weights");
  const auto& shape = r.shape("weights");
  auto b = r.f64("intercept");
  check(shape.size() == 2 && shape[0] == b.size() && w.size() == shape[0] * shape[1],
        ErrorCode::kCorruptFormat, "logistic regression blobs disagree");
  m.weights_ = Eigen::Map<RowMatrixD>(w.data(), static_cast<Eigen::Index>(shape[0]),
                                      static_cast<Eigen::Index>(shape[1]));
  m.intercept_ = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  return m;
}

}  // namespace sal
