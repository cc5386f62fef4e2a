// SPDX-License-Identifier: Apache-2.0
#include "stssl/ssl/losses.hpp"

#include "stssl/model/layers.hpp"

#include <cmath>

namespace stssl::ssl {

namespace {

Real softplus(Real z) { return std::max(z, Real{0}) + std::log1p(std::exp(-std::abs(z))); }

void check_shapes(const Mat& targets, const Mat& logits) {
  if (targets.rows() != logits.rows() || targets.cols() != logits.cols()) {
    throw Error("loss: targets and logits are misaligned");
  }
}

/// Per-sample loss and its per-row gradient (unscaled by batch size).
void row_loss(const Mat& targets, const Mat& logits, TaskMode mode, ColVec& values, Mat& grad) {
  const auto n = logits.rows();
  const auto k = logits.cols();
  values.resize(n);
  grad.resize(n, k);
  if (mode == TaskMode::single_label) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Real m = logits.row(i).maxCoeff();
      const Real lse = m + std::log((logits.row(i).array() - m).exp().sum());
      const RowVec logp = logits.row(i).array() - lse;
      values[i] = -targets.row(i).dot(logp);
      grad.row(i) = logp.array().exp() * targets.row(i).sum() - targets.row(i).array();
    }
  } else {
    const Mat p = model::sigmoid(logits);
    for (Eigen::Index i = 0; i < n; ++i) {
      Real s = 0;
      for (Eigen::Index c = 0; c < k; ++c) s += softplus(logits(i, c)) - targets(i, c) * logits(i, c);
      values[i] = s / static_cast<Real>(k);
    }
    grad = (p - targets) / static_cast<Real>(k);
  }
}

}  // namespace

ColVec per_sample_loss(const Mat& targets, const Mat& logits, TaskMode mode) {
  check_shapes(targets, logits);
  ColVec values;
  Mat grad;
  row_loss(targets, logits, mode, values, grad);
  return values;
}

LossTerm supervised_loss(const Mat& targets, const Mat& logits, TaskMode mode) {
  check_shapes(targets, logits);
  if (logits.rows() == 0) throw Error("supervised loss: empty batch");
  ColVec values;
  LossTerm t;
  row_loss(targets, logits, mode, values, t.grad);
  const Real n = static_cast<Real>(logits.rows());
  t.value = values.sum() / n;
  t.grad /= n;
  return t;
}

PseudoBatch fixmatch_pseudo(const Mat& weak_logits, Real tau, TaskMode mode, PseudoSource source) {
  if (!(tau > 0.5 && tau <= 1.0)) throw Error("confidence threshold must lie in (0.5, 1]");
  const auto n = weak_logits.rows();
  const auto k = weak_logits.cols();
  PseudoBatch pb;
  pb.source = source;
  pb.targets = Mat::Zero(n, k);
  if (mode == TaskMode::single_label) {
    pb.weights = Mat::Zero(n, 1);
    const Mat p = model::softmax_rows(weak_logits);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index arg = 0;
      const Real conf = p.row(i).maxCoeff(&arg);
      pb.targets(i, arg) = 1.0;
      pb.weights(i, 0) = conf >= tau ? 1.0 : 0.0;
    }
  } else {
    pb.weights = Mat::Zero(n, k);
    const Mat p = model::sigmoid(weak_logits);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < k; ++c) {
        const Real pc = p(i, c);
        pb.targets(i, c) = pc >= 0.5 ? 1.0 : 0.0;
        pb.weights(i, c) = std::max(pc, 1.0 - pc) >= tau ? 1.0 : 0.0;
      }
    }
  }
  return pb;
}

LossTerm masked_loss(const PseudoBatch& pseudo, const Mat& logits, TaskMode mode) {
  check_shapes(pseudo.targets, logits);
  const auto n = logits.rows();
  const auto k = logits.cols();
  const Eigen::Index wcols = mode == TaskMode::single_label ? 1 : k;
  if (pseudo.weights.rows() != n || pseudo.weights.cols() != wcols) throw Error("loss: α weights misaligned");
  LossTerm t;
  t.grad = Mat::Zero(n, k);
  if (n == 0) return t;
  const Real inv_n = 1.0 / static_cast<Real>(n);
  if (mode == TaskMode::single_label) {
    ColVec values;
    Mat grad;
    row_loss(pseudo.targets, logits, mode, values, grad);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Real a = pseudo.weights(i, 0);
      if (a == 0.0) continue;
      t.value += a * values[i];
      t.grad.row(i) = a * inv_n * grad.row(i);
    }
    t.value *= inv_n;
  } else {
    const Mat p = model::sigmoid(logits);
    const Real inv_k = 1.0 / static_cast<Real>(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < k; ++c) {
        const Real a = pseudo.weights(i, c);
        if (a == 0.0) continue;
        const Real z = logits(i, c);
        t.value += a * inv_k * (softplus(z) - pseudo.targets(i, c) * z);
        t.grad(i, c) = a * inv_k * inv_n * (p(i, c) - pseudo.targets(i, c));
      }
    }
    t.value *= inv_n;
  }
  return t;
}

void LossWeights::validate() const {
  if (!(lambda_u >= 0.0) || !(lambda_d >= 0.0)) throw Error("loss weights must be non-negative");
}

Real total_teacher_loss(const TeacherParts& parts, const LossWeights& weights) {
  Real total = parts.supervised;
  if (weights.lambda_u != 0.0) total += weights.lambda_u * (parts.unsupervised + parts.debias);
  return total;
}

Real total_student_loss(const StudentParts& parts, const LossWeights& weights) {
  Real total = parts.supervised;
  if (weights.lambda_u != 0.0) total += weights.lambda_u * (parts.unsupervised + parts.debias);
  if (weights.lambda_d != 0.0) total += weights.lambda_d * parts.distillation;
  return total;
}

}  // namespace stssl::ssl
