// SPDX-License-Identifier: Apache-2.0
#include "stssl/ssl/distill.hpp"

#include <cmath>

namespace stssl::ssl {

namespace {
constexpr Real kNormFloor = 1e-12;
}

std::string to_string(DistillCriterion c) {
  switch (c) {
    case DistillCriterion::mse: return "mse";
    case DistillCriterion::mae: return "mae";
    case DistillCriterion::cosine: return "cosine";
  }
  return "mse";
}

DistillCriterion distill_criterion_from_string(const std::string& text) {
  if (text == "mse") return DistillCriterion::mse;
  if (text == "mae") return DistillCriterion::mae;
  if (text == "cosine") return DistillCriterion::cosine;
  throw Error("unknown distillation criterion '" + text + "' (expected mse, mae or cosine)");
}

DistillTerm distillation_loss(const Mat& teacher, const Mat& student, DistillCriterion criterion) {
  if (teacher.rows() != student.rows() || teacher.cols() != student.cols()) {
    throw Error("distillation: embedding shapes differ");
  }
  DistillTerm t;
  const auto n = student.rows();
  t.grad_student = Mat::Zero(n, student.cols());
  if (n == 0) {
    t.grad_teacher = t.grad_student;
    return t;
  }
  const Mat diff = student - teacher;
  switch (criterion) {
    case DistillCriterion::mse: {
      const Real count = static_cast<Real>(diff.size());
      t.value = diff.squaredNorm() / count;
      t.grad_student = diff * (2.0 / count);
      break;
    }
    case DistillCriterion::mae: {
      const Real count = static_cast<Real>(diff.size());
      t.value = diff.cwiseAbs().sum() / count;
      t.grad_student = diff.unaryExpr([count](Real v) { return (v > 0 ? 1.0 : v < 0 ? -1.0 : 0.0) / count; });
      break;
    }
    case DistillCriterion::cosine: {
      t.grad_teacher = Mat::Zero(n, student.cols());
      const Real inv_n = 1.0 / static_cast<Real>(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Real ns = std::max(student.row(i).norm(), kNormFloor);
        const Real nt = std::max(teacher.row(i).norm(), kNormFloor);
        const Real cos = student.row(i).dot(teacher.row(i)) / (ns * nt);
        t.value += 1.0 - cos;
        t.grad_student.row(i) = -inv_n * (teacher.row(i) / (ns * nt) - cos * student.row(i) / (ns * ns));
        t.grad_teacher.row(i) = -inv_n * (student.row(i) / (ns * nt) - cos * teacher.row(i) / (nt * nt));
      }
      t.value *= inv_n;
      return t;
    }
  }
  t.grad_teacher = -t.grad_student;
  return t;
}

}  // namespace stssl::ssl
