// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/common/types.hpp"

#include <string>

namespace stssl::ssl {

enum class DistillCriterion { mse, mae, cosine };

std::string to_string(DistillCriterion c);
DistillCriterion distill_criterion_from_string(const std::string& text);

struct DistillTerm {
  Real value = 0.0;
  Mat grad_student;
  Mat grad_teacher;
};

/// mse: mean squared difference over samples and dimensions. mae: mean
/// absolute difference. cosine: mean over samples of 1 - cos(teacher, student).
/// Both gradients are returned; whether the teacher's is used is the caller's
/// decision. Throws Error on a shape mismatch.
DistillTerm distillation_loss(const Mat& teacher, const Mat& student, DistillCriterion criterion);

}  // namespace stssl::ssl
