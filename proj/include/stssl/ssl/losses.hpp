// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/common/types.hpp"

namespace stssl::ssl {

/// A scalar loss together with its gradient with respect to the logits it was
/// computed from.
struct LossTerm {
  Real value = 0.0;
  Mat grad;
};

enum class PseudoSource { self, teacher };

/// Pseudo-targets for a batch. targets is batch x num_classes (one-hot rows
/// for hard single-label targets, 0/1 per class for multi-label, or soft
/// probabilities). weights holds α: batch x 1 for single-label, batch x
/// num_classes for multi-label.
struct PseudoBatch {
  Mat targets;
  Mat weights;
  PseudoSource source = PseudoSource::self;

  Eigen::Index size() const { return targets.rows(); }
};

/// Per-sample criteria: cross-entropy over softmax, or mean per-class binary
/// cross-entropy over sigmoids.
ColVec per_sample_loss(const Mat& targets, const Mat& logits, TaskMode mode);

/// Mean criterion over a labeled batch. Throws Error on an empty batch.
LossTerm supervised_loss(const Mat& targets, const Mat& logits, TaskMode mode);

/// Confidence-thresholded hard pseudo-labels. Confidence ≥ tau passes; a
/// sigmoid output of exactly 0.5 is a positive target.
PseudoBatch fixmatch_pseudo(const Mat& weak_logits, Real tau, TaskMode mode,
                            PseudoSource source = PseudoSource::self);

/// (1/n) Σ α·ℓ(pseudo, logits). Multi-label weights gate each class slot.
LossTerm masked_loss(const PseudoBatch& pseudo, const Mat& logits, TaskMode mode);

struct LossWeights {
  Real lambda_u = 1.0;
  Real lambda_d = 1.0;

  void validate() const;
};

struct TeacherParts {
  Real supervised = 0.0;
  Real unsupervised = 0.0;
  Real debias = 0.0;
};

struct StudentParts {
  Real supervised = 0.0;
  Real unsupervised = 0.0;
  Real distillation = 0.0;
  Real debias = 0.0;
};

/// L_L + λ_U·(L_U + debias).
Real total_teacher_loss(const TeacherParts& parts, const LossWeights& weights);
/// L_L + λ_U·(L_U + debias) + λ_D·L_D. A zero weight drops its term entirely.
Real total_student_loss(const StudentParts& parts, const LossWeights& weights);

}  // namespace stssl::ssl
