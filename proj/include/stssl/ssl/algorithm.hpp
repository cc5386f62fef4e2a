// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/ssl/losses.hpp"

#include <memory>
#include <string>
#include <vector>

namespace stssl::ssl {

/// Unlabeled term plus the pseudo-labels that produced it.
struct UnsupervisedTerm {
  LossTerm loss;
  PseudoBatch pseudo;
};

/// A FixMatch-family method: pseudo-label generation with its α weights, the
/// labeled and unlabeled criteria, and any extra loss terms. Instances are
/// immutable after construction.
class SslAlgorithm {
 public:
  virtual ~SslAlgorithm() = default;

  virtual std::string name() const = 0;
  virtual Real tau() const = 0;
  /// Names of extra loss terms beyond L_L and L_U.
  virtual std::vector<std::string> extra_losses() const { return {}; }

  virtual PseudoBatch pseudo(const Mat& weak_logits, TaskMode mode, PseudoSource source) const = 0;
  virtual LossTerm labeled_loss(const Mat& targets, const Mat& logits, TaskMode mode) const;
  virtual LossTerm unlabeled_loss(const PseudoBatch& pseudo, const Mat& strong_logits, TaskMode mode) const;

  bool has_debias() const;
};

class FixMatch : public SslAlgorithm {
 public:
  explicit FixMatch(Real tau = 0.95);
  std::string name() const override { return "fixmatch"; }
  Real tau() const override { return tau_; }
  PseudoBatch pseudo(const Mat& weak_logits, TaskMode mode, PseudoSource source) const override;

 private:
  Real tau_;
};

/// FixMatch plus the negated unsupervised loss on the labeled batch.
class DeFixMatch : public FixMatch {
 public:
  using FixMatch::FixMatch;
  std::string name() const override { return "defixmatch"; }
  std::vector<std::string> extra_losses() const override { return {"debias"}; }
};

/// "fixmatch" or "defixmatch".
std::unique_ptr<SslAlgorithm> make_algorithm(const std::string& name, Real tau);

/// Pseudo-labels from the weak view, loss on the strong view. The weak view
/// receives no gradient.
UnsupervisedTerm unsupervised_loss_self(const Mat& weak_logits, const Mat& strong_logits,
                                        const SslAlgorithm& algo, TaskMode mode);
/// Same arithmetic with the teacher as pseudo-label source.
UnsupervisedTerm unsupervised_loss_cross(const Mat& teacher_weak_logits, const Mat& student_strong_logits,
                                         const SslAlgorithm& algo, TaskMode mode);
/// Negated unsupervised arithmetic on the labeled batch's two views. When
/// pseudo_source is given its pseudo-labels replace the ones derived from
/// labeled_weak_logits.
UnsupervisedTerm defixmatch_debias(const Mat& labeled_weak_logits, const Mat& labeled_strong_logits,
                                   const SslAlgorithm& algo, TaskMode mode,
                                   const PseudoBatch* pseudo_source = nullptr);

}  // namespace stssl::ssl
