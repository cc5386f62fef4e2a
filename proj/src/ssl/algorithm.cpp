// SPDX-License-Identifier: Apache-2.0
#include "stssl/ssl/algorithm.hpp"

#include <algorithm>

namespace stssl::ssl {

LossTerm SslAlgorithm::labeled_loss(const Mat& targets, const Mat& logits, TaskMode mode) const {
  return supervised_loss(targets, logits, mode);
}

LossTerm SslAlgorithm::unlabeled_loss(const PseudoBatch& pseudo, const Mat& strong_logits, TaskMode mode) const {
  return masked_loss(pseudo, strong_logits, mode);
}

bool SslAlgorithm::has_debias() const {
  const auto extras = extra_losses();
  return std::find(extras.begin(), extras.end(), "debias") != extras.end();
}

FixMatch::FixMatch(Real tau) : tau_(tau) {
  if (!(tau > 0.5 && tau <= 1.0)) throw Error("confidence threshold must lie in (0.5, 1]");
}

PseudoBatch FixMatch::pseudo(const Mat& weak_logits, TaskMode mode, PseudoSource source) const {
  return fixmatch_pseudo(weak_logits, tau_, mode, source);
}

std::unique_ptr<SslAlgorithm> make_algorithm(const std::string& name, Real tau) {
  if (name == "fixmatch") return std::make_unique<FixMatch>(tau);
  if (name == "defixmatch") return std::make_unique<DeFixMatch>(tau);
  throw Error("unknown SSL algorithm '" + name + "' (expected fixmatch or defixmatch)");
}

namespace {

void check_aligned(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error("weak and strong outputs are misaligned");
}

}  // namespace

UnsupervisedTerm unsupervised_loss_self(const Mat& weak_logits, const Mat& strong_logits,
                                        const SslAlgorithm& algo, TaskMode mode) {
  check_aligned(weak_logits, strong_logits);
  UnsupervisedTerm t;
  t.pseudo = algo.pseudo(weak_logits, mode, PseudoSource::self);
  t.loss = algo.unlabeled_loss(t.pseudo, strong_logits, mode);
  return t;
}

UnsupervisedTerm unsupervised_loss_cross(const Mat& teacher_weak_logits, const Mat& student_strong_logits,
                                         const SslAlgorithm& algo, TaskMode mode) {
  check_aligned(teacher_weak_logits, student_strong_logits);
  UnsupervisedTerm t;
  t.pseudo = algo.pseudo(teacher_weak_logits, mode, PseudoSource::teacher);
  t.loss = algo.unlabeled_loss(t.pseudo, student_strong_logits, mode);
  return t;
}

UnsupervisedTerm defixmatch_debias(const Mat& labeled_weak_logits, const Mat& labeled_strong_logits,
                                   const SslAlgorithm& algo, TaskMode mode, const PseudoBatch* pseudo_source) {
  if (labeled_weak_logits.size() == 0 && !pseudo_source) throw Error("debias term needs the labeled weak view");
  UnsupervisedTerm t;
  if (pseudo_source) {
    if (pseudo_source->targets.rows() != labeled_strong_logits.rows()) {
      throw Error("weak and strong outputs are misaligned");
    }
    t.pseudo = *pseudo_source;
  } else {
    check_aligned(labeled_weak_logits, labeled_strong_logits);
    t.pseudo = algo.pseudo(labeled_weak_logits, mode, PseudoSource::self);
  }
  t.loss = algo.unlabeled_loss(t.pseudo, labeled_strong_logits, mode);
  t.loss.value = -t.loss.value;
  t.loss.grad = -t.loss.grad;
  return t;
}

}  // namespace stssl::ssl
