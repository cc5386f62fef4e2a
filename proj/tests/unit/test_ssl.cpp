// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "stssl/eval/metrics.hpp"
#include "stssl/ssl/algorithm.hpp"
#include "stssl/ssl/distill.hpp"
#include "stssl/ssl/losses.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <limits>

using namespace stssl;
using ssl::PseudoBatch;

namespace {

/// Soft target rows: random simplex points.
Mat soft_targets(Rng& rng, int n, int k) {
  Mat t = fixture::random_matrix(rng, n, k, 0.0, 1.0);
  for (int i = 0; i < n; ++i) t.row(i) /= t.row(i).sum();
  return t;
}

double oracle_slot_loss(const Mat& t, const Mat& z, Eigen::Index i, Eigen::Index k) {
  const std::vector<double> tt{t(i, k)}, zz{z(i, k)};
  return oracle::binary_cross_entropy(tt, zz);
}

/// (1/n) sum_i alpha_i * l_i, recomputed sample by sample.
double oracle_masked(const PseudoBatch& pb, const Mat& z, TaskMode mode) {
  const auto n = z.rows();
  long double total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mode == TaskMode::single_label) {
      if (pb.weights(i, 0) == 0.0) continue;
      total += pb.weights(i, 0) * oracle::cross_entropy(oracle::row(pb.targets, i), oracle::row(z, i));
    } else {
      long double s = 0;
      for (Eigen::Index k = 0; k < z.cols(); ++k) {
        if (pb.weights(i, k) == 0.0) continue;
        s += pb.weights(i, k) * oracle_slot_loss(pb.targets, z, i, k);
      }
      total += s / z.cols();
    }
  }
  return static_cast<double>(total / n);
}

template <typename F>
Mat numeric_grad(const Mat& x, F f, double h = 1e-6) {
  Mat g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Mat up = x, down = x;
    up.data()[i] += h;
    down.data()[i] -= h;
    g.data()[i] = (f(up) - f(down)) / (2 * h);
  }
  return g;
}

double max_rel(const Mat& a, const Mat& n, double floor = 1e-7) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - n.data()[i]) /
                                std::max({std::abs(a.data()[i]), std::abs(n.data()[i]), floor}));
  }
  return worst;
}

}  // namespace

TEST_CASE("batched supervised losses equal per-sample oracle recomputation") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(12));
    const int k = 2 + static_cast<int>(rng.below(8));
    const Mat z = fixture::random_matrix(rng, n, k, -4.0, 4.0);
    for (auto mode : {TaskMode::single_label, TaskMode::multi_label}) {
      const Mat t = trial % 2 == 0 || mode == TaskMode::multi_label ? fixture::random_targets(rng, n, k, mode)
                                                                    : soft_targets(rng, n, k);
      const ColVec per = ssl::per_sample_loss(t, z, mode);
      long double mean = 0;
      for (int i = 0; i < n; ++i) {
        const double o = mode == TaskMode::single_label ? oracle::cross_entropy(oracle::row(t, i), oracle::row(z, i))
                                                        : oracle::binary_cross_entropy(oracle::row(t, i), oracle::row(z, i));
        CHECK(std::abs(per(i) - o) < 1e-6);
        mean += o;
      }
      CHECK(std::abs(ssl::supervised_loss(t, z, mode).value - static_cast<double>(mean / n)) < 1e-6);
    }
  }
}

TEST_CASE("masked loss equals per-sample oracle on random batches") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(10));
    const int k = 2 + static_cast<int>(rng.below(6));
    for (auto mode : {TaskMode::single_label, TaskMode::multi_label}) {
      const Mat weak = fixture::random_matrix(rng, n, k, -6.0, 6.0);
      const Mat strong = fixture::random_matrix(rng, n, k, -3.0, 3.0);
      const auto pb = ssl::fixmatch_pseudo(weak, 0.8, mode);
      CHECK(std::abs(ssl::masked_loss(pb, strong, mode).value - oracle_masked(pb, strong, mode)) < 1e-6);
    }
  }
}

TEST_CASE("loss gradients match finite differences") {
  Rng rng(3);
  for (auto mode : {TaskMode::single_label, TaskMode::multi_label}) {
    const Mat z = fixture::random_matrix(rng, 5, 4, -3.0, 3.0);
    const Mat t = mode == TaskMode::single_label ? soft_targets(rng, 5, 4) : fixture::random_targets(rng, 5, 4, mode);
    const auto sup = ssl::supervised_loss(t, z, mode);
    CHECK(max_rel(sup.grad, numeric_grad(z, [&](const Mat& x) { return ssl::supervised_loss(t, x, mode).value; })) < 1e-5);
    const auto pb = ssl::fixmatch_pseudo(fixture::random_matrix(rng, 5, 4, -6.0, 6.0), 0.7, mode);
    const auto m = ssl::masked_loss(pb, z, mode);
    CHECK(max_rel(m.grad, numeric_grad(z, [&](const Mat& x) { return ssl::masked_loss(pb, x, mode).value; })) < 1e-5);
  }
}

TEST_CASE("soft-target cross-entropy gradient is p * sum(t) - t") {
  Mat z(1, 3);
  z << 0.2, -1.0, 0.5;
  Mat t(1, 3);
  t << 0.5, 0.0, 1.0;  // sums to 1.5
  const auto l = ssl::supervised_loss(t, z, TaskMode::single_label);
  const Mat p = (z.array() - z.maxCoeff()).exp().matrix();
  const Mat sm = p / p.sum();
  for (int k = 0; k < 3; ++k) CHECK(l.grad(0, k) == doctest::Approx(sm(0, k) * 1.5 - t(0, k)));
}

TEST_CASE("fixmatch pseudo-labels: threshold, hard targets, and sigmoid tie") {
  Mat z(3, 3);
  z << 5.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 9.0;  // confidences 0.987, 0.787, 0.9998
  const auto pb = ssl::fixmatch_pseudo(z, 0.95, TaskMode::single_label, ssl::PseudoSource::teacher);
  CHECK(pb.source == ssl::PseudoSource::teacher);
  CHECK(pb.weights(0, 0) == 1.0);
  CHECK(pb.weights(1, 0) == 0.0);
  CHECK(pb.weights(2, 0) == 1.0);
  CHECK(pb.targets(2, 2) == 1.0);
  CHECK(pb.targets.row(2).sum() == 1.0);

  Mat m(1, 2);
  m << 0.0, -10.0;  // sigmoid 0.5 exactly and ~0
  const auto mb = ssl::fixmatch_pseudo(m, 0.9, TaskMode::multi_label);
  CHECK(mb.targets(0, 0) == 1.0);
  CHECK(mb.weights(0, 0) == 0.0);
  CHECK(mb.targets(0, 1) == 0.0);
  CHECK(mb.weights(0, 1) == 1.0);

  CHECK_THROWS_AS(ssl::fixmatch_pseudo(z, 0.5, TaskMode::single_label), Error);
  CHECK_THROWS_AS(ssl::fixmatch_pseudo(z, 1.0 + 1e-9, TaskMode::single_label), Error);
  CHECK_NOTHROW(ssl::fixmatch_pseudo(z, 1.0, TaskMode::single_label));
}

TEST_CASE("threshold boundary: confidence equal to tau passes") {
  Mat z(1, 2);
  z << std::log(3.0), 0.0;  // softmax = (0.75, 0.25)
  const double conf = 1.0 / (1.0 + std::exp(-std::log(3.0)));
  CHECK(ssl::fixmatch_pseudo(z, conf, TaskMode::single_label).weights(0, 0) == 1.0);
  CHECK(ssl::fixmatch_pseudo(z, std::nextafter(conf, 2.0), TaskMode::single_label).weights(0, 0) == 0.0);
}

TEST_CASE("masked samples contribute exactly zero gradient") {
  Rng rng(4);
  for (auto mode : {TaskMode::single_label, TaskMode::multi_label}) {
    const Mat weak = fixture::random_matrix(rng, 8, 5, -6.0, 6.0);
    const Mat strong = fixture::random_matrix(rng, 8, 5, -2.0, 2.0);
    const auto pb = ssl::fixmatch_pseudo(weak, 0.9, mode);
    const auto l = ssl::masked_loss(pb, strong, mode);
    for (Eigen::Index i = 0; i < 8; ++i) {
      for (Eigen::Index k = 0; k < 5; ++k) {
        const double alpha = mode == TaskMode::single_label ? pb.weights(i, 0) : pb.weights(i, k);
        if (alpha == 0.0) CHECK(l.grad(i, k) == 0.0);
      }
    }
  }
}

TEST_CASE("tau = 1 on a batch with no saturated confidence masks everything to an exact zero loss") {
  Rng rng(5);
  for (auto mode : {TaskMode::single_label, TaskMode::multi_label}) {
    const Mat weak = fixture::random_matrix(rng, 6, 4, -2.0, 2.0);
    const Mat strong = fixture::random_matrix(rng, 6, 4, -2.0, 2.0);
    const auto pb = ssl::fixmatch_pseudo(weak, 1.0, mode);
    CHECK((pb.weights.array() == 0.0).all());
    const auto l = ssl::masked_loss(pb, strong, mode);
    CHECK(l.value == 0.0);
    CHECK((l.grad.array() == 0.0).all());
  }
}

TEST_CASE("pseudo-label quantity is non-increasing in tau") {
  Rng rng(6);
  for (auto mode : {TaskMode::single_label, TaskMode::multi_label}) {
    const Mat weak = fixture::random_matrix(rng, 64, 5, -4.0, 4.0);
    const Mat truth = fixture::random_targets(rng, 64, 5, mode);
    double last = 2.0;
    for (double tau : {0.51, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 1.0}) {
      const auto s = eval::pseudo_stats(ssl::fixmatch_pseudo(weak, tau, mode), truth);
      CHECK(s.quantity <= last);
      CHECK(s.quantity >= 0.0);
      CHECK(s.quantity <= 1.0);
      if (s.quality) {
        CHECK(*s.quality >= 0.0);
        CHECK(*s.quality <= 1.0);
      }
      last = s.quantity;
    }
  }
}

TEST_CASE("algorithms: self and cross pseudo-labeling share arithmetic, debias negates") {
  Rng rng(7);
  const auto algo = ssl::make_algorithm("defixmatch", 0.8);
  CHECK(algo->name() == "defixmatch");
  CHECK(algo->has_debias());
  CHECK_FALSE(ssl::make_algorithm("fixmatch", 0.8)->has_debias());
  CHECK_THROWS_AS(ssl::make_algorithm("mixmatch", 0.8), Error);
  CHECK_THROWS_AS(ssl::make_algorithm("fixmatch", 0.3), Error);
  const Mat weak = fixture::random_matrix(rng, 6, 4, -5.0, 5.0);
  const Mat strong = fixture::random_matrix(rng, 6, 4, -2.0, 2.0);
  const auto self = ssl::unsupervised_loss_self(weak, strong, *algo, TaskMode::single_label);
  const auto cross = ssl::unsupervised_loss_cross(weak, strong, *algo, TaskMode::single_label);
  CHECK(self.loss.value == cross.loss.value);
  CHECK(self.loss.grad == cross.loss.grad);
  CHECK(self.pseudo.source == ssl::PseudoSource::self);
  CHECK(cross.pseudo.source == ssl::PseudoSource::teacher);
  const auto debias = ssl::defixmatch_debias(weak, strong, *algo, TaskMode::single_label);
  CHECK(debias.loss.value == -self.loss.value);
  CHECK(debias.loss.grad == Mat(-self.loss.grad));
  const auto external = ssl::defixmatch_debias(Mat(), strong, *algo, TaskMode::single_label, &self.pseudo);
  CHECK(external.loss.value == debias.loss.value);
}

TEST_CASE("total losses follow the weighting and drop zero-weight terms") {
  ssl::LossWeights w{0.5, 2.0};
  CHECK(ssl::total_teacher_loss({1.0, 2.0, -0.5}, w) == doctest::Approx(1.0 + 0.5 * 1.5));
  CHECK(ssl::total_student_loss({1.0, 2.0, 3.0, -0.5}, w) == doctest::Approx(1.0 + 0.5 * 1.5 + 2.0 * 3.0));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(ssl::total_student_loss({1.0, 2.0, nan, 0.0}, {1.0, 0.0}) == 3.0);
  CHECK(ssl::total_student_loss({1.0, nan, 1.0, nan}, {0.0, 1.0}) == 2.0);
  CHECK_THROWS_AS((ssl::LossWeights{-1.0, 1.0}.validate()), Error);
}

TEST_CASE("distillation criteria: values and both gradients") {
  Rng rng(8);
  for (int seed = 0; seed < 5; ++seed) {
    const Mat t = fixture::random_matrix(rng, 4, 6);
    const Mat s = fixture::random_matrix(rng, 4, 6);
    for (auto c : {ssl::DistillCriterion::mse, ssl::DistillCriterion::mae, ssl::DistillCriterion::cosine}) {
      const auto d = ssl::distillation_loss(t, s, c);
      CHECK(max_rel(d.grad_student, numeric_grad(s, [&](const Mat& x) { return ssl::distillation_loss(t, x, c).value; })) <
            1e-5);
      CHECK(max_rel(d.grad_teacher, numeric_grad(t, [&](const Mat& x) { return ssl::distillation_loss(x, s, c).value; })) <
            1e-5);
    }
  }
  Mat a(2, 2), b(2, 2);
  a << 1.0, 0.0, 0.0, 2.0;
  b << 0.0, 1.0, 0.0, 4.0;
  CHECK(ssl::distillation_loss(a, b, ssl::DistillCriterion::mse).value == doctest::Approx((1 + 1 + 0 + 4) / 4.0));
  CHECK(ssl::distillation_loss(a, b, ssl::DistillCriterion::mae).value == doctest::Approx((1 + 1 + 0 + 2) / 4.0));
  CHECK(ssl::distillation_loss(a, b, ssl::DistillCriterion::cosine).value == doctest::Approx((1.0 + 0.0) / 2.0));
  CHECK(ssl::distillation_loss(a, a, ssl::DistillCriterion::mse).value == 0.0);
  const Mat zero = Mat::Zero(2, 2);
  const auto z = ssl::distillation_loss(zero, b, ssl::DistillCriterion::cosine);
  CHECK(std::isfinite(z.value));
  CHECK(z.grad_student.allFinite());
  CHECK_THROWS_AS(ssl::distillation_loss(a, Mat::Zero(2, 3), ssl::DistillCriterion::mse), Error);
  CHECK(ssl::distill_criterion_from_string("cosine") == ssl::DistillCriterion::cosine);
  CHECK_THROWS_AS(ssl::distill_criterion_from_string("kl"), Error);
}
