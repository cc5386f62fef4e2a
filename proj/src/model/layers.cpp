// SPDX-License-Identifier: Apache-2.0
#include "stssl/model/layers.hpp"

#include <cmath>
#include <numbers>

namespace stssl::model {

Mat linear(const Mat& x, const Mat& w, const Mat& b) {
  Mat y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

void linear_backward(const Mat& x, const Mat& w, const Mat& dy, Mat& dw, Mat& db, Mat* dx) {
  dw.noalias() += x.transpose() * dy;
  db.row(0) += dy.colwise().sum();
  if (dx) *dx = dy * w.transpose();
}

Mat layer_norm(const Mat& x, const Mat& gamma, const Mat& beta, LayerNormCache* cache) {
  const auto n = x.cols();
  Mat xhat(x.rows(), n);
  ColVec rstd(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Real mean = x.row(r).sum() / static_cast<Real>(n);
    const Real var = (x.row(r).array() - mean).square().sum() / static_cast<Real>(n);
    rstd[r] = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat.row(r) = (x.row(r).array() - mean) * rstd[r];
  }
  Mat y = xhat.array().rowwise() * gamma.row(0).array();
  y.rowwise() += beta.row(0);
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

Mat layer_norm_backward(const LayerNormCache& cache, const Mat& gamma, const Mat& dy, Mat& dgamma,
                        Mat& dbeta) {
  const auto n = static_cast<Real>(dy.cols());
  dgamma.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbeta.row(0) += dy.colwise().sum();
  Mat dxhat = dy.array().rowwise() * gamma.row(0).array();
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const Real mean_d = dxhat.row(r).sum() / n;
    const Real mean_dx = dxhat.row(r).dot(cache.xhat.row(r)) / n;
    dx.row(r) = cache.rstd[r] * (dxhat.row(r).array() - mean_d - cache.xhat.row(r).array() * mean_dx);
  }
  return dx;
}

Real gelu(Real x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

Real gelu_grad(Real x) {
  const Real cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const Real pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

Mat gelu(const Mat& x) { return x.unaryExpr([](Real v) { return gelu(v); }); }

Mat softmax_rows(const Mat& logits) {
  Mat p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const Real m = logits.row(r).maxCoeff();
    p.row(r) = (logits.row(r).array() - m).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

Mat sigmoid(const Mat& logits) {
  return logits.unaryExpr([](Real z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const Real e = std::exp(z);
    return e / (1.0 + e);
  });
}

}  // namespace stssl::model
