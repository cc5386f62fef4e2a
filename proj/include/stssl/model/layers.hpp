// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/common/types.hpp"

namespace stssl::model {

/// y = x * w + b, with b a 1 x out row broadcast over rows.
Mat linear(const Mat& x, const Mat& w, const Mat& b);
/// Accumulates dw, db and (when requested) overwrites dx.
void linear_backward(const Mat& x, const Mat& w, const Mat& dy, Mat& dw, Mat& db, Mat* dx);

struct LayerNormCache {
  Mat xhat;
  ColVec rstd;
};

constexpr Real kLayerNormEps = 1e-6;

/// Row-wise layer norm with per-column gain and bias (both 1 x width).
Mat layer_norm(const Mat& x, const Mat& gamma, const Mat& beta, LayerNormCache* cache);
/// Accumulates dgamma, dbeta; returns dx.
Mat layer_norm_backward(const LayerNormCache& cache, const Mat& gamma, const Mat& dy, Mat& dgamma,
                        Mat& dbeta);

/// Exact (erf) GELU and its derivative.
Real gelu(Real x);
Real gelu_grad(Real x);
Mat gelu(const Mat& x);

/// Row-wise numerically stable softmax.
Mat softmax_rows(const Mat& logits);
Mat sigmoid(const Mat& logits);

}  // namespace stssl::model
