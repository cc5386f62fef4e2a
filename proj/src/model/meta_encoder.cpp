// SPDX-License-Identifier: Apache-2.0
#include "stssl/model/meta_encoder.hpp"

#include "stssl/model/layers.hpp"

namespace stssl::model {

Mat encode_metadata(const Mat& inputs, const MetaEncoderWeights& w, MetaEncoderCache* cache) {
  Mat pre = linear(inputs, w.fc1_weight, w.fc1_bias);
  Mat hidden = gelu(pre);
  Mat out = linear(hidden, w.fc2_weight, w.fc2_bias);
  if (cache) {
    cache->input = inputs;
    cache->pre_activation = std::move(pre);
    cache->hidden = std::move(hidden);
  }
  return out;
}

Mat encode_metadata_backward(const MetaEncoderCache& cache, const MetaEncoderWeights& w,
                             const Mat& d_output, MetaEncoderGrads grads) {
  Mat d_hidden;
  linear_backward(cache.hidden, w.fc2_weight, d_output, grads.fc2_weight, grads.fc2_bias, &d_hidden);
  Mat d_pre = d_hidden.cwiseProduct(cache.pre_activation.unaryExpr([](Real v) { return gelu_grad(v); }));
  Mat d_input;
  linear_backward(cache.input, w.fc1_weight, d_pre, grads.fc1_weight, grads.fc1_bias, &d_input);
  return d_input;
}

}  // namespace stssl::model
