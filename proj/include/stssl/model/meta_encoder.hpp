// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/common/types.hpp"

namespace stssl::model {

/// Two affine layers with a GELU between them, mapping normalized metadata to
/// one embed_dim token.
struct MetaEncoderWeights {
  const Mat& fc1_weight;  // in x hidden
  const Mat& fc1_bias;    // 1 x hidden
  const Mat& fc2_weight;  // hidden x embed
  const Mat& fc2_bias;    // 1 x embed
};

struct MetaEncoderGrads {
  Mat& fc1_weight;
  Mat& fc1_bias;
  Mat& fc2_weight;
  Mat& fc2_bias;
};

struct MetaEncoderCache {
  Mat input;
  Mat pre_activation;
  Mat hidden;
};

Mat encode_metadata(const Mat& inputs, const MetaEncoderWeights& w, MetaEncoderCache* cache = nullptr);

/// Accumulates parameter gradients; returns d(inputs).
Mat encode_metadata_backward(const MetaEncoderCache& cache, const MetaEncoderWeights& w,
                             const Mat& d_output, MetaEncoderGrads grads);

}  // namespace stssl::model
