// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/model/config.hpp"
#include "stssl/model/layers.hpp"
#include "stssl/model/meta_encoder.hpp"
#include "stssl/model/params.hpp"

#include <cstdint>
#include <vector>

namespace stssl::model {

/// Per-forward record. special_embedding is the final-norm output of the
/// metatoken (teacher, early fusion) or of the distillation token (student);
/// it is empty for layouts without a special token.
struct ModelOutputs {
  Mat logits;             // batch x num_classes
  Mat special_embedding;  // batch x embed_dim, or empty
  Mat cls_embedding;      // batch x embed_dim
};

struct BlockCache {
  Mat x_in;
  LayerNormCache ln1;
  Mat h1;
  Mat qkv;
  Mat attention;  // (batch * heads * seq) x seq, softmax rows
  Mat context;
  Mat x_mid;
  LayerNormCache ln2;
  Mat h2;
  Mat pre_activation;
  Mat activation;
};

/// Everything backward() needs from a forward pass.
struct ForwardCache {
  int batch = 0;
  Mat patches;
  MetaInputs meta;
  MetaEncoderCache meta_encoder;
  std::vector<BlockCache> blocks;
  LayerNormCache final_norm;
  Mat head_input;
};

/// Upstream gradients; null members contribute nothing.
struct OutputGrads {
  const Mat* logits = nullptr;
  const Mat* special_embedding = nullptr;
  const Mat* cls_embedding = nullptr;
};

/// Compact pre-norm vision transformer. The object holds only the
/// architecture; parameters are passed in, so one Backbone serves live
/// weights, EMA shadows and perturbed copies alike. forward() is const and
/// touches no shared mutable state.
class Backbone {
 public:
  explicit Backbone(BackboneConfig config);

  const BackboneConfig& config() const { return config_; }

  /// Deterministic under seed. Each tensor draws from its own stream keyed by
  /// name: weights and special tokens ~ truncated N(0, 0.02^2), biases zero,
  /// norm gains one.
  ParamSnapshot init_params(std::uint64_t seed) const;

  /// Parameter names and shapes in snapshot order.
  std::vector<std::pair<std::string, std::pair<int, int>>> layout() const;

  /// images: batch x (H*W*C), HWC rows in [0, 1]. Teachers require meta;
  /// student and plain layouts never read it.
  ModelOutputs forward(const ParamSnapshot& params, const Mat& images, const MetaInputs* meta,
                       ForwardCache* cache = nullptr) const;

  ModelOutputs forward(const ParamSnapshot& params, const Mat& images,
                       const std::vector<dataset::GeoTemporal>* meta,
                       ForwardCache* cache = nullptr) const;

  /// Accumulates parameter gradients into grads (same layout as params).
  /// When meta_input_grad is set, it receives d(loss)/d(encoder inputs).
  void backward(const ParamSnapshot& params, const ForwardCache& cache, const OutputGrads& upstream,
                ParamSnapshot& grads, Mat* meta_input_grad = nullptr) const;

 private:
  struct BlockIndex {
    std::size_t norm1_w, norm1_b, qkv_w, qkv_b, proj_w, proj_b, norm2_w, norm2_b, fc1_w, fc1_b,
        fc2_w, fc2_b;
  };
  struct Index {
    std::size_t patch_w, patch_b, cls, special = 0, pos, norm_w, norm_b, head_w, head_b;
    std::size_t meta_fc1_w = 0, meta_fc1_b = 0, meta_fc2_w = 0, meta_fc2_b = 0, missing_time = 0;
    bool has_meta_encoder = false, has_missing_time = false;
    std::vector<BlockIndex> blocks;
  };

  Mat meta_values(const ParamSnapshot& params, const MetaInputs& meta) const;

  BackboneConfig config_;
  Index idx_;
};

/// Analytic parameter count for a configuration.
std::size_t parameter_count(const BackboneConfig& config);

}  // namespace stssl::model
