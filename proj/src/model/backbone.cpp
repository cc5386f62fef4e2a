// SPDX-License-Identifier: Apache-2.0
#include "stssl/model/backbone.hpp"

#include "stssl/common/hash.hpp"
#include "stssl/common/rng.hpp"

#include <cmath>

namespace stssl::model {

namespace {

constexpr Real kInitStd = 0.02;

Mat truncated_normal(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    Real z = rng.normal();
    while (std::abs(z) > 2.0) z = rng.normal();
    m.data()[i] = kInitStd * z;
  }
  return m;
}

bool is_gain(const std::string& name) {
  return name.size() > 7 && name.compare(name.size() - 7, 7, ".weight") == 0 &&
         (name.find("norm") != std::string::npos);
}

bool is_bias(const std::string& name) {
  return name.size() > 5 && name.compare(name.size() - 5, 5, ".bias") == 0;
}

}  // namespace

Backbone::Backbone(BackboneConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto names = layout();
  auto at = [&](const std::string& n) -> std::size_t {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i].first == n) return i;
    }
    throw Error("backbone: missing parameter " + n);
  };
  auto has = [&](const std::string& n) {
    for (const auto& e : names) {
      if (e.first == n) return true;
    }
    return false;
  };
  idx_.patch_w = at("patch_embed.weight");
  idx_.patch_b = at("patch_embed.bias");
  idx_.cls = at("cls_token");
  if (has("dist_token")) idx_.special = at("dist_token");
  idx_.pos = at("pos_embed");
  idx_.has_meta_encoder = has("meta_encoder.fc1.weight");
  if (idx_.has_meta_encoder) {
    idx_.meta_fc1_w = at("meta_encoder.fc1.weight");
    idx_.meta_fc1_b = at("meta_encoder.fc1.bias");
    idx_.meta_fc2_w = at("meta_encoder.fc2.weight");
    idx_.meta_fc2_b = at("meta_encoder.fc2.bias");
  }
  idx_.has_missing_time = has("meta_encoder.missing_time");
  if (idx_.has_missing_time) idx_.missing_time = at("meta_encoder.missing_time");
  for (int l = 0; l < config_.depth; ++l) {
    const std::string p = "blocks." + std::to_string(l) + ".";
    idx_.blocks.push_back({at(p + "norm1.weight"), at(p + "norm1.bias"), at(p + "attn.qkv.weight"),
                           at(p + "attn.qkv.bias"), at(p + "attn.proj.weight"), at(p + "attn.proj.bias"),
                           at(p + "norm2.weight"), at(p + "norm2.bias"), at(p + "mlp.fc1.weight"),
                           at(p + "mlp.fc1.bias"), at(p + "mlp.fc2.weight"), at(p + "mlp.fc2.bias")});
  }
  idx_.norm_w = at("norm.weight");
  idx_.norm_b = at("norm.bias");
  idx_.head_w = at("head.weight");
  idx_.head_b = at("head.bias");
}

std::vector<std::pair<std::string, std::pair<int, int>>> Backbone::layout() const {
  const auto& c = config_;
  const int d = c.embed_dim;
  std::vector<std::pair<std::string, std::pair<int, int>>> out;
  out.push_back({"patch_embed.weight", {c.patch_dim(), d}});
  out.push_back({"patch_embed.bias", {1, d}});
  out.push_back({"cls_token", {1, d}});
  if (c.variant == Variant::student) out.push_back({"dist_token", {1, d}});
  out.push_back({"pos_embed", {c.seq_len(), d}});
  if (c.uses_metadata()) {
    out.push_back({"meta_encoder.fc1.weight", {c.meta.input_width(), d}});
    out.push_back({"meta_encoder.fc1.bias", {1, d}});
    out.push_back({"meta_encoder.fc2.weight", {d, d}});
    out.push_back({"meta_encoder.fc2.bias", {1, d}});
    if (c.meta.learn_missing_time && c.meta.use_time && !c.meta.cyclic_day) {
      out.push_back({"meta_encoder.missing_time", {1, 1}});
    }
  }
  const int h = c.mlp_hidden();
  for (int l = 0; l < c.depth; ++l) {
    const std::string p = "blocks." + std::to_string(l) + ".";
    out.push_back({p + "norm1.weight", {1, d}});
    out.push_back({p + "norm1.bias", {1, d}});
    out.push_back({p + "attn.qkv.weight", {d, 3 * d}});
    out.push_back({p + "attn.qkv.bias", {1, 3 * d}});
    out.push_back({p + "attn.proj.weight", {d, d}});
    out.push_back({p + "attn.proj.bias", {1, d}});
    out.push_back({p + "norm2.weight", {1, d}});
    out.push_back({p + "norm2.bias", {1, d}});
    out.push_back({p + "mlp.fc1.weight", {d, h}});
    out.push_back({p + "mlp.fc1.bias", {1, h}});
    out.push_back({p + "mlp.fc2.weight", {h, d}});
    out.push_back({p + "mlp.fc2.bias", {1, d}});
  }
  out.push_back({"norm.weight", {1, d}});
  out.push_back({"norm.bias", {1, d}});
  out.push_back({"head.weight", {d, c.num_classes}});
  out.push_back({"head.bias", {1, c.num_classes}});
  return out;
}

ParamSnapshot Backbone::init_params(std::uint64_t seed) const {
  ParamSnapshot p;
  for (const auto& [name, shape] : layout()) {
    const auto [rows, cols] = shape;
    if (name == "meta_encoder.missing_time") {
      p.add(name, Mat::Constant(1, 1, config_.meta.missing_time_fill));
    } else if (is_gain(name)) {
      p.add(name, Mat::Ones(rows, cols));
    } else if (is_bias(name)) {
      p.add(name, Mat::Zero(rows, cols));
    } else {
      p.add(name, truncated_normal(rows, cols, derive_seed(seed, name)));
    }
  }
  return p;
}

Mat Backbone::meta_values(const ParamSnapshot& params, const MetaInputs& meta) const {
  if (!idx_.has_missing_time) return meta.values;
  Mat v = meta.values;
  const Real learned = params[idx_.missing_time](0, 0);
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    if (meta.time_missing[static_cast<std::size_t>(r)]) v(r, 2) = learned;
  }
  return v;
}

ModelOutputs Backbone::forward(const ParamSnapshot& params, const Mat& images,
                               const std::vector<dataset::GeoTemporal>* meta, ForwardCache* cache) const {
  if (!config_.uses_metadata()) return forward(params, images, static_cast<const MetaInputs*>(nullptr), cache);
  if (!meta) throw Error("backbone: teacher forward requires metadata");
  const MetaInputs in = meta_inputs(*meta, config_.meta);
  return forward(params, images, &in, cache);
}

ModelOutputs Backbone::forward(const ParamSnapshot& params, const Mat& images, const MetaInputs* meta,
                               ForwardCache* cache) const {
  const auto& c = config_;
  const int batch = static_cast<int>(images.rows());
  const int d = c.embed_dim, t_len = c.seq_len(), n_patch = c.num_patches(), prefix = c.num_prefix_tokens();
  const int g = c.grid(), ps = c.patch_size, ch = c.channels, heads = c.num_heads, hd = c.head_dim();
  if (images.cols() != c.image_width()) throw Error("backbone: image width mismatch");
  if (c.uses_metadata()) {
    if (!meta) throw Error("backbone: teacher forward requires metadata");
    if (meta->values.rows() != batch || meta->values.cols() != c.meta.input_width()) {
      throw Error("backbone: metadata shape mismatch");
    }
  }

  Mat patches(static_cast<Eigen::Index>(batch) * n_patch, c.patch_dim());
  for (int b = 0; b < batch; ++b) {
    for (int gy = 0; gy < g; ++gy) {
      for (int gx = 0; gx < g; ++gx) {
        const Eigen::Index row = static_cast<Eigen::Index>(b) * n_patch + gy * g + gx;
        int k = 0;
        for (int py = 0; py < ps; ++py) {
          const int y = gy * ps + py;
          for (int px = 0; px < ps; ++px) {
            const int x = gx * ps + px;
            for (int cc = 0; cc < ch; ++cc) patches(row, k++) = images(b, (y * c.image_size + x) * ch + cc);
          }
        }
      }
    }
  }
  const Mat tokens = linear(patches, params[idx_.patch_w], params[idx_.patch_b]);

  Mat encoded;
  MetaEncoderCache enc_cache;
  MetaInputs meta_copy;
  if (c.uses_metadata()) {
    const MetaEncoderWeights w{params[idx_.meta_fc1_w], params[idx_.meta_fc1_b], params[idx_.meta_fc2_w],
                               params[idx_.meta_fc2_b]};
    encoded = encode_metadata(meta_values(params, *meta), w, cache ? &enc_cache : nullptr);
    if (cache) meta_copy = *meta;
  }

  const Mat& pos = params[idx_.pos];
  Mat x(static_cast<Eigen::Index>(batch) * t_len, d);
  for (int b = 0; b < batch; ++b) {
    const Eigen::Index base = static_cast<Eigen::Index>(b) * t_len;
    x.row(base) = params[idx_.cls].row(0) + pos.row(0);
    if (prefix == 2) {
      if (c.variant == Variant::student) {
        x.row(base + 1) = params[idx_.special].row(0) + pos.row(1);
      } else {
        x.row(base + 1) = encoded.row(b) + pos.row(1);
      }
    }
    x.block(base + prefix, 0, n_patch, d) =
        tokens.block(static_cast<Eigen::Index>(b) * n_patch, 0, n_patch, d) + pos.bottomRows(n_patch);
  }

  if (cache) {
    cache->batch = batch;
    cache->patches = patches;
    cache->meta = std::move(meta_copy);
    cache->meta_encoder = std::move(enc_cache);
    cache->blocks.assign(static_cast<std::size_t>(c.depth), BlockCache{});
  }

  const Real scale = 1.0 / std::sqrt(static_cast<Real>(hd));
  for (int l = 0; l < c.depth; ++l) {
    const BlockIndex& bi = idx_.blocks[static_cast<std::size_t>(l)];
    LayerNormCache ln1;
    Mat h1 = layer_norm(x, params[bi.norm1_w], params[bi.norm1_b], &ln1);
    Mat qkv = linear(h1, params[bi.qkv_w], params[bi.qkv_b]);
    Mat attention(static_cast<Eigen::Index>(batch) * heads * t_len, t_len);
    Mat context(static_cast<Eigen::Index>(batch) * t_len, d);
    for (int b = 0; b < batch; ++b) {
      const Eigen::Index base = static_cast<Eigen::Index>(b) * t_len;
      for (int h = 0; h < heads; ++h) {
        const auto q = qkv.block(base, h * hd, t_len, hd);
        const auto k = qkv.block(base, d + h * hd, t_len, hd);
        const auto v = qkv.block(base, 2 * d + h * hd, t_len, hd);
        Mat scores = (q * k.transpose()) * scale;
        Mat a = softmax_rows(scores);
        context.block(base, h * hd, t_len, hd).noalias() = a * v;
        attention.block((static_cast<Eigen::Index>(b) * heads + h) * t_len, 0, t_len, t_len) = a;
      }
    }
    Mat x_mid = x + linear(context, params[bi.proj_w], params[bi.proj_b]);
    LayerNormCache ln2;
    Mat h2 = layer_norm(x_mid, params[bi.norm2_w], params[bi.norm2_b], &ln2);
    Mat pre = linear(h2, params[bi.fc1_w], params[bi.fc1_b]);
    Mat act = gelu(pre);
    Mat x_out = x_mid + linear(act, params[bi.fc2_w], params[bi.fc2_b]);
    if (cache) {
      BlockCache& bc = cache->blocks[static_cast<std::size_t>(l)];
      bc.x_in = std::move(x);
      bc.ln1 = std::move(ln1);
      bc.h1 = std::move(h1);
      bc.qkv = std::move(qkv);
      bc.attention = std::move(attention);
      bc.context = std::move(context);
      bc.x_mid = std::move(x_mid);
      bc.ln2 = std::move(ln2);
      bc.h2 = std::move(h2);
      bc.pre_activation = std::move(pre);
      bc.activation = std::move(act);
    }
    x = std::move(x_out);
  }

  LayerNormCache final_ln;
  const Mat y = layer_norm(x, params[idx_.norm_w], params[idx_.norm_b], cache ? &final_ln : nullptr);

  ModelOutputs out;
  out.cls_embedding.resize(batch, d);
  if (prefix == 2) out.special_embedding.resize(batch, d);
  for (int b = 0; b < batch; ++b) {
    const Eigen::Index base = static_cast<Eigen::Index>(b) * t_len;
    out.cls_embedding.row(b) = y.row(base);
    if (prefix == 2) out.special_embedding.row(b) = y.row(base + 1);
  }
  Mat head_input = out.cls_embedding;
  if (c.fusion == Fusion::late_fusion) head_input += encoded;
  out.logits = linear(head_input, params[idx_.head_w], params[idx_.head_b]);
  if (cache) {
    cache->final_norm = std::move(final_ln);
    cache->head_input = std::move(head_input);
  }
  return out;
}

void Backbone::backward(const ParamSnapshot& params, const ForwardCache& cache, const OutputGrads& upstream,
                        ParamSnapshot& grads, Mat* meta_input_grad) const {
  const auto& c = config_;
  const int batch = cache.batch;
  const int d = c.embed_dim, t_len = c.seq_len(), n_patch = c.num_patches(), prefix = c.num_prefix_tokens();
  const int heads = c.num_heads, hd = c.head_dim();
  if (cache.blocks.size() != static_cast<std::size_t>(c.depth)) throw Error("backbone: backward without cache");

  Mat d_cls = Mat::Zero(batch, d);
  Mat d_encoded;
  if (c.uses_metadata()) d_encoded = Mat::Zero(batch, d);
  if (upstream.logits) {
    Mat d_head_input;
    linear_backward(cache.head_input, params[idx_.head_w], *upstream.logits, grads[idx_.head_w],
                    grads[idx_.head_b], &d_head_input);
    d_cls += d_head_input;
    if (c.fusion == Fusion::late_fusion) d_encoded += d_head_input;
  }
  if (upstream.cls_embedding) d_cls += *upstream.cls_embedding;

  Mat dy = Mat::Zero(static_cast<Eigen::Index>(batch) * t_len, d);
  for (int b = 0; b < batch; ++b) {
    const Eigen::Index base = static_cast<Eigen::Index>(b) * t_len;
    dy.row(base) = d_cls.row(b);
    if (upstream.special_embedding && prefix == 2) dy.row(base + 1) = upstream.special_embedding->row(b);
  }
  Mat dx = layer_norm_backward(cache.final_norm, params[idx_.norm_w], dy, grads[idx_.norm_w], grads[idx_.norm_b]);

  const Real scale = 1.0 / std::sqrt(static_cast<Real>(hd));
  for (int l = c.depth - 1; l >= 0; --l) {
    const BlockIndex& bi = idx_.blocks[static_cast<std::size_t>(l)];
    const BlockCache& bc = cache.blocks[static_cast<std::size_t>(l)];

    Mat d_act;
    linear_backward(bc.activation, params[bi.fc2_w], dx, grads[bi.fc2_w], grads[bi.fc2_b], &d_act);
    const Mat d_pre = d_act.cwiseProduct(bc.pre_activation.unaryExpr([](Real v) { return gelu_grad(v); }));
    Mat d_h2;
    linear_backward(bc.h2, params[bi.fc1_w], d_pre, grads[bi.fc1_w], grads[bi.fc1_b], &d_h2);
    Mat d_mid = dx + layer_norm_backward(bc.ln2, params[bi.norm2_w], d_h2, grads[bi.norm2_w], grads[bi.norm2_b]);

    Mat d_ctx;
    linear_backward(bc.context, params[bi.proj_w], d_mid, grads[bi.proj_w], grads[bi.proj_b], &d_ctx);
    Mat d_qkv(bc.qkv.rows(), bc.qkv.cols());
    for (int b = 0; b < batch; ++b) {
      const Eigen::Index base = static_cast<Eigen::Index>(b) * t_len;
      for (int h = 0; h < heads; ++h) {
        const auto q = bc.qkv.block(base, h * hd, t_len, hd);
        const auto k = bc.qkv.block(base, d + h * hd, t_len, hd);
        const auto v = bc.qkv.block(base, 2 * d + h * hd, t_len, hd);
        const auto a = bc.attention.block((static_cast<Eigen::Index>(b) * heads + h) * t_len, 0, t_len, t_len);
        const auto dc = d_ctx.block(base, h * hd, t_len, hd);
        const Mat da = dc * v.transpose();
        d_qkv.block(base, 2 * d + h * hd, t_len, hd).noalias() = a.transpose() * dc;
        Mat ds = a.cwiseProduct(da);
        const ColVec row_dot = ds.rowwise().sum();
        ds -= (a.array().colwise() * row_dot.array()).matrix();
        ds *= scale;
        d_qkv.block(base, h * hd, t_len, hd).noalias() = ds * k;
        d_qkv.block(base, d + h * hd, t_len, hd).noalias() = ds.transpose() * q;
      }
    }
    Mat d_h1;
    linear_backward(bc.h1, params[bi.qkv_w], d_qkv, grads[bi.qkv_w], grads[bi.qkv_b], &d_h1);
    dx = d_mid + layer_norm_backward(bc.ln1, params[bi.norm1_w], d_h1, grads[bi.norm1_w], grads[bi.norm1_b]);
  }

  Mat& g_pos = grads[idx_.pos];
  Mat d_tokens(static_cast<Eigen::Index>(batch) * n_patch, d);
  for (int b = 0; b < batch; ++b) {
    const Eigen::Index base = static_cast<Eigen::Index>(b) * t_len;
    g_pos += dx.block(base, 0, t_len, d);
    grads[idx_.cls].row(0) += dx.row(base);
    if (prefix == 2) {
      if (c.variant == Variant::student) {
        grads[idx_.special].row(0) += dx.row(base + 1);
      } else {
        d_encoded.row(b) += dx.row(base + 1);
      }
    }
    d_tokens.block(static_cast<Eigen::Index>(b) * n_patch, 0, n_patch, d) = dx.block(base + prefix, 0, n_patch, d);
  }
  linear_backward(cache.patches, params[idx_.patch_w], d_tokens, grads[idx_.patch_w], grads[idx_.patch_b], nullptr);

  if (c.uses_metadata()) {
    const MetaEncoderWeights w{params[idx_.meta_fc1_w], params[idx_.meta_fc1_b], params[idx_.meta_fc2_w],
                               params[idx_.meta_fc2_b]};
    MetaEncoderGrads g{grads[idx_.meta_fc1_w], grads[idx_.meta_fc1_b], grads[idx_.meta_fc2_w],
                       grads[idx_.meta_fc2_b]};
    Mat d_in = encode_metadata_backward(cache.meta_encoder, w, d_encoded, g);
    if (idx_.has_missing_time) {
      for (Eigen::Index r = 0; r < d_in.rows(); ++r) {
        if (cache.meta.time_missing[static_cast<std::size_t>(r)]) grads[idx_.missing_time](0, 0) += d_in(r, 2);
      }
    }
    if (meta_input_grad) *meta_input_grad = std::move(d_in);
  } else if (meta_input_grad) {
    meta_input_grad->resize(0, 0);
  }
}

std::size_t parameter_count(const BackboneConfig& c) {
  const std::size_t d = static_cast<std::size_t>(c.embed_dim);
  const std::size_t h = static_cast<std::size_t>(c.mlp_hidden());
  const std::size_t k = static_cast<std::size_t>(c.num_classes);
  std::size_t n = static_cast<std::size_t>(c.patch_dim()) * d + d;
  n += d * (1 + (c.variant == Variant::student ? 1 : 0));
  n += static_cast<std::size_t>(c.seq_len()) * d;
  if (c.uses_metadata()) {
    n += static_cast<std::size_t>(c.meta.input_width()) * d + d + d * d + d;
    if (c.meta.learn_missing_time && c.meta.use_time && !c.meta.cyclic_day) n += 1;
  }
  const std::size_t block = 4 * d + (d * 3 * d + 3 * d) + (d * d + d) + (d * h + h) + (h * d + d);
  n += static_cast<std::size_t>(c.depth) * block;
  n += 2 * d + d * k + k;
  return n;
}

}  // namespace stssl::model
