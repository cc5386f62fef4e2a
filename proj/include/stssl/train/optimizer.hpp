// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/model/params.hpp"

#include <cstdint>
#include <vector>

namespace stssl::train {

/// Adam with decoupled weight decay. Decay applies to weight matrices only;
/// biases, norm gains, tokens and position embeddings are exempt.
class AdamW {
 public:
  struct Options {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 5e-4;
  };

  AdamW(const model::ParamSnapshot& params, Options options);

  void step(model::ParamSnapshot& params, const model::ParamSnapshot& grads, double lr);

  const Options& options() const { return options_; }
  std::int64_t t() const { return t_; }
  const model::ParamSnapshot& m() const { return m_; }
  const model::ParamSnapshot& v() const { return v_; }
  /// Restores moments and step count (from a checkpoint).
  void restore(model::ParamSnapshot m, model::ParamSnapshot v, std::int64_t t);

  static bool decays(const std::string& name);

 private:
  Options options_;
  model::ParamSnapshot m_;
  model::ParamSnapshot v_;
  std::vector<char> decay_;
  std::int64_t t_ = 0;
};

}  // namespace stssl::train
