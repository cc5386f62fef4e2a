// SPDX-License-Identifier: Apache-2.0
#include "stssl/train/optimizer.hpp"

#include <cmath>

namespace stssl::train {

bool AdamW::decays(const std::string& name) {
  const bool weight = name.size() > 7 && name.compare(name.size() - 7, 7, ".weight") == 0;
  return weight && name.find("norm") == std::string::npos;
}

AdamW::AdamW(const model::ParamSnapshot& params, Options options)
    : options_(options), m_(params.zeros_like()), v_(params.zeros_like()) {
  for (std::size_t i = 0; i < params.size(); ++i) decay_.push_back(decays(params.name(i)));
}

void AdamW::restore(model::ParamSnapshot m, model::ParamSnapshot v, std::int64_t t) {
  if (!m.same_layout(m_) || !v.same_layout(v_)) throw Error("optimizer state does not match the model");
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

void AdamW::step(model::ParamSnapshot& params, const model::ParamSnapshot& grads, double lr) {
  if (!params.same_layout(m_) || !grads.same_layout(m_)) throw Error("optimizer: layout mismatch");
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].array();
    const auto g = grads[i].array();
    auto m = m_[i].array();
    auto v = v_[i].array();
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.square();
    if (decay_[i]) p *= 1.0 - lr * options_.weight_decay;
    p -= lr * ((m / c1) / ((v / c2).sqrt() + options_.eps));
  }
}

}  // namespace stssl::train
