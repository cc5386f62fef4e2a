// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/model/params.hpp"

#include <cstdint>

namespace stssl::train {

struct EmaState {
  model::ParamSnapshot shadow;
  double decay = 0.999;
  std::int64_t step = 0;
};

EmaState make_ema(const model::ParamSnapshot& live, double decay);

/// shadow <- decay * shadow + (1 - decay) * live, per tensor. Throws Error on
/// a layout mismatch.
void ema_update(EmaState& ema, const model::ParamSnapshot& live);

}  // namespace stssl::train
