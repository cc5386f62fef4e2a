// SPDX-License-Identifier: Apache-2.0
#include "stssl/train/ema.hpp"

namespace stssl::train {

EmaState make_ema(const model::ParamSnapshot& live, double decay) {
  if (!(decay >= 0.0 && decay <= 1.0)) throw Error("EMA decay must lie in [0, 1]");
  return EmaState{live, decay, 0};
}

void ema_update(EmaState& ema, const model::ParamSnapshot& live) {
  if (!ema.shadow.same_layout(live)) throw Error("EMA shadow does not match the live model");
  for (std::size_t i = 0; i < live.size(); ++i) {
    ema.shadow[i] = ema.decay * ema.shadow[i] + (1.0 - ema.decay) * live[i];
  }
  ++ema.step;
}

}  // namespace stssl::train
