// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace stssl::train {

/// base_lr * 0.5 * (1 + cos(pi * step / total_steps)).
double lr_at(std::int64_t step, std::int64_t total_steps, double base_lr);

}  // namespace stssl::train
