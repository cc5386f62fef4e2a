// SPDX-License-Identifier: Apache-2.0
#include "stssl/train/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stssl::train {

double lr_at(std::int64_t step, std::int64_t total_steps, double base_lr) {
  const std::int64_t s = std::clamp<std::int64_t>(step, 0, total_steps);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(s) / static_cast<double>(total_steps)));
}

}  // namespace stssl::train
