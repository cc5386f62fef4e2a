// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/train/trainer.hpp"

#include <filesystem>

namespace stssl::train {

/// Full training state: parameters, AdamW moments and EMA shadows of every
/// trained model, plus step and configuration. Batches and augmentations are
/// pure functions of (seed, step), so these fields determine the rest of
/// the run.
void save_train_state(const std::filesystem::path& path, const TrainState& state, const TrainConfig& config,
                      const nlohmann::json& extra = nlohmann::json::object());

/// Throws Error when the stored configuration differs from config in a way
/// that changes tensor shapes or roles, or when required tensors are absent.
TrainState load_train_state(const std::filesystem::path& path, const TrainConfig& config);

/// Configuration stored in a train-state checkpoint.
TrainConfig stored_train_config(const std::filesystem::path& path);

}  // namespace stssl::train
