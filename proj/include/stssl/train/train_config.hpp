// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/model/config.hpp"
#include "stssl/ssl/distill.hpp"
#include "stssl/ssl/losses.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace stssl::train {

/// st-ssl: metadata teacher plus metadata-free student trained jointly.
/// self-training: one student-side network bootstraps its own pseudo-labels
/// (plain FixMatch; with lambda_u = 0 it is supervised-only training).
enum class TrainMode { st_ssl, self_training };

std::string to_string(TrainMode m);
TrainMode train_mode_from_string(const std::string& text);

struct Ablations {
  bool no_geo = false;
  bool no_time = false;
  bool late_fusion = false;
  /// Only the teacher is trained, self-bootstrapping with metadata.
  bool single_model = false;
  bool no_distill = false;
  ssl::DistillCriterion distill_criterion = ssl::DistillCriterion::mse;
  /// Regress the student's class-token embedding onto the teacher's.
  bool distill_on_cls_token = false;
  /// Let the distillation gradient reach the teacher.
  bool no_stop_grad = false;

  bool operator==(const Ablations&) const = default;
};

struct TrainConfig {
  TrainMode mode = TrainMode::st_ssl;
  model::BackboneConfig teacher{.variant = model::Variant::teacher, .fusion = model::Fusion::early_metatoken, .meta = {}};
  model::BackboneConfig student{.variant = model::Variant::student, .fusion = model::Fusion::none, .meta = {}};
  std::string algorithm = "fixmatch";
  double tau = 0.95;
  ssl::LossWeights weights;
  int n_labeled = 64;
  int n_unlabeled = 448;
  std::int64_t total_steps = 1000;
  double base_lr = 1e-4;
  double weight_decay = 5e-4;
  double ema_decay = 0.999;
  std::uint64_t seed = 0;
  std::string augmentation = "fixmatch";
  std::int64_t log_interval = 50;
  /// 0 evaluates only after the last step.
  std::int64_t eval_interval = 0;
  /// 0 writes only the final and best checkpoints.
  std::int64_t checkpoint_interval = 0;
  int eval_batch_size = 128;
  Ablations ablations;

  /// Throws Error on an inconsistent configuration.
  void validate() const;

  bool trains_teacher() const { return mode == TrainMode::st_ssl; }
  bool trains_student() const { return mode == TrainMode::self_training || !ablations.single_model; }
  /// Distillation is computed at all (it may still carry a zero weight).
  bool computes_distillation() const {
    return trains_teacher() && trains_student() && !ablations.no_distill;
  }
  /// Teacher architecture after ablation switches are applied.
  model::BackboneConfig resolved_teacher() const;
  model::BackboneConfig resolved_student() const { return student; }
};

nlohmann::json to_json(const TrainConfig& c);
/// Accepts exactly the keys written by to_json; missing keys keep defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace stssl::train
