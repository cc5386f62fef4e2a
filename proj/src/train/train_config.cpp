// SPDX-License-Identifier: Apache-2.0
#include "stssl/train/train_config.hpp"

#include "stssl/common/json_util.hpp"
#include "stssl/ssl/algorithm.hpp"

namespace stssl::train {

std::string to_string(TrainMode m) { return m == TrainMode::st_ssl ? "st-ssl" : "self-training"; }

TrainMode train_mode_from_string(const std::string& text) {
  if (text == "st-ssl") return TrainMode::st_ssl;
  if (text == "self-training") return TrainMode::self_training;
  throw Error("unknown training mode '" + text + "' (expected st-ssl or self-training)");
}

model::BackboneConfig TrainConfig::resolved_teacher() const {
  model::BackboneConfig t = teacher;
  if (ablations.no_geo) t.meta.use_geo = false;
  if (ablations.no_time) t.meta.use_time = false;
  if (ablations.late_fusion) t.fusion = model::Fusion::late_fusion;
  return t;
}

void TrainConfig::validate() const {
  if (total_steps < 1) throw Error("train: total_steps must be at least 1");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw Error("train: ema_decay must lie in [0, 1)");
  if (n_labeled < 1) throw Error("train: n_labeled must be at least 1");
  if (n_unlabeled < 0) throw Error("train: n_unlabeled must be non-negative");
  if (!(base_lr >= 0.0) || !(weight_decay >= 0.0)) throw Error("train: lr and weight decay must be non-negative");
  if (log_interval < 1) throw Error("train: log_interval must be at least 1");
  if (eval_interval < 0 || checkpoint_interval < 0) throw Error("train: intervals must be non-negative");
  if (eval_batch_size < 1) throw Error("train: eval_batch_size must be positive");
  if (augmentation != "fixmatch" && augmentation != "none") {
    throw Error("train: augmentation must be fixmatch or none");
  }
  weights.validate();
  ssl::make_algorithm(algorithm, tau);
  if (mode == TrainMode::self_training && ablations.single_model) {
    throw Error("train: single_model applies to st-ssl mode");
  }
  if (trains_teacher()) {
    const auto t = resolved_teacher();
    t.validate();
    if (t.variant != model::Variant::teacher) throw Error("train: teacher model must use the teacher variant");
  }
  if (trains_student()) {
    student.validate();
    if (mode == TrainMode::st_ssl && student.variant != model::Variant::student) {
      throw Error("train: st-ssl student must use the student variant");
    }
  }
  if (trains_teacher() && trains_student()) {
    const auto t = resolved_teacher();
    if (t.num_classes != student.num_classes || t.task_mode != student.task_mode ||
        t.image_size != student.image_size || t.channels != student.channels) {
      throw Error("train: teacher and student disagree on classes, task or image shape");
    }
    if (computes_distillation() && t.embed_dim != student.embed_dim) {
      throw Error("train: distillation needs equal teacher and student embed_dim");
    }
  }
}

nlohmann::json to_json(const TrainConfig& c) {
  const auto& a = c.ablations;
  return {{"mode", to_string(c.mode)},
          {"teacher", model::to_json(c.teacher)},
          {"student", model::to_json(c.student)},
          {"algorithm", c.algorithm},
          {"tau", c.tau},
          {"lambda_u", c.weights.lambda_u},
          {"lambda_d", c.weights.lambda_d},
          {"n_labeled", c.n_labeled},
          {"n_unlabeled", c.n_unlabeled},
          {"total_steps", c.total_steps},
          {"base_lr", c.base_lr},
          {"weight_decay", c.weight_decay},
          {"ema_decay", c.ema_decay},
          {"seed", c.seed},
          {"augmentation", c.augmentation},
          {"log_interval", c.log_interval},
          {"eval_interval", c.eval_interval},
          {"checkpoint_interval", c.checkpoint_interval},
          {"eval_batch_size", c.eval_batch_size},
          {"ablations",
           {{"no_geo", a.no_geo},
            {"no_time", a.no_time},
            {"late_fusion", a.late_fusion},
            {"single_model", a.single_model},
            {"no_distill", a.no_distill},
            {"distill_criterion", ssl::to_string(a.distill_criterion)},
            {"distill_on_cls_token", a.distill_on_cls_token},
            {"no_stop_grad", a.no_stop_grad}}}};
}

TrainConfig train_config_from_json(const nlohmann::json& patch) {
  const nlohmann::json j = overlay(to_json(TrainConfig{}), patch, "");
  TrainConfig c;
  c.mode = train_mode_from_string(j.at("mode").get<std::string>());
  c.teacher = model::backbone_from_json(j.at("teacher"));
  c.student = model::backbone_from_json(j.at("student"));
  c.algorithm = j.at("algorithm").get<std::string>();
  c.tau = j.at("tau").get<double>();
  c.weights.lambda_u = j.at("lambda_u").get<double>();
  c.weights.lambda_d = j.at("lambda_d").get<double>();
  c.n_labeled = j.at("n_labeled").get<int>();
  c.n_unlabeled = j.at("n_unlabeled").get<int>();
  c.total_steps = j.at("total_steps").get<std::int64_t>();
  c.base_lr = j.at("base_lr").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.ema_decay = j.at("ema_decay").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.augmentation = j.at("augmentation").get<std::string>();
  c.log_interval = j.at("log_interval").get<std::int64_t>();
  c.eval_interval = j.at("eval_interval").get<std::int64_t>();
  c.checkpoint_interval = j.at("checkpoint_interval").get<std::int64_t>();
  c.eval_batch_size = j.at("eval_batch_size").get<int>();
  const auto& a = j.at("ablations");
  c.ablations.no_geo = a.at("no_geo").get<bool>();
  c.ablations.no_time = a.at("no_time").get<bool>();
  c.ablations.late_fusion = a.at("late_fusion").get<bool>();
  c.ablations.single_model = a.at("single_model").get<bool>();
  c.ablations.no_distill = a.at("no_distill").get<bool>();
  c.ablations.distill_criterion = ssl::distill_criterion_from_string(a.at("distill_criterion").get<std::string>());
  c.ablations.distill_on_cls_token = a.at("distill_on_cls_token").get<bool>();
  c.ablations.no_stop_grad = a.at("no_stop_grad").get<bool>();
  return c;
}

}  // namespace stssl::train
