// SPDX-License-Identifier: Apache-2.0
#include "stssl/train/state_io.hpp"

#include "stssl/model/checkpoint.hpp"

namespace stssl::train {

namespace {

constexpr const char* kKind = "train_state";

void add_slot(model::Container& c, const std::string& role, const ModelSlot& slot) {
  model::add_snapshot(c, role + "/params/", slot.params);
  model::add_snapshot(c, role + "/adam_m/", slot.optimizer.m());
  model::add_snapshot(c, role + "/adam_v/", slot.optimizer.v());
  model::add_snapshot(c, role + "/ema/", slot.ema.shadow);
}

bool has_role(const model::Container& c, const std::string& role) {
  const std::string prefix = role + "/";
  for (const auto& n : c.names) {
    if (n.compare(0, prefix.size(), prefix) == 0) return true;
  }
  return false;
}

void load_slot(const model::Container& c, const std::string& role, const nlohmann::json& meta, ModelSlot& slot) {
  const auto layout = slot.net.layout();
  slot.params = model::take_snapshot(c, role + "/params/", layout);
  slot.optimizer.restore(model::take_snapshot(c, role + "/adam_m/", layout),
                         model::take_snapshot(c, role + "/adam_v/", layout),
                         meta.at(role).at("adam_t").get<std::int64_t>());
  slot.ema.shadow = model::take_snapshot(c, role + "/ema/", layout);
  slot.ema.step = meta.at(role).at("ema_step").get<std::int64_t>();
}

void compare_models(const char* role, const model::BackboneConfig& stored, const model::BackboneConfig& wanted) {
  if (stored == wanted) return;
  std::string what = "architecture";
  if (stored.num_classes != wanted.num_classes) {
    what = "num_classes " + std::to_string(stored.num_classes) + " vs " + std::to_string(wanted.num_classes);
  } else if (stored.task_mode != wanted.task_mode) {
    what = "task_mode";
  }
  throw Error(std::string("checkpoint config mismatch (") + role + " " + what + ")");
}

}  // namespace

void save_train_state(const std::filesystem::path& path, const TrainState& state, const TrainConfig& config,
                      const nlohmann::json& extra) {
  model::Container c;
  c.metadata = {{"kind", kKind}, {"step", state.step}, {"train_config", to_json(config)}, {"extra", extra}};
  for (const auto& [role, slot] : {std::pair{"teacher", &state.teacher}, std::pair{"student", &state.student}}) {
    if (!*slot) continue;
    const ModelSlot& s = **slot;
    c.metadata[role] = {{"config", model::to_json(s.net.config())},
                        {"adam_t", s.optimizer.t()},
                        {"ema_step", s.ema.step},
                        {"ema_decay", s.ema.decay}};
    add_slot(c, role, s);
  }
  model::write_container(path, c);
}

TrainConfig stored_train_config(const std::filesystem::path& path) {
  const auto c = model::read_container(path);
  if (c.metadata.value("kind", "") != kKind) throw Error(path.string() + ": not a training-state checkpoint");
  return train_config_from_json(c.metadata.at("train_config"));
}

TrainState load_train_state(const std::filesystem::path& path, const TrainConfig& config) {
  const auto c = model::read_container(path);
  const auto& meta = c.metadata;
  if (meta.value("kind", "") != kKind) throw Error(path.string() + ": not a training-state checkpoint");
  TrainState state = init_state(config);
  state.step = meta.at("step").get<std::int64_t>();
  for (const auto& [role, slot] : {std::pair{"teacher", &state.teacher}, std::pair{"student", &state.student}}) {
    const bool stored = meta.contains(role) && has_role(c, role);
    if (!*slot) continue;
    if (!stored) {
      throw Error(path.string() + ": checkpoint has no " + role + " tensors (" +
                  (std::string(role) == "student" ? "saved by a single-model run" : "saved without a teacher") + ")");
    }
    compare_models(role, model::backbone_from_json(meta.at(role).at("config")), (*slot)->net.config());
    load_slot(c, role, meta, **slot);
  }
  if (state.step > config.total_steps) throw Error(path.string() + ": checkpoint step exceeds total_steps");
  return state;
}

}  // namespace stssl::train
