// SPDX-License-Identifier: Apache-2.0
#include "stssl/cli/experiment_config.hpp"

#include "stssl/cli/presets.hpp"
#include "stssl/common/hash.hpp"
#include "stssl/common/json_util.hpp"

#include <fstream>

namespace stssl::cli {

namespace {

const char* const kSslKeys[] = {"algorithm", "tau", "lambda_u", "lambda_d"};

nlohmann::json probe_json(const EvalSection& e) {
  return {{"lat_steps", e.probe.lat_steps},
          {"lon_steps", e.probe.lon_steps},
          {"day_steps", e.probe.day_steps},
          {"margin", e.probe.margin},
          {"spatial_day", e.probe.spatial_day ? nlohmann::json(*e.probe.spatial_day) : nlohmann::json(nullptr)},
          {"value", e.probe_value}};
}

void check_model_matches_data(const char* role, const model::BackboneConfig& m, TaskMode mode, int classes,
                              int image_size) {
  if (m.num_classes != classes || m.task_mode != mode || m.image_size != image_size || m.channels != 3) {
    throw Error(std::string("config: model.") + role + " must match the dataset (" + std::to_string(classes) +
                " classes, " + to_string(mode) + ", " + std::to_string(image_size) + "px RGB)");
  }
}

}  // namespace

std::vector<eval::MetaOverride> default_ood_overrides() {
  std::vector<eval::MetaOverride> v;
  for (auto [lat, lon] : {std::pair{70.0, 150.0}, {-70.0, -150.0}, {62.0, -160.0}, {-66.0, 140.0}, {78.0, 10.0}}) {
    eval::MetaOverride o;
    o.latitude = lat;
    o.longitude = lon;
    v.push_back(o);
  }
  return v;
}

train::TrainConfig default_train_config() {
  train::TrainConfig t;
  model::BackboneConfig base;
  base.image_size = 16;
  base.patch_size = 4;
  base.embed_dim = 32;
  base.depth = 2;
  base.num_heads = 2;
  base.mlp_ratio = 2.0;
  base.num_classes = 10;
  t.teacher = base;
  t.teacher.variant = model::Variant::teacher;
  t.teacher.fusion = model::Fusion::early_metatoken;
  t.student = base;
  t.student.variant = model::Variant::student;
  t.n_labeled = 16;
  t.n_unlabeled = 48;
  t.total_steps = 2000;
  t.base_lr = 1e-3;
  t.ema_decay = 0.99;
  t.tau = 0.9;
  t.weights.lambda_d = 0.1;
  t.log_interval = 50;
  return t;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json train = train::to_json(c.train);
  nlohmann::json ssl = nlohmann::json::object();
  for (const char* k : kSslKeys) {
    ssl[k] = train.at(k);
    train.erase(k);
  }
  nlohmann::json model{{"teacher", train.at("teacher")}, {"student", train.at("student")}};
  train.erase("teacher");
  train.erase("student");
  train.erase("eval_batch_size");
  nlohmann::json overrides = nlohmann::json::array();
  for (const auto& o : c.eval.ood_overrides) overrides.push_back(eval::to_json(o));
  const auto& d = c.dataset;
  return {{"name", c.name},
          {"dataset",
           {{"source", d.source},
            {"synthetic", dataset::to_json(d.synthetic)},
            {"train_manifest", d.train_manifest},
            {"test_manifest", d.test_manifest},
            {"split",
             {{"strategy", dataset::to_string(d.split.strategy)},
              {"labeled_fraction", d.split.labeled_fraction},
              {"labels_per_class", d.split.labels_per_class},
              {"seed", d.split.seed}}}}},
          {"model", model},
          {"ssl", ssl},
          {"train", train},
          {"eval", {{"batch_size", c.eval.batch_size}, {"ood_overrides", overrides}, {"probe", probe_json(c.eval)}}}};
}

ExperimentConfig experiment_from_json(const nlohmann::json& patch) {
  if (!patch.is_object()) throw Error("config: top level must be a JSON object");
  const nlohmann::json j = overlay(to_json(ExperimentConfig{}), patch, "");
  ExperimentConfig c;
  c.name = j.at("name").get<std::string>();

  const auto& d = j.at("dataset");
  c.dataset.source = d.at("source").get<std::string>();
  c.dataset.synthetic = dataset::synthetic_config_from_json(d.at("synthetic"));
  c.dataset.train_manifest = d.at("train_manifest").get<std::string>();
  c.dataset.test_manifest = d.at("test_manifest").get<std::string>();
  const auto& s = d.at("split");
  c.dataset.split.strategy = dataset::split_strategy_from_string(s.at("strategy").get<std::string>());
  c.dataset.split.labeled_fraction = s.at("labeled_fraction").get<double>();
  c.dataset.split.labels_per_class = s.at("labels_per_class").get<int>();
  c.dataset.split.seed = s.at("seed").get<std::uint64_t>();

  nlohmann::json train = j.at("train");
  for (const char* k : kSslKeys) train[k] = j.at("ssl").at(k);
  train["teacher"] = j.at("model").at("teacher");
  train["student"] = j.at("model").at("student");
  const auto& e = j.at("eval");
  train["eval_batch_size"] = e.at("batch_size");
  c.train = train::train_config_from_json(train);

  c.eval.batch_size = e.at("batch_size").get<int>();
  c.eval.ood_overrides.clear();
  for (const auto& o : e.at("ood_overrides")) c.eval.ood_overrides.push_back(eval::meta_override_from_json(o));
  const auto& p = e.at("probe");
  c.eval.probe.lat_steps = p.at("lat_steps").get<int>();
  c.eval.probe.lon_steps = p.at("lon_steps").get<int>();
  c.eval.probe.day_steps = p.at("day_steps").get<int>();
  c.eval.probe.margin = p.at("margin").get<double>();
  if (p.contains("spatial_day") && !p.at("spatial_day").is_null()) {
    c.eval.probe.spatial_day = p.at("spatial_day").get<double>();
  }
  c.eval.probe_value = p.at("value").get<double>();
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  const auto& d = dataset;
  if (d.source != "synthetic" && d.source != "manifest") {
    throw Error("config: dataset.source must be synthetic or manifest");
  }
  if (d.source == "manifest" && d.train_manifest.empty()) {
    throw Error("config: dataset.train_manifest is required when dataset.source is manifest");
  }
  if (d.split.strategy == dataset::SplitStrategy::stratified &&
      !(d.split.labeled_fraction > 0.0 && d.split.labeled_fraction <= 1.0)) {
    throw Error("config: dataset.split.labeled_fraction must lie in (0, 1]");
  }
  if (d.split.strategy == dataset::SplitStrategy::exact_per_class && d.split.labels_per_class < 1) {
    throw Error("config: dataset.split.labels_per_class must be at least 1 for exact-per-class");
  }
  d.synthetic.validate();
  train.validate();
  if (d.source == "synthetic") {
    const auto& s = d.synthetic;
    if (train.trains_teacher()) check_model_matches_data("teacher", train.resolved_teacher(), s.task_mode, s.num_classes, s.image_size);
    if (train.trains_student()) check_model_matches_data("student", train.student, s.task_mode, s.num_classes, s.image_size);
  }
  if (eval.batch_size < 1) throw Error("config: eval.batch_size must be positive");
  if (eval.probe.lat_steps < 1 || eval.probe.lon_steps < 1 || eval.probe.day_steps < 0 || eval.probe.margin < 0) {
    throw Error("config: eval.probe grid is invalid");
  }
  if (!(eval.probe_value >= 0.0 && eval.probe_value <= 1.0)) throw Error("config: eval.probe.value must lie in [0, 1]");
  for (const auto& o : eval.ood_overrides) {
    dataset::validate(o.apply(dataset::GeoTemporal{0.0, 0.0, 0.0}));
  }
}

std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a64(to_json(c).dump())); }

ExperimentConfig resolve_experiment(const std::optional<std::string>& preset,
                                    const std::optional<std::filesystem::path>& config_path,
                                    const std::optional<std::uint64_t>& seed) {
  nlohmann::json doc = nlohmann::json::object();
  nlohmann::json file = nlohmann::json::object();
  if (config_path) {
    std::ifstream in(*config_path);
    if (!in) throw Error("cannot read config " + config_path->string());
    try {
      file = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error("config " + config_path->string() + " is not valid JSON: " + e.what());
    }
    if (!file.is_object()) throw Error("config: top level must be a JSON object");
  }
  std::optional<std::string> base = preset;
  if (file.contains("preset")) {
    if (!base) base = file.at("preset").get<std::string>();
    file.erase("preset");
  }
  if (base) doc = preset_patch(*base);
  const ExperimentConfig defaults;
  doc = overlay(overlay(to_json(defaults), doc, ""), file, "");
  if (seed) {
    doc["train"]["seed"] = *seed;
    doc["dataset"]["split"]["seed"] = *seed;
  }
  return experiment_from_json(doc);
}

ExperimentData load_experiment_data(const ExperimentConfig& c) {
  ExperimentData out;
  if (c.dataset.source == "synthetic") {
    auto generated = dataset::generate_synthetic_samples(c.dataset.synthetic);
    out.train = dataset::LoadedDataset(generated.info, std::move(generated.train));
    out.test.emplace(generated.info, std::move(generated.test));
  } else {
    const auto manifest = dataset::load_manifest(c.dataset.train_manifest);
    out.train = dataset::load_images(manifest);
    if (!c.dataset.test_manifest.empty()) out.test = dataset::load_images(dataset::load_manifest(c.dataset.test_manifest));
    const auto& info = manifest.info;
    if (c.train.trains_teacher()) {
      check_model_matches_data("teacher", c.train.resolved_teacher(), info.task_mode, info.num_classes, info.image_size);
    }
    if (c.train.trains_student()) {
      check_model_matches_data("student", c.train.student, info.task_mode, info.num_classes, info.image_size);
    }
  }
  const dataset::DatasetManifest m{out.train.info(), dataset::records_of(out.train), {}};
  out.split = dataset::split(m, c.dataset.split);
  return out;
}

}  // namespace stssl::cli
