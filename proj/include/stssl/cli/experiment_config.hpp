// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/dataset/dataset.hpp"
#include "stssl/dataset/split.hpp"
#include "stssl/dataset/synthetic.hpp"
#include "stssl/eval/evaluate.hpp"
#include "stssl/eval/probe.hpp"
#include "stssl/train/train_config.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace stssl::cli {

struct DatasetSection {
  /// "synthetic" (generated in memory from `synthetic`) or "manifest".
  std::string source = "synthetic";
  dataset::SyntheticWorldConfig synthetic;
  std::string train_manifest;
  std::string test_manifest;
  dataset::SplitSpec split;
};

/// Five locations outside the default synthetic box.
std::vector<eval::MetaOverride> default_ood_overrides();

struct EvalSection {
  int batch_size = 128;
  std::vector<eval::MetaOverride> ood_overrides = default_ood_overrides();
  eval::ProbeGridOptions probe;
  double probe_value = 0.5;
};

/// Desk-scale defaults: a compact ViT teacher/student pair sized for the
/// default synthetic world.
train::TrainConfig default_train_config();

/// One document drives every command. JSON sections: dataset, model
/// (teacher, student), ssl (algorithm, tau, lambda_u, lambda_d), train, eval.
struct ExperimentConfig {
  std::string name = "experiment";
  DatasetSection dataset;
  train::TrainConfig train = default_train_config();
  EvalSection eval;

  /// Schema and cross-section checks. Throws Error.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
/// Overlays a (partial) document on the defaults; unknown keys are errors.
ExperimentConfig experiment_from_json(const nlohmann::json& patch);
/// FNV-1a of the canonical JSON form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

/// Preset (if any), then the file (which may name its own base preset under
/// "preset"), then the seed override. The seed replaces train.seed and the
/// split seed; the synthetic world stays fixed.
ExperimentConfig resolve_experiment(const std::optional<std::string>& preset,
                                    const std::optional<std::filesystem::path>& config_path,
                                    const std::optional<std::uint64_t>& seed);

/// Training and test data of an experiment plus the labeled/unlabeled split.
struct ExperimentData {
  dataset::LoadedDataset train;
  std::optional<dataset::LoadedDataset> test;
  dataset::SplitResult split;
};

ExperimentData load_experiment_data(const ExperimentConfig& c);

}  // namespace stssl::cli
