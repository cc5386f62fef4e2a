// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/dataset/batches.hpp"
#include "stssl/eval/metrics.hpp"
#include "stssl/model/backbone.hpp"
#include "stssl/ssl/algorithm.hpp"
#include "stssl/train/ema.hpp"
#include "stssl/train/optimizer.hpp"
#include "stssl/train/train_config.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

namespace stssl::train {

/// One trainable network with its optimizer and EMA shadow.
struct ModelSlot {
  model::Backbone net;
  model::ParamSnapshot params;
  AdamW optimizer;
  EmaState ema;

  ModelSlot(model::BackboneConfig config, std::uint64_t seed, const TrainConfig& train);
};

struct TrainState {
  std::int64_t step = 0;
  std::optional<ModelSlot> teacher;
  std::optional<ModelSlot> student;
};

/// Fresh state: teacher and student initialized from independent streams.
TrainState init_state(const TrainConfig& config);

/// Loss components and pseudo-label bookkeeping of one step. Absent fields
/// belong to a model or term the configuration does not train.
struct StepMetrics {
  std::int64_t step = 0;
  double lr = 0.0;
  std::optional<double> teacher_supervised, teacher_unsupervised, teacher_debias, teacher_total;
  std::optional<double> student_supervised, student_unsupervised, student_debias, student_distillation,
      student_total;
  /// Share of unlabeled slots whose pseudo-label passes the threshold.
  double pseudo_quantity = 0.0;
  std::optional<double> pseudo_quality;
};

nlohmann::json to_json(const StepMetrics& m);

/// Teacher and student gradients are computed from the same forwards and
/// applied afterwards, so neither update sees the other's new weights.
/// Throws NumericalAbort when a loss component is not finite.
StepMetrics train_step(TrainState& state, const dataset::Batch& batch, const TrainConfig& config,
                       const ssl::SslAlgorithm& algo);

/// Indices into a loaded dataset for one run.
struct RunData {
  const dataset::LoadedDataset* train = nullptr;
  std::vector<std::size_t> labeled;
  std::vector<std::size_t> unlabeled;
  const dataset::LoadedDataset* eval = nullptr;
  std::vector<std::size_t> eval_indices;
};

struct RunOptions {
  /// When set: metrics.jsonl, checkpoints/, and model exports go here.
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::filesystem::path> resume_from;
  /// Extra fields stored in every checkpoint header and merged into every
  /// metrics record (e.g. the config hash).
  nlohmann::json extra = nlohmann::json::object();
  bool keep_history = true;
};

struct RunResult {
  TrainState state;
  std::vector<StepMetrics> history;
  std::vector<nlohmann::json> log_records;
  /// Evaluation of the EMA snapshots after the last step.
  std::optional<eval::MetricsReport> final_primary;
  std::optional<eval::MetricsReport> final_teacher;
  std::optional<eval::MetricsReport> best_primary;
};

/// Runs (or resumes) training to config.total_steps.
RunResult run_training(const TrainConfig& config, const RunData& data, const RunOptions& options = {});

/// Model that is deployed and evaluated: the student, or the teacher under
/// the single-model ablation.
const ModelSlot& primary_slot(const TrainState& state);

}  // namespace stssl::train
