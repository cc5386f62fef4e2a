// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/eval/evaluate.hpp"

namespace stssl::eval {

/// One model evaluated without and then with each override.
struct OverrideSweep {
  MetricsReport baseline;
  std::vector<Real> scores;  // primary metric per override
  Real mean = 0.0;
  Real std_dev = 0.0;        // sample standard deviation
  /// Every override score is bitwise equal to the baseline.
  bool invariant = false;
};

nlohmann::json to_json(const OverrideSweep& sweep);

/// Throws Error on an empty override list.
OverrideSweep sweep_overrides(const model::Backbone& net, const model::ParamSnapshot& params,
                              const dataset::LoadedDataset& data, const std::vector<std::size_t>& indices,
                              const std::vector<MetaOverride>& overrides, int batch_size = 64);

struct OodReport {
  MetricsReport teacher_baseline;
  MetricsReport student_baseline;
  /// Primary metric (accuracy or mAP) under each override.
  std::vector<Real> teacher_scores;
  std::vector<Real> student_scores;
  Real teacher_mean = 0.0;
  Real teacher_std = 0.0;
  Real student_mean = 0.0;
  Real student_std = 0.0;

  Real teacher_drop() const { return teacher_baseline.primary() - teacher_mean; }
  Real student_drop() const { return student_baseline.primary() - student_mean; }
};

nlohmann::json to_json(const OodReport& report);

/// Evaluates the teacher with each override in turn and the student
/// alongside it. std is the sample standard deviation across overrides.
/// Throws Error on an empty override list, and if any student score differs
/// bitwise from its baseline.
OodReport ood_metadata_eval(const model::Backbone& teacher, const model::ParamSnapshot& teacher_params,
                            const model::Backbone& student, const model::ParamSnapshot& student_params,
                            const dataset::LoadedDataset& data, const std::vector<std::size_t>& indices,
                            const std::vector<MetaOverride>& overrides, int batch_size = 64);

}  // namespace stssl::eval
