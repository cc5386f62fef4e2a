// SPDX-License-Identifier: Apache-2.0
#include "stssl/eval/ood.hpp"

#include <cmath>
#include <cstring>

namespace stssl::eval {

namespace {

void mean_std(const std::vector<Real>& v, Real& mean, Real& std_dev) {
  mean = 0.0;
  for (Real x : v) mean += x;
  mean /= static_cast<Real>(v.size());
  Real ss = 0.0;
  for (Real x : v) ss += (x - mean) * (x - mean);
  std_dev = v.size() > 1 ? std::sqrt(ss / static_cast<Real>(v.size() - 1)) : 0.0;
}

bool bitwise_equal(Real a, Real b) { return std::memcmp(&a, &b, sizeof(Real)) == 0; }

}  // namespace

nlohmann::json to_json(const OodReport& r) {
  return {{"teacher_baseline", to_json(r.teacher_baseline)},
          {"student_baseline", to_json(r.student_baseline)},
          {"teacher_scores", r.teacher_scores},
          {"student_scores", r.student_scores},
          {"teacher_mean", r.teacher_mean},
          {"teacher_std", r.teacher_std},
          {"student_mean", r.student_mean},
          {"student_std", r.student_std},
          {"teacher_drop", r.teacher_drop()},
          {"student_drop", r.student_drop()}};
}

nlohmann::json to_json(const OverrideSweep& s) {
  return {{"baseline", to_json(s.baseline)}, {"scores", s.scores}, {"mean", s.mean},
          {"std", s.std_dev},                {"invariant", s.invariant}};
}

OverrideSweep sweep_overrides(const model::Backbone& net, const model::ParamSnapshot& params,
                              const dataset::LoadedDataset& data, const std::vector<std::size_t>& indices,
                              const std::vector<MetaOverride>& overrides, int batch_size) {
  if (overrides.empty()) throw Error("OOD evaluation needs at least one metadata override");
  OverrideSweep s;
  s.baseline = evaluate(net, params, data, indices, batch_size);
  s.invariant = true;
  for (const auto& o : overrides) {
    s.scores.push_back(evaluate(net, params, data, indices, batch_size, &o).primary());
    s.invariant = s.invariant && bitwise_equal(s.scores.back(), s.baseline.primary());
  }
  mean_std(s.scores, s.mean, s.std_dev);
  return s;
}

OodReport ood_metadata_eval(const model::Backbone& teacher, const model::ParamSnapshot& teacher_params,
                            const model::Backbone& student, const model::ParamSnapshot& student_params,
                            const dataset::LoadedDataset& data, const std::vector<std::size_t>& indices,
                            const std::vector<MetaOverride>& overrides, int batch_size) {
  if (overrides.empty()) throw Error("OOD evaluation needs at least one metadata override");
  const OverrideSweep t = sweep_overrides(teacher, teacher_params, data, indices, overrides, batch_size);
  const OverrideSweep s = sweep_overrides(student, student_params, data, indices, overrides, batch_size);
  if (!s.invariant) throw Error("OOD evaluation: student output changed under a metadata override");
  OodReport r;
  r.teacher_baseline = t.baseline;
  r.student_baseline = s.baseline;
  r.teacher_scores = t.scores;
  r.student_scores = s.scores;
  r.teacher_mean = t.mean;
  r.teacher_std = t.std_dev;
  r.student_mean = s.mean;
  r.student_std = s.std_dev;
  return r;
}

}  // namespace stssl::eval
