// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace stssl {

/// All model arithmetic runs in double precision so finite-difference checks
/// are meaningful at the tolerances the test suite pins.
using Real = double;
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<Real, 1, Eigen::Dynamic>;
using ColVec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

enum class TaskMode { single_label, multi_label };

/// User-facing failure: bad input, bad config, missing file.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss component became non-finite during training.
class NumericalAbort : public Error {
 public:
  NumericalAbort(std::string component, std::string diagnostic)
      : Error("numerical abort in " + component + ": " + diagnostic),
        component_(std::move(component)) {}
  const std::string& component() const { return component_; }

 private:
  std::string component_;
};

std::string to_string(TaskMode mode);
TaskMode task_mode_from_string(const std::string& text);

}  // namespace stssl
