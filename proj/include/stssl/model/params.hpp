// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/common/types.hpp"

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace stssl::model {

/// Ordered, named collection of 2-D parameter tensors. The same layout is
/// reused for gradients, optimizer moments and EMA shadows.
class ParamSnapshot {
 public:
  void add(std::string name, Mat value);

  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  const std::vector<std::string>& names() const { return names_; }
  Mat& operator[](std::size_t i) { return values_[i]; }
  const Mat& operator[](std::size_t i) const { return values_[i]; }

  std::optional<std::size_t> find(const std::string& name) const;
  /// Throws Error when the name is unknown.
  std::size_t index(const std::string& name) const;
  Mat& at(const std::string& name) { return values_[index(name)]; }
  const Mat& at(const std::string& name) const { return values_[index(name)]; }

  ParamSnapshot zeros_like() const;
  void set_zero();
  std::size_t num_scalars() const;
  /// Same names in the same order with the same shapes.
  bool same_layout(const ParamSnapshot& other) const;
  /// Bitwise equality of names, shapes and values.
  bool operator==(const ParamSnapshot& other) const;

 private:
  std::vector<std::string> names_;
  std::vector<Mat> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Largest absolute elementwise difference over a shared layout.
Real max_abs_diff(const ParamSnapshot& a, const ParamSnapshot& b);

}  // namespace stssl::model
