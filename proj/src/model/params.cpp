// SPDX-License-Identifier: Apache-2.0
#include "stssl/model/params.hpp"

#include <cstring>

namespace stssl::model {

void ParamSnapshot::add(std::string name, Mat value) {
  if (index_.count(name)) throw Error("duplicate parameter '" + name + "'");
  index_.emplace(name, names_.size());
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
}

std::optional<std::size_t> ParamSnapshot::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ParamSnapshot::index(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter '" + name + "'");
  return it->second;
}

ParamSnapshot ParamSnapshot::zeros_like() const {
  ParamSnapshot out;
  for (std::size_t i = 0; i < size(); ++i) {
    out.add(names_[i], Mat::Zero(values_[i].rows(), values_[i].cols()));
  }
  return out;
}

void ParamSnapshot::set_zero() {
  for (auto& v : values_) v.setZero();
}

std::size_t ParamSnapshot::num_scalars() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

bool ParamSnapshot::same_layout(const ParamSnapshot& other) const {
  if (names_ != other.names_) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (values_[i].rows() != other.values_[i].rows() || values_[i].cols() != other.values_[i].cols()) {
      return false;
    }
  }
  return true;
}

bool ParamSnapshot::operator==(const ParamSnapshot& other) const {
  if (!same_layout(other)) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    const auto bytes = static_cast<std::size_t>(values_[i].size()) * sizeof(Real);
    if (bytes && std::memcmp(values_[i].data(), other.values_[i].data(), bytes) != 0) return false;
  }
  return true;
}

Real max_abs_diff(const ParamSnapshot& a, const ParamSnapshot& b) {
  if (!a.same_layout(b)) throw Error("max_abs_diff: layouts differ");
  Real m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size()) m = std::max(m, (a[i] - b[i]).cwiseAbs().maxCoeff());
  }
  return m;
}

}  // namespace stssl::model
