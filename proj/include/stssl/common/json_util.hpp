// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/common/types.hpp"

#include <json.hpp>

#include <string>

namespace stssl {

/// Throws Error naming the first key of `patch` that has no counterpart in
/// `reference`, descending into objects present in both.
inline void reject_unknown_keys(const nlohmann::json& reference, const nlohmann::json& patch,
                                const std::string& where) {
  if (!patch.is_object() || !reference.is_object()) return;
  for (const auto& [key, value] : patch.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!reference.contains(key)) throw Error("unknown config key '" + path + "'");
    if (value.is_object() && reference.at(key).is_object()) reject_unknown_keys(reference.at(key), value, path);
  }
}

/// reference with patch applied (RFC 7386), after rejecting unknown keys.
inline nlohmann::json overlay(nlohmann::json reference, const nlohmann::json& patch, const std::string& where) {
  reject_unknown_keys(reference, patch, where);
  reference.merge_patch(patch);
  return reference;
}

}  // namespace stssl
