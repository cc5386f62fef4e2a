// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <string>
#include <vector>

namespace stssl::cli {

std::vector<std::string> preset_names();
/// Patch over the experiment defaults. Throws Error for an unknown name.
nlohmann::json preset_patch(const std::string& name);

}  // namespace stssl::cli
