// SPDX-License-Identifier: Apache-2.0
#include "stssl/common/hash.hpp"

#include "stssl/common/types.hpp"

#include <cstdio>

namespace stssl {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string to_string(TaskMode mode) {
  return mode == TaskMode::single_label ? "single-label" : "multi-label";
}

TaskMode task_mode_from_string(const std::string& text) {
  if (text == "single-label") return TaskMode::single_label;
  if (text == "multi-label") return TaskMode::multi_label;
  throw Error("unknown task_mode '" + text + "' (expected single-label or multi-label)");
}

}  // namespace stssl
