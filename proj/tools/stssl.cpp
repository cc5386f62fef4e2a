// SPDX-License-Identifier: Apache-2.0
#include "stssl/cli/commands.hpp"
#include "stssl/common/allocator.hpp"

#include <iostream>

int main(int argc, char** argv) {
  stssl::retain_freed_memory();
  return stssl::cli::run_cli(argc, argv, std::cout, std::cerr);
}
