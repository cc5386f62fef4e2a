// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stssl/cli/experiment_config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace stssl::cli {

/// Common command-line selections.
struct CommonOptions {
  std::optional<std::string> preset;
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "out";
};

void cmd_generate_data(const CommonOptions& o, std::ostream& log);

struct TrainOptions {
  bool dry_run = false;
  std::optional<std::filesystem::path> resume;
};
void cmd_train(const CommonOptions& o, const TrainOptions& t, std::ostream& log);

/// Each checkpoint is a model export (teacher.ckpt / student.ckpt).
void cmd_evaluate(const CommonOptions& o, const std::vector<std::filesystem::path>& checkpoints, std::ostream& log);

void cmd_probe(const CommonOptions& o, const std::filesystem::path& teacher_checkpoint, std::ostream& log);

void cmd_plot(const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& out_dir,
              int class_index, std::ostream& log);

/// Runs a command line; returns the process exit code (0 ok, 1 user error,
/// 2 numerical abort). Diagnostics go to err.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace stssl::cli
