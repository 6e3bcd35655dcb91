#pragma once

// The four subcommands. Every path argument is relative to `out`.

#include "hrlf_cli/config.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace hrlf::cli {

struct TrainOptions {
  Role role = Role::teacher;
  /// Teacher run directory; required for the student role.
  std::optional<std::filesystem::path> teacher_ckpt;
  /// Extra ablations on top of the config: "frf", "hmi", "hal".
  std::vector<std::string> ablate;
  /// Output run directory; defaults to the role name plus ablation suffixes.
  std::optional<std::string> name;
};

struct EvalOptions {
  std::filesystem::path ckpt;
  bool grid = false;
  bool sweep = false;
  /// Series label in the reports; defaults to the checkpoint directory name.
  std::optional<std::string> label;
};

/// Generates the synthetic dataset into out/<data.path>.
std::filesystem::path cmd_gen_data(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);

/// Trains and writes out/<name>/ holding teacher/ (and for students
/// student/, stats/, discs/), history.jsonl and run.json.
std::filesystem::path cmd_train(const RunConfig& config, const std::filesystem::path& out,
                                const TrainOptions& options, std::ostream& log);

/// Writes out/reports/<label>_grid.{txt,jsonl} and/or <label>_sweep.{txt,jsonl}.
std::vector<std::filesystem::path> cmd_eval(const RunConfig& config, const std::filesystem::path& out,
                                            const EvalOptions& options, std::ostream& log);

/// Reads JSONL reports of one kind and writes out/plots/<name>.svg.
std::filesystem::path cmd_plot(const std::filesystem::path& out, const std::vector<std::filesystem::path>& reports,
                               const std::string& name, std::ostream& log);

/// Runs the command line; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace hrlf::cli
