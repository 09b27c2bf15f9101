#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace feederopt::cli {

struct RunManifest {
  std::string command;
  std::filesystem::path network;
  std::filesystem::path profiles;
  std::string hour;
  std::filesystem::path out = "out";

  double alpha = 0.9;
  double beta = 0.2;
  std::size_t samples = 2000;
  std::uint64_t seed = 1;  ///< screening / sampling stream
  std::vector<std::uint64_t> seeds;
  int population = 20;
  int max_generations = 100;
  int experiment = 1;
  int n_conf = 1;

  /// Throws ValidationError when a referenced input is missing or the seed
  /// list is empty for an experiment command.
  void validate() const;
};

nlohmann::json to_json(const RunManifest& manifest);

void cmd_enumerate(const RunManifest& manifest);
void cmd_screen(const RunManifest& manifest);
void cmd_optimize(const RunManifest& manifest);
void cmd_sample(const RunManifest& manifest);

/// Per-seed indicators of one experiment, as written to summary.json.
struct SeedOutcome {
  std::uint64_t seed = 0;
  int generations = 0;
  double delta_f_pct = 0.0;
  double delta_p_loss_w = 0.0;
  double final_p_loss_w = 0.0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation (n - 1)
};

MeanStd mean_std(const std::vector<double>& values);

/// Two-sided Welch t-test p-value; NaN when either side has fewer than two
/// values or both variances vanish.
double welch_p_value(const std::vector<double>& a, const std::vector<double>& b);

/// 0 success, 1 validation, 2 convergence, 3 missing artifact.
int exit_code_for(const std::exception& e);

/// Parses argv, runs the command, reports errors on stderr and returns the exit code.
int run(int argc, char** argv);

}  // namespace feederopt::cli
