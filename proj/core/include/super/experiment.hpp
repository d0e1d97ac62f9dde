#pragma once

// Seeded experiment runs and bandwidth sweeps on top of the trainer.
//
// run_experiment writes into `out`:
//   experiment.ini       the resolved configuration
//   seed<s>.csv          metrics rows for seed s (see metrics.hpp)
//   summary.csv          cross-seed team-return mean and std per interval
//   checkpoint_seed<s>/  final trainer checkpoint plus experiment.ini
// CSV rows are flushed as they are produced, so a diverged run leaves its
// partial CSV behind.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "super/experiment_config.hpp"
#include "super/trainer.hpp"

namespace super {

using ProgressFn = std::function<void(const std::string&)>;

struct SeedResult {
  std::uint64_t seed = 0;
  std::filesystem::path csv;
  double final_team_return = 0.0;
  /// Mean over agents of shared / offered at the end of the run.
  double realized_bandwidth = 0.0;
};

struct ExperimentResult {
  std::vector<SeedResult> seeds;
  double final_mean = 0.0;
  double final_std = 0.0;  // population std over seeds
};

ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out,
                                const ProgressFn& progress = {});

/// Trains one seed and streams its metrics to `csv_path`. Throws
/// TrainingDivergence after flushing the rows produced so far.
SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed, const std::filesystem::path& csv_path,
                    const std::filesystem::path& checkpoint_dir = {}, const ProgressFn& progress = {});

struct SweepCell {
  std::string strategy;  // "none" and "all" label the beta = 0 and beta = 1 endpoints
  double beta = 0.0;
  RunMode mode = RunMode::Super;
  ExperimentResult result;
  double realized_bandwidth = 0.0;  // mean over seeds
};

/// Runs every (strategy, beta) cell. beta = 0 collapses to the independent
/// no-sharing baseline and beta = 1 to share-all; each endpoint runs once.
/// Writes one sub-directory per cell and sweep.csv in `out`.
std::vector<SweepCell> run_sweep(const ExperimentConfig& base, const std::vector<double>& betas,
                                 const std::vector<SelectionStrategy>& strategies, const std::filesystem::path& out,
                                 const ProgressFn& progress = {});

struct CheckpointEvaluation {
  EvaluationResult result;
  std::size_t episodes = 0;
};

/// Loads a checkpoint directory written by run_experiment and runs greedy
/// episodes on a fresh environment. A non-null `trace` receives one line per step.
CheckpointEvaluation evaluate_checkpoint(const std::filesystem::path& dir, std::size_t episodes,
                                         std::uint64_t seed = 12345, std::ostream* trace = nullptr);

}  // namespace super
