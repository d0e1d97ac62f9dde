#pragma once

// Experiment files are INI-style:
//
//   [experiment]  mode, total_env_steps, seeds, report_interval_steps,
//                 smoothing_alpha, eval_episodes, parallel_learning, checkpoint
//   [environment] preset (mini | pursuit) and any PursuitConfig field
//   [trainer]     TrainerConfig scalars
//   [network]     hidden_layers, dueling, double_q
//   [selection]   SelectionConfig fields
//
// Unknown sections and keys are rejected. Errors are ConfigError with a
// "section.key: reason" message.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "super/config.hpp"
#include "super/pursuit.hpp"
#include "super/trainer.hpp"

namespace super {

struct ExperimentConfig {
  PursuitConfig environment = mini_pursuit_config();
  TrainerConfig trainer;
  RunMode mode = RunMode::Super;
  std::uint64_t total_env_steps = 150000;
  std::vector<std::uint64_t> seeds{0};
  std::uint64_t report_interval_steps = 1000;
  double smoothing_alpha = 0.3;
  std::size_t eval_episodes = 0;
  bool parallel_learning = false;
  bool checkpoint = true;

  void validate() const;
};

ExperimentConfig parse_experiment_config(std::istream& is);
ExperimentConfig load_experiment_config(const std::string& path);
/// Writes every field, so the output parses back to an equal configuration.
void write_experiment_config(std::ostream& os, const ExperimentConfig& config);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

}  // namespace super
