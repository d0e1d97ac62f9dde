#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace super {

enum class SelectionStrategy { None, Quantile, Gaussian, Stochastic, ShareAll, UniformRandom };

std::string_view to_string(SelectionStrategy strategy);
/// Accepts none, quantile, gaussian, stochastic, share_all (or all), uniform_random (or uniform).
SelectionStrategy parse_selection_strategy(std::string_view name);

struct SelectionConfig {
  SelectionStrategy strategy = SelectionStrategy::None;
  /// Target fraction of own experiences to relay.
  double bandwidth_beta = 0.1;
  /// Sliding window length over recent own td-errors.
  std::size_t window_size_k = 1500;
  /// td-driven strategies share nothing until the window holds this many values.
  std::size_t min_window_fill = 30;
  /// Gaussian threshold mu + c * sigma^2 when true, mu + c * sigma otherwise.
  bool gaussian_use_variance = true;
  /// Priority exponent for stochastic weighted selection.
  double stochastic_alpha = 0.6;
  /// Added to td before exponentiation in stochastic selection.
  double priority_epsilon = 1e-6;

  void validate() const;
};

/// Priority given to experiences received over the relay.
enum class RelayPriority { SenderTd, MaxPriority };

enum class OptimizerKind { Adam, Sgd };

/// DQN-family hyperparameters for one learner. Defaults follow the Pursuit
/// table of the reference experiments where one exists.
struct TrainerConfig {
  double learning_rate = 0.00016;
  std::size_t train_batch_size = 32;
  std::size_t rollout_fragment_length = 4;
  /// Hard target sync period in environment steps.
  std::size_t target_update_freq = 1000;
  std::size_t buffer_capacity = 120000;
  double gamma = 0.99;

  double epsilon_initial = 0.1;
  double epsilon_final = 0.001;
  std::size_t epsilon_decay_steps = 100000;

  double priority_alpha = 0.6;
  double priority_epsilon = 1e-6;
  bool importance_sampling = true;
  double is_beta_initial = 0.4;
  double is_beta_final = 1.0;
  std::size_t is_beta_anneal_steps = 100000;

  bool dueling = true;
  bool double_q = true;
  std::vector<std::size_t> hidden_layers{128, 128};

  OptimizerKind optimizer = OptimizerKind::Adam;
  double adam_epsilon = 0.00015;
  /// Global gradient-norm clip; 0 disables.
  double grad_clip_norm = 40.0;
  double huber_delta = 1.0;

  /// No learning until an agent's buffer holds this many experiences.
  std::size_t learning_starts = 1000;
  /// Gradient steps per agent per collected fragment.
  std::size_t gradient_steps_per_iteration = 1;

  RelayPriority relay_priority = RelayPriority::SenderTd;
  SelectionConfig selection;
  std::uint64_t seed = 0;

  void validate() const;
};

/// max(final, initial - t * (initial - final) / decay_steps)
double epsilon_at(const TrainerConfig& cfg, std::uint64_t env_steps);
/// Linear importance-sampling exponent anneal, clamped at is_beta_final.
double is_beta_at(const TrainerConfig& cfg, std::uint64_t env_steps);

}  // namespace super
