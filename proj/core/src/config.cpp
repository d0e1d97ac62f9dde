#include "super/config.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "super/errors.hpp"

namespace super {

std::string_view to_string(SelectionStrategy strategy) {
  switch (strategy) {
    case SelectionStrategy::None: return "none";
    case SelectionStrategy::Quantile: return "quantile";
    case SelectionStrategy::Gaussian: return "gaussian";
    case SelectionStrategy::Stochastic: return "stochastic";
    case SelectionStrategy::ShareAll: return "share_all";
    case SelectionStrategy::UniformRandom: return "uniform_random";
  }
  throw ConfigError("unknown selection strategy");
}

SelectionStrategy parse_selection_strategy(std::string_view name) {
  if (name == "none") return SelectionStrategy::None;
  if (name == "quantile") return SelectionStrategy::Quantile;
  if (name == "gaussian") return SelectionStrategy::Gaussian;
  if (name == "stochastic") return SelectionStrategy::Stochastic;
  if (name == "share_all" || name == "all") return SelectionStrategy::ShareAll;
  if (name == "uniform_random" || name == "uniform") return SelectionStrategy::UniformRandom;
  throw ConfigError("unknown selection strategy '" + std::string(name) + "'");
}

void SelectionConfig::validate() const {
  if (!(bandwidth_beta >= 0.0 && bandwidth_beta <= 1.0)) {
    throw ConfigError("selection.bandwidth_beta: must lie in [0, 1]");
  }
  if (window_size_k < 1) throw ConfigError("selection.window_size_k: must be >= 1");
  if (!(stochastic_alpha >= 0.0)) throw ConfigError("selection.stochastic_alpha: must be >= 0");
  if (!(priority_epsilon > 0.0)) throw ConfigError("selection.priority_epsilon: must be > 0");
}

void TrainerConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(learning_rate >= 0.0 && std::isfinite(learning_rate), "trainer.learning_rate: must be finite and >= 0");
  require(train_batch_size >= 1, "trainer.train_batch_size: must be positive");
  require(rollout_fragment_length >= 1, "trainer.rollout_fragment_length: must be positive");
  require(target_update_freq >= 1, "trainer.target_update_freq: must be positive");
  require(buffer_capacity >= 1, "trainer.buffer_capacity: must be positive");
  require(train_batch_size <= buffer_capacity, "trainer.train_batch_size: must not exceed buffer_capacity");
  require(gamma >= 0.0 && gamma < 1.0, "trainer.gamma: must lie in [0, 1)");
  require(epsilon_initial >= 0.0 && epsilon_initial <= 1.0, "trainer.epsilon_initial: must lie in [0, 1]");
  require(epsilon_final >= 0.0 && epsilon_final <= 1.0, "trainer.epsilon_final: must lie in [0, 1]");
  require(epsilon_final <= epsilon_initial, "trainer.epsilon_final: must not exceed epsilon_initial");
  require(epsilon_decay_steps >= 1, "trainer.epsilon_decay_steps: must be positive");
  require(priority_alpha >= 0.0, "trainer.priority_alpha: must be >= 0");
  require(priority_epsilon > 0.0, "trainer.priority_epsilon: must be > 0");
  require(is_beta_initial >= 0.0 && is_beta_initial <= 1.0, "trainer.is_beta_initial: must lie in [0, 1]");
  require(is_beta_final >= 0.0 && is_beta_final <= 1.0, "trainer.is_beta_final: must lie in [0, 1]");
  require(is_beta_anneal_steps >= 1, "trainer.is_beta_anneal_steps: must be positive");
  require(!hidden_layers.empty(), "network.hidden_layers: needs at least one hidden layer");
  require(std::all_of(hidden_layers.begin(), hidden_layers.end(), [](std::size_t n) { return n > 0; }),
          "network.hidden_layers: layer sizes must be positive");
  require(adam_epsilon > 0.0, "trainer.adam_epsilon: must be > 0");
  require(grad_clip_norm >= 0.0, "trainer.grad_clip_norm: must be >= 0");
  require(huber_delta > 0.0, "trainer.huber_delta: must be > 0");
  require(gradient_steps_per_iteration >= 1, "trainer.gradient_steps_per_iteration: must be positive");
  selection.validate();
}

double epsilon_at(const TrainerConfig& cfg, std::uint64_t env_steps) {
  const double slope = (cfg.epsilon_initial - cfg.epsilon_final) /
                       static_cast<double>(cfg.epsilon_decay_steps);
  return std::max(cfg.epsilon_final, cfg.epsilon_initial - static_cast<double>(env_steps) * slope);
}

double is_beta_at(const TrainerConfig& cfg, std::uint64_t env_steps) {
  const double frac = std::min(1.0, static_cast<double>(env_steps) /
                                        static_cast<double>(cfg.is_beta_anneal_steps));
  return cfg.is_beta_initial + frac * (cfg.is_beta_final - cfg.is_beta_initial);
}

}  // namespace super
