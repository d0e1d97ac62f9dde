#pragma once

// Multi-agent DQN training loop with optional selective experience relay.
//
// One iteration:
//   1. collect rollout_fragment_length joint steps (epsilon-greedy per agent)
//   2. insert each agent's batch into its own buffer (at max priority)
//   3. compute td-errors of the fresh batches with the pre-update networks and
//      run selection + relay (Super mode only)
//   4. drain the relay and insert received experiences (sender td as priority)
//   5. sample with PER and take gradient steps once the buffer is warm
//   6. refresh priorities with the returned td-errors
//   7. hard target sync at multiples of target_update_freq env steps
//   8. epsilon follows the linear schedule in env steps

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "super/config.hpp"
#include "super/optimizer.hpp"
#include "super/prioritized_buffer.hpp"
#include "super/qnetwork.hpp"
#include "super/relay_channel.hpp"
#include "super/selection.hpp"
#include "super/types.hpp"

namespace super {

enum class RunMode { IndependentDQN, Super, ParameterSharing };

std::string_view to_string(RunMode mode);
RunMode parse_run_mode(std::string_view name);

struct AgentIterationStats {
  std::vector<double> completed_returns;  // episodes that ended this iteration
  std::size_t collected = 0;
  std::size_t received = 0;
  std::size_t shared = 0;
  double mean_abs_td = 0.0;  // over this iteration's own batch
  std::optional<double> loss;  // set when the agent trained
};

struct IterationReport {
  std::uint64_t env_steps = 0;  // after the iteration
  double epsilon = 0.0;         // after the iteration
  bool target_synced = false;
  std::vector<AgentIterationStats> agents;
  std::vector<double> completed_team_returns;
};

struct EvaluationResult {
  std::vector<double> agent_mean_returns;
  double team_mean_return = 0.0;
};

using ActionPolicy = std::function<int(AgentId, const Observation&)>;

/// Runs `episodes` full episodes with `policy` after reseeding `env` and
/// returns undiscounted per-agent and team returns averaged over episodes.
EvaluationResult evaluate_policy(MarkovGame& env, const ActionPolicy& policy, std::size_t episodes,
                                 std::uint64_t seed);

struct TrainerOptions {
  /// Run the learning phase of distinct agents on separate threads. Results
  /// are identical to the sequential mode.
  bool parallel_learning = false;
};

class Trainer {
 public:
  Trainer(std::unique_ptr<MarkovGame> env, TrainerConfig config, RunMode mode, TrainerOptions options = {});

  /// Step 1 on its own: fragment_length joint steps, one batch per agent in
  /// step order. Episodes auto-reset.
  std::vector<std::vector<Experience>> collect_rollout();
  IterationReport train_iteration();

  /// Greedy (epsilon = 0) evaluation of the current online networks.
  EvaluationResult evaluate(MarkovGame& env, std::size_t episodes, std::uint64_t seed) const;
  int greedy_action(AgentId agent, const Observation& obs) const;

  const TrainerConfig& config() const { return config_; }
  RunMode mode() const { return mode_; }
  std::size_t agent_count() const { return agents_.size(); }
  std::uint64_t env_steps() const { return env_steps_; }
  std::uint64_t iterations() const { return iterations_; }
  double epsilon() const { return epsilon_at(config_, env_steps_); }

  /// Index of the network pair that controls `agent` (always 0 under parameter sharing).
  std::size_t policy_of(AgentId agent) const { return agents_.at(agent).policy; }
  std::size_t policy_count() const { return policies_.size(); }
  const QNetwork& online(AgentId agent) const { return policies_[policy_of(agent)].online; }
  QNetwork& online(AgentId agent) { return policies_[policy_of(agent)].online; }
  const QNetwork& target(AgentId agent) const { return policies_[policy_of(agent)].target; }
  std::uint64_t gradient_steps(AgentId agent) const { return policies_[policy_of(agent)].optimizer.step_count(); }
  const PrioritizedBuffer& buffer(AgentId agent) const { return agents_.at(agent).buffer; }
  const ExperienceSelector& selector(AgentId agent) const { return agents_.at(agent).selector; }
  const RelayChannel& channel() const { return *channel_; }
  const MarkovGame& env() const { return *env_; }

  std::uint64_t own_insertions(AgentId agent) const { return agents_.at(agent).own_insertions; }
  std::uint64_t received_insertions(AgentId agent) const { return agents_.at(agent).received_insertions; }

  /// Writes everything needed for an exact resume into `dir`.
  void save_checkpoint(const std::filesystem::path& dir) const;
  /// `env` must be constructed with the configuration the checkpoint was made with.
  static Trainer load_checkpoint(const std::filesystem::path& dir, std::unique_ptr<MarkovGame> env,
                                 TrainerOptions options = {});

 private:
  struct Policy {
    QNetwork online;
    QNetwork target;
    Optimizer<float> optimizer;
  };
  struct Learner {
    std::size_t policy = 0;
    PrioritizedBuffer buffer;
    ExperienceSelector selector;
    std::mt19937_64 explore_rng;
    std::mt19937_64 sample_rng;
    std::mt19937_64 select_rng;
    double episode_return = 0.0;
    std::uint64_t own_insertions = 0;
    std::uint64_t received_insertions = 0;
  };

  int act(AgentId agent, const Observation& obs, double epsilon);
  std::optional<double> learn(AgentId agent);

  friend struct CheckpointAccess;

  std::unique_ptr<MarkovGame> env_;
  TrainerConfig config_;
  RunMode mode_;
  TrainerOptions options_;
  std::vector<Policy> policies_;
  std::vector<Learner> agents_;
  std::unique_ptr<RelayChannel> channel_;
  std::vector<Observation> observations_;
  std::vector<std::vector<double>> finished_returns_;  // per agent, per finished episode
  std::uint64_t env_steps_ = 0;
  std::uint64_t iterations_ = 0;
};

/// Network shape used for a game under a trainer configuration.
NetworkShape network_shape(const MarkovGameSpec& spec, const TrainerConfig& config);

}  // namespace super
