#include "super/trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <numeric>
#include <string>

#include "super/errors.hpp"
#include "super/td_error.hpp"

namespace super {
namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// Seed streams. Per-agent streams are offset by the agent id.
constexpr std::uint64_t kEnvStream = 1;
constexpr std::uint64_t kNetworkStream = 1000;
constexpr std::uint64_t kExploreStream = 2000;
constexpr std::uint64_t kSampleStream = 3000;
constexpr std::uint64_t kSelectStream = 4000;

}  // namespace

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::IndependentDQN: return "independent";
    case RunMode::Super: return "super";
    case RunMode::ParameterSharing: return "parameter_sharing";
  }
  throw ConfigError("unknown run mode");
}

RunMode parse_run_mode(std::string_view name) {
  if (name == "independent" || name == "dqn") return RunMode::IndependentDQN;
  if (name == "super") return RunMode::Super;
  if (name == "parameter_sharing") return RunMode::ParameterSharing;
  throw ConfigError("experiment.mode: unknown run mode '" + std::string(name) + "'");
}

NetworkShape network_shape(const MarkovGameSpec& spec, const TrainerConfig& config) {
  NetworkShape shape;
  shape.input_dim = spec.observation_dim;
  shape.action_count = spec.action_count;
  shape.hidden = config.hidden_layers;
  shape.dueling = config.dueling;
  return shape;
}

EvaluationResult evaluate_policy(MarkovGame& env, const ActionPolicy& policy, std::size_t episodes,
                                 std::uint64_t seed) {
  const std::size_t n = env.spec().agent_count;
  EvaluationResult result;
  result.agent_mean_returns.assign(n, 0.0);
  if (episodes == 0) return result;
  env.reseed(seed);
  std::vector<int> actions(n);
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    auto obs = env.reset();
    for (std::size_t t = 0; t < env.spec().max_episode_steps; ++t) {
      for (std::size_t i = 0; i < n; ++i) actions[i] = policy(static_cast<AgentId>(i), obs[i]);
      auto outcome = env.step(actions);
      for (std::size_t i = 0; i < n; ++i) result.agent_mean_returns[i] += outcome.rewards[i];
      obs = std::move(outcome.observations);
      if (outcome.done) break;
    }
  }
  for (auto& r : result.agent_mean_returns) r /= static_cast<double>(episodes);
  result.team_mean_return = std::accumulate(result.agent_mean_returns.begin(), result.agent_mean_returns.end(), 0.0);
  return result;
}

Trainer::Trainer(std::unique_ptr<MarkovGame> env, TrainerConfig config, RunMode mode, TrainerOptions options)
    : env_(std::move(env)), config_(std::move(config)), mode_(mode), options_(options) {
  if (!env_) throw ContractViolation("trainer needs an environment");
  config_.validate();
  const auto& spec = env_->spec();
  spec.validate();
  if (mode_ == RunMode::IndependentDQN || mode_ == RunMode::ParameterSharing) {
    config_.selection.strategy = SelectionStrategy::None;
  }

  const NetworkShape shape = network_shape(spec, config_);
  const std::size_t policy_count = mode_ == RunMode::ParameterSharing ? 1 : spec.agent_count;
  for (std::size_t p = 0; p < policy_count; ++p) {
    QNetwork online(shape, derive_seed(config_.seed, kNetworkStream + p));
    QNetwork target = online;
    Optimizer<float> opt(config_.optimizer, config_.learning_rate, config_.adam_epsilon, online.parameter_count());
    policies_.push_back({std::move(online), std::move(target), std::move(opt)});
  }

  const ReplayConfig replay{config_.buffer_capacity, config_.priority_alpha, config_.priority_epsilon};
  for (std::size_t i = 0; i < spec.agent_count; ++i) {
    agents_.push_back(Learner{
        .policy = policy_count == 1 ? 0 : i,
        .buffer = PrioritizedBuffer(replay),
        .selector = ExperienceSelector(config_.selection),
        .explore_rng = std::mt19937_64(derive_seed(config_.seed, kExploreStream + i)),
        .sample_rng = std::mt19937_64(derive_seed(config_.seed, kSampleStream + i)),
        .select_rng = std::mt19937_64(derive_seed(config_.seed, kSelectStream + i)),
    });
  }
  channel_ = std::make_unique<RelayChannel>(spec.agent_count, spec.observation_dim);

  finished_returns_.resize(spec.agent_count);
  env_->reseed(derive_seed(config_.seed, kEnvStream));
  observations_ = env_->reset();
}

int Trainer::greedy_action(AgentId agent, const Observation& obs) const {
  return online(agent).greedy_action(obs);
}

int Trainer::act(AgentId agent, const Observation& obs, double epsilon) {
  auto& rng = agents_[agent].explore_rng;
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (u < epsilon) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(env_->spec().action_count) - 1);
    return pick(rng);
  }
  return greedy_action(agent, obs);
}

std::vector<std::vector<Experience>> Trainer::collect_rollout() {
  const std::size_t n = agents_.size();
  std::vector<std::vector<Experience>> batches(n);
  std::vector<int> actions(n);
  for (std::size_t t = 0; t < config_.rollout_fragment_length; ++t) {
    const double eps = epsilon_at(config_, env_steps_);
    for (std::size_t i = 0; i < n; ++i) actions[i] = act(static_cast<AgentId>(i), observations_[i], eps);
    StepOutcome outcome = env_->step(actions);
    ++env_steps_;
    for (std::size_t i = 0; i < n; ++i) {
      Experience exp;
      exp.obs = std::move(observations_[i]);
      exp.action = actions[i];
      exp.reward = static_cast<float>(outcome.rewards[i]);
      exp.next_obs = outcome.observations[i];
      exp.done = outcome.done;
      exp.origin_agent = static_cast<AgentId>(i);
      batches[i].push_back(std::move(exp));
      agents_[i].episode_return += outcome.rewards[i];
    }
    observations_ = outcome.done ? env_->reset() : std::move(outcome.observations);
    if (outcome.done) {
      for (std::size_t i = 0; i < n; ++i) {
        finished_returns_[i].push_back(agents_[i].episode_return);
        agents_[i].episode_return = 0.0;
      }
    }
  }
  return batches;
}

std::optional<double> Trainer::learn(AgentId agent) {
  Learner& learner = agents_[agent];
  const std::size_t warm = std::max(config_.learning_starts, config_.train_batch_size);
  if (learner.buffer.size() < warm) return std::nullopt;
  Policy& policy = policies_[learner.policy];
  const BootstrapConfig bootstrap{config_.gamma, config_.double_q, config_.huber_delta};
  const double beta = is_beta_at(config_, env_steps_);
  double loss = 0.0;
  for (std::size_t g = 0; g < config_.gradient_steps_per_iteration; ++g) {
    PrioritizedSample sample = learner.buffer.sample(config_.train_batch_size, beta, learner.sample_rng);
    if (!config_.importance_sampling) std::fill(sample.weights.begin(), sample.weights.end(), 1.0);
    auto result = train_on_batch(policy.online, policy.target, sample.experiences, sample.weights, bootstrap,
                                 policy.optimizer, config_.grad_clip_norm);
    learner.buffer.update_priorities(sample.slots, result.td_errors);
    loss += result.loss;
  }
  return loss / static_cast<double>(config_.gradient_steps_per_iteration);
}

IterationReport Trainer::train_iteration() {
  const std::size_t n = agents_.size();
  const std::uint64_t steps_before = env_steps_;
  IterationReport report;
  report.agents.resize(n);

  // 1. collect
  auto batches = collect_rollout();

  // 2. own experiences enter at max priority
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& exp : batches[i]) agents_[i].buffer.insert(exp);
    agents_[i].own_insertions += batches[i].size();
    report.agents[i].collected = batches[i].size();
  }

  // 3. td-errors from the pre-update networks, then selection and relay
  for (std::size_t i = 0; i < n; ++i) {
    const auto agent = static_cast<AgentId>(i);
    const Policy& policy = policies_[agents_[i].policy];
    const auto tds = td_errors(std::span<const Experience>(batches[i]), policy.online, policy.target,
                               config_.gamma, config_.double_q);
    for (double td : tds) {
      if (!std::isfinite(td)) {
        throw TrainingDivergence("non-finite td-error for agent " + std::to_string(i), policy.optimizer.step_count());
      }
    }
    report.agents[i].mean_abs_td = tds.empty() ? 0.0 : std::accumulate(tds.begin(), tds.end(), 0.0) /
                                                            static_cast<double>(tds.size());
    if (mode_ == RunMode::Super) {
      report.agents[i].shared =
          select_and_relay(agent, batches[i], tds, agents_[i].selector, *channel_, agents_[i].select_rng);
    }
  }

  // 4. received experiences
  if (mode_ == RunMode::Super) {
    for (std::size_t i = 0; i < n; ++i) {
      auto received = channel_->drain(static_cast<AgentId>(i));
      for (auto& exp : received) {
        std::optional<double> hint;
        if (config_.relay_priority == RelayPriority::SenderTd && exp.td_at_share) hint = *exp.td_at_share;
        agents_[i].buffer.insert(std::move(exp), hint);
      }
      agents_[i].received_insertions += received.size();
      report.agents[i].received = received.size();
    }
  }

  // 5-6. learning and priority refresh
  const bool parallel = options_.parallel_learning && policies_.size() == n && n > 1;
  if (parallel) {
    std::vector<std::future<std::optional<double>>> jobs;
    for (std::size_t i = 0; i < n; ++i) {
      jobs.push_back(std::async(std::launch::async, [this, i] { return learn(static_cast<AgentId>(i)); }));
    }
    for (std::size_t i = 0; i < n; ++i) report.agents[i].loss = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < n; ++i) report.agents[i].loss = learn(static_cast<AgentId>(i));
  }

  // 7. hard target sync
  if (env_steps_ / config_.target_update_freq > steps_before / config_.target_update_freq) {
    for (auto& policy : policies_) sync_target(policy.online, policy.target);
    report.target_synced = true;
  }

  // 8. epsilon is a pure function of env steps
  ++iterations_;
  report.env_steps = env_steps_;
  report.epsilon = epsilon();

  const std::size_t episodes = finished_returns_.front().size();
  for (std::size_t e = 0; e < episodes; ++e) {
    double team = 0.0;
    for (std::size_t i = 0; i < n; ++i) team += finished_returns_[i][e];
    report.completed_team_returns.push_back(team);
  }
  for (std::size_t i = 0; i < n; ++i) {
    report.agents[i].completed_returns = std::move(finished_returns_[i]);
    finished_returns_[i].clear();
  }
  return report;
}

EvaluationResult Trainer::evaluate(MarkovGame& env, std::size_t episodes, std::uint64_t seed) const {
  return evaluate_policy(
      env, [this](AgentId agent, const Observation& obs) { return greedy_action(agent, obs); }, episodes, seed);
}

}  // namespace super
