#include "super/pursuit.hpp"

#include <algorithm>
#include <array>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "super/errors.hpp"

namespace super {
namespace {

constexpr std::array<Cell, kMoveCount> kDelta{{{0, -1}, {0, 1}, {-1, 0}, {1, 0}, {0, 0}}};

Cell apply_move(Cell c, int move) {
  const Cell d = kDelta[static_cast<std::size_t>(move)];
  return {c.x + d.x, c.y + d.y};
}

void check_actions(std::span<const int> actions, std::size_t expected, const char* who) {
  if (actions.size() != expected) {
    throw ContractViolation(std::string("expected one action per ") + who + ", got " +
                            std::to_string(actions.size()) + " for " + std::to_string(expected));
  }
  for (int a : actions) {
    if (a < 0 || a >= static_cast<int>(kMoveCount)) {
      throw ContractViolation("action index " + std::to_string(a) + " out of range");
    }
  }
}

// Resolves simultaneous moves for one kind of entity. `occupied` marks every
// cell a mover may not enter (start positions of its own kind plus the other
// kind). Contested targets leave all contenders in place.
std::vector<Cell> resolve_moves(const GridState& state, const std::vector<Cell>& from,
                                const std::vector<bool>& active, std::span<const int> moves,
                                const std::vector<std::uint8_t>& occupied) {
  const auto index = [&](Cell c) { return static_cast<std::size_t>(c.y * state.width + c.x); };
  std::vector<Cell> target(from.size());
  std::vector<int> claims(occupied.size(), 0);
  for (std::size_t i = 0; i < from.size(); ++i) {
    target[i] = from[i];
    if (!active[i] || moves[i] == static_cast<int>(Move::Stay)) continue;
    const Cell t = apply_move(from[i], moves[i]);
    if (state.blocked(t) || occupied[index(t)] != 0) continue;
    target[i] = t;
    ++claims[index(t)];
  }
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (target[i] != from[i] && claims[index(target[i])] > 1) target[i] = from[i];
  }
  return target;
}

std::vector<Observation> observe_all(const PursuitConfig& config, const GridState& state) {
  std::vector<Observation> obs;
  obs.reserve(state.pursuers.size());
  for (std::size_t i = 0; i < state.pursuers.size(); ++i) obs.push_back(observe(config, state, i));
  return obs;
}

}  // namespace

void PursuitConfig::validate() const {
  if (grid_width < 1 || grid_height < 1) throw ConfigError("environment.grid_width, environment.grid_height: must be positive");
  if (num_pursuers < 1) throw ConfigError("environment.num_pursuers: must be positive");
  if (num_evaders < 1) throw ConfigError("environment.num_evaders: must be positive");
  if (n_catch < 1) throw ConfigError("environment.n_catch: must be positive");
  if (num_pursuers < n_catch) throw ConfigError("environment.n_catch: exceeds num_pursuers");
  if (obs_range < 1 || obs_range % 2 == 0) throw ConfigError("environment.obs_range: must be odd and positive");
  if (max_cycles < 1) throw ConfigError("environment.max_cycles: must be positive");
}

PursuitConfig mini_pursuit_config() {
  PursuitConfig c;
  c.grid_width = 7;
  c.grid_height = 7;
  c.num_pursuers = 2;
  c.num_evaders = 2;
  c.n_catch = 2;
  c.obs_range = 5;
  c.max_cycles = 100;
  c.obstacle_layout = ObstacleLayout::None;
  return c;
}

std::size_t GridState::alive_evaders() const {
  return static_cast<std::size_t>(
      std::count_if(evaders.begin(), evaders.end(), [](const Evader& e) { return e.alive; }));
}

std::vector<std::uint8_t> build_obstacles(const PursuitConfig& config) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(config.grid_width * config.grid_height), 0);
  if (config.obstacle_layout == ObstacleLayout::CenterBlock) {
    const int x0 = config.grid_width / 2 - config.grid_width / 8;
    const int x1 = config.grid_width / 2 + config.grid_width / 8;
    const int y0 = config.grid_height / 2 - config.grid_height / 8;
    const int y1 = config.grid_height / 2 + config.grid_height / 8;
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) mask[static_cast<std::size_t>(y * config.grid_width + x)] = 1;
    }
  }
  return mask;
}

GridState reset_state(const PursuitConfig& config, std::mt19937_64& rng) {
  config.validate();
  GridState state;
  state.width = config.grid_width;
  state.height = config.grid_height;
  state.obstacles = build_obstacles(config);

  std::vector<Cell> free;
  for (int y = 0; y < state.height; ++y) {
    for (int x = 0; x < state.width; ++x) {
      if (!state.blocked({x, y})) free.push_back({x, y});
    }
  }
  const std::size_t needed = config.num_pursuers + config.num_evaders;
  if (free.size() < needed) {
    throw ConfigError("environment: " + std::to_string(free.size()) + " free cells cannot hold " +
                      std::to_string(needed) + " entities");
  }
  // Partial Fisher-Yates: the first `needed` cells become a uniform random draw.
  for (std::size_t i = 0; i < needed; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, free.size() - 1);
    std::swap(free[i], free[pick(rng)]);
  }
  state.pursuers.assign(free.begin(), free.begin() + static_cast<std::ptrdiff_t>(config.num_pursuers));
  for (std::size_t i = config.num_pursuers; i < needed; ++i) state.evaders.push_back({free[i], true});
  return state;
}

ResetResult reset(const PursuitConfig& config, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  ResetResult out;
  out.state = reset_state(config, rng);
  out.observations = observe_all(config, out.state);
  return out;
}

PursuitStep step(const PursuitConfig& config, const GridState& state,
                 std::span<const int> joint_actions, std::mt19937_64& rng) {
  check_actions(joint_actions, state.pursuers.size(), "pursuer");
  std::uniform_int_distribution<int> move(0, static_cast<int>(kMoveCount) - 1);
  std::vector<int> evader_moves(state.evaders.size(), static_cast<int>(Move::Stay));
  for (std::size_t e = 0; e < state.evaders.size(); ++e) {
    if (state.evaders[e].alive) evader_moves[e] = move(rng);
  }
  return step_with_evader_moves(config, state, joint_actions, evader_moves);
}

PursuitStep step_with_evader_moves(const PursuitConfig& config, const GridState& state,
                                   std::span<const int> joint_actions,
                                   std::span<const int> evader_moves) {
  check_actions(joint_actions, state.pursuers.size(), "pursuer");
  check_actions(evader_moves, state.evaders.size(), "evader");

  PursuitStep out;
  out.state = state;
  GridState& next = out.state;
  const std::size_t cells = static_cast<std::size_t>(state.width * state.height);
  const auto index = [&](Cell c) { return static_cast<std::size_t>(c.y * state.width + c.x); };

  // Pursuers move.
  {
    std::vector<std::uint8_t> occupied(cells, 0);
    for (Cell p : state.pursuers) occupied[index(p)] = 1;
    for (const Evader& e : state.evaders) {
      if (e.alive) occupied[index(e.pos)] = 1;
    }
    const std::vector<bool> active(state.pursuers.size(), true);
    next.pursuers = resolve_moves(state, state.pursuers, active, joint_actions, occupied);
  }

  std::vector<double> rewards(next.pursuers.size(), config.urgency_reward);

  // Captures, against the pursuers' new positions.
  for (Evader& e : next.evaders) {
    if (!e.alive) continue;
    std::size_t adjacent = 0;
    for (Cell p : next.pursuers) adjacent += manhattan(p, e.pos) == 1 ? 1 : 0;
    if (adjacent < config.n_catch) continue;
    e.alive = false;
    for (std::size_t i = 0; i < next.pursuers.size(); ++i) {
      if (manhattan(next.pursuers[i], e.pos) == 1) rewards[i] += config.catch_reward;
    }
  }

  // Surviving evaders move.
  {
    std::vector<std::uint8_t> occupied(cells, 0);
    for (Cell p : next.pursuers) occupied[index(p)] = 1;
    std::vector<Cell> from;
    std::vector<bool> active;
    for (const Evader& e : next.evaders) {
      from.push_back(e.pos);
      active.push_back(e.alive);
      if (e.alive) occupied[index(e.pos)] = 1;
    }
    const auto moved = resolve_moves(next, from, active, evader_moves, occupied);
    for (std::size_t e = 0; e < next.evaders.size(); ++e) next.evaders[e].pos = moved[e];
  }

  // Tag reward per (pursuer, surviving evader) adjacency.
  for (std::size_t i = 0; i < next.pursuers.size(); ++i) {
    for (const Evader& e : next.evaders) {
      if (e.alive && manhattan(next.pursuers[i], e.pos) == 1) rewards[i] += config.tag_reward;
    }
  }

  ++next.step_counter;
  out.rewards = std::move(rewards);
  out.done = next.alive_evaders() == 0 || next.step_counter >= config.max_cycles;
  out.observations = observe_all(config, next);
  return out;
}

Observation observe(const PursuitConfig& config, const GridState& state, std::size_t agent) {
  if (agent >= state.pursuers.size()) throw ContractViolation("observe: unknown agent");
  const int range = config.obs_range;
  const int half = range / 2;
  const Cell self = state.pursuers[agent];
  Observation obs(config.observation_dim(), 0.0F);
  const auto at = [&](int row, int col, std::size_t channel) -> float& {
    return obs[static_cast<std::size_t>(row * range + col) * kChannelCount + channel];
  };
  for (int row = 0; row < range; ++row) {
    for (int col = 0; col < range; ++col) {
      if (state.blocked({self.x + col - half, self.y + row - half})) at(row, col, kObstacleChannel) = 1.0F;
    }
  }
  const auto window = [&](Cell c, std::size_t channel) {
    const int col = c.x - self.x + half;
    const int row = c.y - self.y + half;
    if (row >= 0 && row < range && col >= 0 && col < range) at(row, col, channel) += 1.0F;
  };
  for (Cell p : state.pursuers) window(p, kPursuerChannel);
  for (const Evader& e : state.evaders) {
    if (e.alive) window(e.pos, kEvaderChannel);
  }
  return obs;
}

PursuitGame::PursuitGame(PursuitConfig config, std::uint64_t seed)
    : config_(std::move(config)), rng_(seed) {
  config_.validate();
  spec_.agent_count = config_.num_pursuers;
  spec_.observation_dim = config_.observation_dim();
  spec_.action_count = kMoveCount;
  spec_.max_episode_steps = config_.max_cycles;
  state_ = reset_state(config_, rng_);
}

std::vector<Observation> PursuitGame::reset() {
  state_ = reset_state(config_, rng_);
  return observe_all(config_, state_);
}

StepOutcome PursuitGame::step(std::span<const int> joint_actions) {
  auto result = super::step(config_, state_, joint_actions, rng_);
  state_ = std::move(result.state);
  if (trace_ != nullptr) *trace_ << trace_line(state_, joint_actions, result.rewards) << '\n';
  return {std::move(result.observations), std::move(result.rewards), result.done};
}

std::unique_ptr<MarkovGame> PursuitGame::clone() const {
  auto copy = std::make_unique<PursuitGame>(*this);
  copy->trace_ = nullptr;
  return copy;
}

std::string PursuitGame::save_state() const {
  nlohmann::json j;
  j["step"] = state_.step_counter;
  for (Cell p : state_.pursuers) j["pursuers"].push_back({p.x, p.y});
  for (const Evader& e : state_.evaders) j["evaders"].push_back({e.pos.x, e.pos.y, e.alive ? 1 : 0});
  std::ostringstream rng;
  rng << rng_;
  j["rng"] = rng.str();
  return j.dump();
}

void PursuitGame::restore_state(const std::string& snapshot) {
  try {
    const auto j = nlohmann::json::parse(snapshot);
    GridState s;
    s.width = config_.grid_width;
    s.height = config_.grid_height;
    s.obstacles = build_obstacles(config_);
    s.step_counter = j.at("step").get<std::size_t>();
    for (const auto& p : j.at("pursuers")) s.pursuers.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
    for (const auto& e : j.at("evaders")) {
      s.evaders.push_back({{e.at(0).get<int>(), e.at(1).get<int>()}, e.at(2).get<int>() != 0});
    }
    if (s.pursuers.size() != config_.num_pursuers || s.evaders.size() != config_.num_evaders) {
      throw FormatError("pursuit snapshot does not match configuration");
    }
    std::istringstream rng(j.at("rng").get<std::string>());
    rng >> rng_;
    if (!rng) throw FormatError("pursuit snapshot has a corrupt rng state");
    state_ = std::move(s);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("pursuit snapshot: ") + e.what());
  }
}

std::string trace_line(const GridState& state, std::span<const int> actions,
                       std::span<const double> rewards) {
  nlohmann::json j;
  j["step"] = state.step_counter;
  j["pursuers"] = nlohmann::json::array();
  for (Cell p : state.pursuers) j["pursuers"].push_back({p.x, p.y});
  j["evaders"] = nlohmann::json::array();
  for (const Evader& e : state.evaders) j["evaders"].push_back({e.pos.x, e.pos.y, e.alive ? 1 : 0});
  j["actions"] = std::vector<int>(actions.begin(), actions.end());
  j["rewards"] = std::vector<double>(rewards.begin(), rewards.end());
  return j.dump();
}

}  // namespace super
