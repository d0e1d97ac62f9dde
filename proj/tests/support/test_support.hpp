#pragma once

#include <algorithm>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "super/config.hpp"
#include "super/errors.hpp"
#include "super/pursuit.hpp"
#include "super/qnetwork.hpp"
#include "super/types.hpp"

namespace super::testing {

// Network whose Q-values are the constant `q` for every input: one hidden
// unit with zero weights, all signal in the output bias.
template <typename Scalar>
BasicQNetwork<Scalar> constant_net(std::size_t input_dim, const std::vector<double>& q) {
  NetworkShape shape{input_dim, q.size(), {1}, false};
  BasicQNetwork<Scalar> net(shape, 1);
  auto p = net.parameters();
  std::fill(p.begin(), p.end(), Scalar{0});
  const std::size_t out_bias = input_dim + 1 + q.size();
  for (std::size_t a = 0; a < q.size(); ++a) p[out_bias + a] = static_cast<Scalar>(q[a]);
  return net;
}

inline Experience make_experience(std::size_t dim, int action, float reward, bool done, float fill = 0.0F,
                                  float next_fill = 0.0F) {
  Experience e;
  e.obs.assign(dim, fill);
  e.next_obs.assign(dim, next_fill);
  e.action = action;
  e.reward = reward;
  e.done = done;
  return e;
}

// Game that pays nothing and ends after a fixed number of steps.
class ZeroRewardGame final : public MarkovGame {
 public:
  ZeroRewardGame(std::size_t agents, std::size_t dim, std::size_t actions, std::size_t length) {
    spec_.agent_count = agents;
    spec_.observation_dim = dim;
    spec_.action_count = actions;
    spec_.max_episode_steps = length;
    spec_.gamma = 0.99;
  }
  const MarkovGameSpec& spec() const override { return spec_; }
  std::vector<Observation> reset() override {
    t_ = 0;
    return obs();
  }
  StepOutcome step(std::span<const int> actions) override {
    if (actions.size() != spec_.agent_count) throw ContractViolation("wrong action count");
    ++t_;
    return {obs(), std::vector<double>(spec_.agent_count, 0.0), t_ >= spec_.max_episode_steps};
  }
  void reseed(std::uint64_t) override {}
  std::unique_ptr<MarkovGame> clone() const override { return std::make_unique<ZeroRewardGame>(*this); }
  std::string save_state() const override { return std::to_string(t_); }
  void restore_state(const std::string& s) override { t_ = std::stoul(s); }

 private:
  std::vector<Observation> obs() const {
    std::vector<Observation> o(spec_.agent_count, Observation(spec_.observation_dim, 0.0F));
    for (auto& v : o) v[0] = static_cast<float>(t_);
    return o;
  }
  MarkovGameSpec spec_;
  std::size_t t_ = 0;
};

// Small trainer configuration for fast tests on mini pursuit.
inline TrainerConfig small_trainer_config(std::uint64_t seed = 7) {
  TrainerConfig c;
  c.hidden_layers = {16, 16};
  c.learning_starts = 64;
  c.buffer_capacity = 5000;
  c.target_update_freq = 100;
  c.seed = seed;
  return c;
}

// Builds a state by hand on an open grid.
inline GridState open_state(int w, int h, std::vector<Cell> pursuers, std::vector<Cell> evaders) {
  GridState s;
  s.width = w;
  s.height = h;
  s.pursuers = std::move(pursuers);
  for (auto c : evaders) s.evaders.push_back({c, true});
  s.obstacles.assign(static_cast<std::size_t>(w * h), 0);
  return s;
}

}  // namespace super::testing
