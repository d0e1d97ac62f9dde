#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace super {

using AgentId = std::uint32_t;
using Observation = std::vector<float>;

/// One transition seen by one agent. Observations are stored flattened; the
/// environment declares the layout.
struct Experience {
  Observation obs;
  int action = 0;
  float reward = 0.0F;
  Observation next_obs;
  bool done = false;
  AgentId origin_agent = 0;
  /// Absolute td-error computed by the sender when it relayed this experience.
  std::optional<float> td_at_share;

  friend bool operator==(const Experience&, const Experience&) = default;
};

/// Shape of an anonymous Markov game: every agent has the same observation
/// and action spaces.
struct MarkovGameSpec {
  std::size_t agent_count = 1;
  std::size_t observation_dim = 1;
  std::size_t action_count = 1;
  std::size_t max_episode_steps = 1;
  double gamma = 0.99;

  void validate() const;
};

/// Throws ContractViolation unless `exp` fits `spec`.
void validate_experience(const Experience& exp, const MarkovGameSpec& spec);

/// Absolute temporal-difference error. Always >= 0.
class TdError {
 public:
  explicit TdError(double value);

  double value() const noexcept { return value_; }
  explicit operator double() const noexcept { return value_; }

  friend auto operator<=>(const TdError&, const TdError&) = default;

 private:
  double value_;
};

struct StepOutcome {
  std::vector<Observation> observations;
  std::vector<double> rewards;
  bool done = false;
};

/// Multi-agent environment driven with joint actions.
class MarkovGame {
 public:
  virtual ~MarkovGame() = default;

  virtual const MarkovGameSpec& spec() const = 0;
  /// Starts a new episode from the game's own random stream.
  virtual std::vector<Observation> reset() = 0;
  virtual StepOutcome step(std::span<const int> joint_actions) = 0;
  /// Replaces the game's random stream. The next reset() starts from it.
  virtual void reseed(std::uint64_t seed) = 0;
  virtual std::unique_ptr<MarkovGame> clone() const = 0;

  /// Opaque text snapshot of the full game state (including its RNG) for
  /// exact resume.
  virtual std::string save_state() const = 0;
  virtual void restore_state(const std::string& snapshot) = 0;
};

}  // namespace super
