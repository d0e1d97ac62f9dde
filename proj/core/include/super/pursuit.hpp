#pragma once

// Pursuit gridworld: pursuers (the learning agents) chase randomly walking
// evaders. An evader with at least n_catch pursuers on cardinally adjacent
// cells is captured.
//
// Step order: pursuers move simultaneously, captures are resolved, surviving
// evaders move simultaneously, then tag and urgency rewards are paid.
// A move is a no-op when its target is outside the grid, an obstacle, a cell
// occupied at the start of the move phase, or a cell targeted by another
// mover of the same kind. Pursuers and evaders never share a cell.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "super/types.hpp"

namespace super {

enum class ObstacleLayout { CenterBlock, None };

/// Action indices shared by pursuers and evaders.
enum class Move : int { Up = 0, Down = 1, Left = 2, Right = 3, Stay = 4 };
inline constexpr std::size_t kMoveCount = 5;

/// Observation channels, innermost in the flattened layout.
inline constexpr std::size_t kObstacleChannel = 0;
inline constexpr std::size_t kPursuerChannel = 1;
inline constexpr std::size_t kEvaderChannel = 2;
inline constexpr std::size_t kChannelCount = 3;

struct PursuitConfig {
  int grid_width = 16;
  int grid_height = 16;
  std::size_t num_pursuers = 8;
  std::size_t num_evaders = 30;
  std::size_t n_catch = 2;
  int obs_range = 7;
  double catch_reward = 5.0;
  double tag_reward = 0.01;
  double urgency_reward = -0.1;
  std::size_t max_cycles = 500;
  ObstacleLayout obstacle_layout = ObstacleLayout::CenterBlock;
  /// Kept for parity with the reference table; capture uses the adjacency rule.
  bool surrounded = true;

  void validate() const;
  std::size_t observation_dim() const {
    return static_cast<std::size_t>(obs_range * obs_range) * kChannelCount;
  }
};

/// 7x7 open grid, 2 pursuers, 2 evaders, obs_range 5, 100-step episodes.
PursuitConfig mini_pursuit_config();

struct Cell {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

inline int manhattan(Cell a, Cell b) {
  return (a.x > b.x ? a.x - b.x : b.x - a.x) + (a.y > b.y ? a.y - b.y : b.y - a.y);
}

struct Evader {
  Cell pos;
  bool alive = true;
  friend bool operator==(const Evader&, const Evader&) = default;
};

struct GridState {
  int width = 0;
  int height = 0;
  std::vector<Cell> pursuers;
  std::vector<Evader> evaders;
  /// Row-major, 1 = obstacle.
  std::vector<std::uint8_t> obstacles;
  std::size_t step_counter = 0;

  bool inside(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  bool blocked(Cell c) const {
    return !inside(c) || obstacles[static_cast<std::size_t>(c.y * width + c.x)] != 0;
  }
  std::size_t alive_evaders() const;

  friend bool operator==(const GridState&, const GridState&) = default;
};

std::vector<std::uint8_t> build_obstacles(const PursuitConfig& config);

struct ResetResult {
  GridState state;
  std::vector<Observation> observations;
};

/// Places every entity on a distinct free cell drawn from `rng`.
GridState reset_state(const PursuitConfig& config, std::mt19937_64& rng);
ResetResult reset(const PursuitConfig& config, std::uint64_t rng_seed);

struct PursuitStep {
  GridState state;
  std::vector<double> rewards;
  std::vector<Observation> observations;
  bool done = false;
};

/// Evader moves are drawn uniformly from `rng`, one per living evader in index order.
PursuitStep step(const PursuitConfig& config, const GridState& state,
                 std::span<const int> joint_actions, std::mt19937_64& rng);
/// Same transition with explicit evader moves (one per evader; ignored for
/// captured ones).
PursuitStep step_with_evader_moves(const PursuitConfig& config, const GridState& state,
                                   std::span<const int> joint_actions,
                                   std::span<const int> evader_moves);

/// obs_range x obs_range window around `agent`, flattened as
/// ((row * obs_range) + col) * 3 + channel. Out-of-grid cells are marked in the
/// obstacle channel; the agent sees itself in the pursuer channel at the center.
Observation observe(const PursuitConfig& config, const GridState& state, std::size_t agent);

class PursuitGame final : public MarkovGame {
 public:
  PursuitGame(PursuitConfig config, std::uint64_t seed);

  const MarkovGameSpec& spec() const override { return spec_; }
  std::vector<Observation> reset() override;
  StepOutcome step(std::span<const int> joint_actions) override;
  void reseed(std::uint64_t seed) override { rng_.seed(seed); }
  std::unique_ptr<MarkovGame> clone() const override;
  std::string save_state() const override;
  void restore_state(const std::string& snapshot) override;

  const PursuitConfig& config() const { return config_; }
  const GridState& state() const { return state_; }

  /// Every subsequent step is appended to `os` as one JSON line. Pass nullptr to stop.
  void set_trace(std::ostream* os) { trace_ = os; }

 private:
  PursuitConfig config_;
  MarkovGameSpec spec_;
  GridState state_;
  std::mt19937_64 rng_;
  std::ostream* trace_ = nullptr;
};

/// One line of the episode trace:
/// {"step":n,"pursuers":[[x,y],...],"evaders":[[x,y,alive],...],"actions":[...],"rewards":[...]}
std::string trace_line(const GridState& state, std::span<const int> actions,
                       std::span<const double> rewards);

}  // namespace super
