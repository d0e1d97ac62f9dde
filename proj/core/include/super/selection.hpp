#pragma once

#include <cstddef>
#include <random>
#include <span>

#include "super/config.hpp"
#include "super/relay_channel.hpp"
#include "super/types.hpp"
#include "super/window_stats.hpp"

namespace super {

/// c with 1 - Phi(c) = upper_tail, via the Abramowitz-Stegun 26.2.23
/// rational approximation (|error| < 4.5e-4). Infinite at 0 and 1.
double normal_upper_quantile(double upper_tail);

/// Deterministic quantile rule: share iff td is at least the
/// ceil(count * beta)-th largest td in the window. False on an empty window or
/// when beta = 0.
bool should_share_quantile(const WindowStats& window, double td, double beta);

/// mu + c * sigma^2 (use_variance) or mu + c * sigma, with 1 - Phi(c) = beta.
double gaussian_threshold(const WindowStats& window, double beta, bool use_variance);
bool should_share_gaussian(const WindowStats& window, double td, double beta, bool use_variance);

/// min(1, beta * count * p^alpha / sum_k p_k^alpha) with p = td + epsilon and
/// the sum over the window. Scaling by the window count makes the expected
/// shared fraction equal beta while no term truncates.
double stochastic_share_probability(const WindowStats& window, double td, double beta, double alpha,
                                    double epsilon);
bool should_share_stochastic(const WindowStats& window, double td, double beta, double alpha,
                             double epsilon, std::mt19937_64& rng);

/// Per-agent selection state: strategy configuration plus the td window.
class ExperienceSelector {
 public:
  explicit ExperienceSelector(SelectionConfig config);

  /// Decides for one experience, then pushes its td into the window.
  bool decide(double td, std::mt19937_64& rng);

  const SelectionConfig& config() const { return config_; }
  const WindowStats& window() const { return window_; }
  void restore_window(WindowStats window) { window_ = std::move(window); }

 private:
  SelectionConfig config_;
  WindowStats window_;
};

/// Applies the selector to `batch` in order and broadcasts every selected
/// experience (with td_at_share set) to all other agents. Returns the number
/// shared.
std::size_t select_and_relay(AgentId agent, std::span<const Experience> batch, std::span<const double> tds,
                             ExperienceSelector& selector, RelayChannel& channel, std::mt19937_64& rng);

}  // namespace super
