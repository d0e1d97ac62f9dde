#include "super/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "super/errors.hpp"

namespace super {
namespace {

double unit_draw(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace

double normal_upper_quantile(double upper_tail) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (upper_tail <= 0.0) return kInf;
  if (upper_tail >= 1.0) return -kInf;
  const bool lower_half = upper_tail > 0.5;
  const double p = lower_half ? 1.0 - upper_tail : upper_tail;
  const double t = std::sqrt(-2.0 * std::log(p));
  const double num = 2.515517 + t * (0.802853 + t * 0.010328);
  const double den = 1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308));
  const double x = t - num / den;
  return lower_half ? -x : x;
}

bool should_share_quantile(const WindowStats& window, double td, double beta) {
  if (window.empty() || beta <= 0.0) return false;
  const double exact = static_cast<double>(window.count()) * beta;
  // Guard against products like 10 * 0.3 landing a hair above an integer.
  auto rank = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  rank = std::clamp<std::size_t>(rank, 1, window.count());
  return td >= window.kth_largest(rank);
}

double gaussian_threshold(const WindowStats& window, double beta, bool use_variance) {
  const double c = normal_upper_quantile(beta);
  const double var = window.variance();
  const double spread = use_variance ? var : std::sqrt(var);
  // A zero-spread window is a point mass; use the stored value itself so the
  // running-sum mean's rounding cannot exclude it.
  if (spread == 0.0 && std::isfinite(c) && !window.empty()) return window.kth_largest(window.count());
  return window.mean() + c * spread;
}

bool should_share_gaussian(const WindowStats& window, double td, double beta, bool use_variance) {
  if (window.empty() || beta <= 0.0) return false;
  if (beta >= 1.0) return true;
  return td >= gaussian_threshold(window, beta, use_variance);
}

double stochastic_share_probability(const WindowStats& window, double td, double beta, double alpha,
                                    double epsilon) {
  if (window.empty() || beta <= 0.0) return 0.0;
  double denom = 0.0;
  for (double v : window.values()) denom += std::pow(v + epsilon, alpha);
  const double weight = std::pow(td + epsilon, alpha);
  return std::min(1.0, beta * static_cast<double>(window.count()) * weight / denom);
}

bool should_share_stochastic(const WindowStats& window, double td, double beta, double alpha, double epsilon,
                             std::mt19937_64& rng) {
  const double p = stochastic_share_probability(window, td, beta, alpha, epsilon);
  return unit_draw(rng) < p;
}

ExperienceSelector::ExperienceSelector(SelectionConfig config)
    : config_(config), window_(config.window_size_k) {
  config_.validate();
}

bool ExperienceSelector::decide(double td, std::mt19937_64& rng) {
  if (!(td >= 0.0)) throw ContractViolation("selection requires a non-negative td-error");
  const double beta = config_.bandwidth_beta;
  const bool warm = window_.count() >= config_.min_window_fill;
  bool share = false;
  switch (config_.strategy) {
    case SelectionStrategy::None:
      break;
    case SelectionStrategy::ShareAll:
      share = true;
      break;
    case SelectionStrategy::UniformRandom:
      share = unit_draw(rng) < beta;
      break;
    case SelectionStrategy::Quantile:
      share = warm && should_share_quantile(window_, td, beta);
      break;
    case SelectionStrategy::Gaussian:
      share = warm && should_share_gaussian(window_, td, beta, config_.gaussian_use_variance);
      break;
    case SelectionStrategy::Stochastic:
      share = warm && should_share_stochastic(window_, td, beta, config_.stochastic_alpha,
                                              config_.priority_epsilon, rng);
      break;
    default:
      throw ConfigError("unknown selection strategy");
  }
  window_.push(td);
  return share;
}

std::size_t select_and_relay(AgentId agent, std::span<const Experience> batch, std::span<const double> tds,
                             ExperienceSelector& selector, RelayChannel& channel, std::mt19937_64& rng) {
  if (batch.size() != tds.size()) throw ContractViolation("select_and_relay: one td per experience required");
  if (selector.config().strategy == SelectionStrategy::None) {
    for (double td : tds) selector.decide(td, rng);
    return 0;
  }
  channel.record_offered(agent, batch.size());
  std::size_t shared = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!selector.decide(tds[i], rng)) continue;
    Experience exp = batch[i];
    exp.origin_agent = agent;
    exp.td_at_share = static_cast<float>(tds[i]);
    channel.broadcast(agent, exp);
    ++shared;
  }
  return shared;
}

}  // namespace super
