#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <random>

#include "doctest.h"
#include "super/errors.hpp"
#include "super/relay_channel.hpp"
#include "super/selection.hpp"
#include "super/window_stats.hpp"
#include "support/test_support.hpp"

using namespace super;
using super::testing::make_experience;

namespace {

WindowStats window_of(std::initializer_list<double> values, std::size_t k = 0) {
  WindowStats w(k == 0 ? values.size() : k);
  for (double v : values) w.push(v);
  return w;
}

SelectionConfig strategy_config(SelectionStrategy s, double beta, std::size_t k = 1500) {
  SelectionConfig c;
  c.strategy = s;
  c.bandwidth_beta = beta;
  c.window_size_k = k;
  return c;
}

// Fraction shared after warm-up when streaming `draw()` through a selector.
template <typename Draw>
double shared_fraction(SelectionConfig cfg, Draw draw, std::size_t n, std::uint64_t seed) {
  ExperienceSelector sel(cfg);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < cfg.window_size_k; ++i) sel.decide(draw(rng), rng);
  std::size_t shared = 0;
  for (std::size_t i = 0; i < n; ++i) shared += sel.decide(draw(rng), rng) ? 1 : 0;
  return static_cast<double>(shared) / static_cast<double>(n);
}

}  // namespace

TEST_CASE("window statistics") {
  auto w = window_of({1.0, 2.0, 3.0, 4.0}, 3);
  CHECK(w.count() == 3);
  CHECK(w.sum() == doctest::Approx(9.0));
  CHECK(w.mean() == doctest::Approx(3.0));
  CHECK(w.variance() == doctest::Approx(2.0 / 3.0));
  CHECK(w.kth_largest(1) == 4.0);
  CHECK(w.kth_largest(3) == 2.0);
  CHECK_THROWS_AS(w.kth_largest(4), ContractViolation);

  // many wraps keep the running sums exact enough
  WindowStats big(100);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1e3);
  for (int i = 0; i < 100000; ++i) big.push(u(rng));
  double s = 0.0, s2 = 0.0;
  for (double v : big.values()) {
    s += v;
    s2 += v * v;
  }
  CHECK(big.sum() == doctest::Approx(s).epsilon(1e-12));
  CHECK(big.sum_squares() == doctest::Approx(s2).epsilon(1e-12));

  const auto copy = WindowStats::restore(100, big.values(), big.cursor(), big.sum(), big.sum_squares());
  CHECK(copy.mean() == big.mean());
  CHECK(copy.kth_largest(7) == big.kth_largest(7));
}

TEST_CASE("quantile rule on a ten-element window") {
  const auto w = window_of({0.5, 0.1, 0.9, 0.3, 1.0, 0.7, 0.2, 0.8, 0.4, 0.6});
  // beta 0.3: the third largest (0.8) is the bar
  CHECK(should_share_quantile(w, 0.8, 0.3));
  CHECK(should_share_quantile(w, 0.95, 0.3));
  CHECK_FALSE(should_share_quantile(w, 0.79, 0.3));
  // beta 0.25 rounds the rank up to 3 as well
  CHECK(should_share_quantile(w, 0.8, 0.25));
  CHECK_FALSE(should_share_quantile(w, 0.8, 0.1));
  CHECK(should_share_quantile(w, 0.1, 1.0));
  CHECK_FALSE(should_share_quantile(w, 5.0, 0.0));
  CHECK_FALSE(should_share_quantile(WindowStats(5), 5.0, 0.5));
}

TEST_CASE("normal upper quantile approximation") {
  const boost::math::normal standard;
  for (double p = 0.001; p < 1.0; p += 0.001) {
    const double exact = boost::math::quantile(boost::math::complement(standard, p));
    REQUIRE(std::abs(normal_upper_quantile(p) - exact) < 4.5e-4);
  }
  CHECK(std::isinf(normal_upper_quantile(0.0)));
  CHECK(normal_upper_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("gaussian thresholds") {
  // mean 1, population variance 0.25
  const auto w = window_of({0.5, 1.5, 0.5, 1.5});
  CHECK(gaussian_threshold(w, 0.1587, true) == doctest::Approx(1.25).epsilon(1e-3));
  CHECK(gaussian_threshold(w, 0.1587, false) == doctest::Approx(1.5).epsilon(1e-3));
  CHECK(gaussian_threshold(w, 0.5, true) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(should_share_gaussian(w, 1.26, 0.1587, true));
  CHECK_FALSE(should_share_gaussian(w, 1.24, 0.1587, true));

  // a point-mass window shares its own value
  const auto flat = window_of({0.7, 0.7, 0.7, 0.7, 0.7, 0.7});
  CHECK(should_share_gaussian(flat, 0.7, 0.1, true));
  CHECK_FALSE(should_share_gaussian(flat, 0.69, 0.1, true));
  CHECK(should_share_gaussian(flat, 0.0, 1.0, true));
  CHECK_FALSE(should_share_gaussian(flat, 100.0, 0.0, true));
}

TEST_CASE("stochastic share probability") {
  const auto w = window_of({1.0, 2.0, 3.0});
  // alpha 1, tiny epsilon: beta * 3 * td / 6
  CHECK(stochastic_share_probability(w, 2.0, 0.2, 1.0, 1e-12) == doctest::Approx(0.2));
  CHECK(stochastic_share_probability(w, 1.0, 0.2, 1.0, 1e-12) == doctest::Approx(0.1));
  CHECK(stochastic_share_probability(w, 50.0, 0.2, 1.0, 1e-12) == 1.0);
  // alpha 0 ignores the td entirely
  CHECK(stochastic_share_probability(w, 50.0, 0.3, 0.0, 1e-6) == doctest::Approx(0.3));

  std::mt19937_64 rng(3);
  int hits = 0;
  for (int i = 0; i < 40000; ++i) hits += should_share_stochastic(w, 2.0, 0.2, 1.0, 1e-12, rng);
  CHECK(hits / 40000.0 == doctest::Approx(0.2).epsilon(0.05));
}

TEST_CASE("selectors hit the target bandwidth on stationary streams") {
  auto expo = [](std::mt19937_64& r) { return std::exponential_distribution<double>(1.0)(r); };
  auto shifted_normal = [](std::mt19937_64& r) { return std::abs(std::normal_distribution<double>(10.0, 1.0)(r)); };
  for (double beta : {0.05, 0.1, 0.3}) {
    CAPTURE(beta);
    CHECK(shared_fraction(strategy_config(SelectionStrategy::Quantile, beta), expo, 60000, 1) ==
          doctest::Approx(beta).epsilon(0.1));
    CHECK(shared_fraction(strategy_config(SelectionStrategy::Stochastic, beta), expo, 60000, 2) ==
          doctest::Approx(beta).epsilon(0.1));
    CHECK(shared_fraction(strategy_config(SelectionStrategy::UniformRandom, beta), expo, 60000, 3) ==
          doctest::Approx(beta).epsilon(0.1));
    auto gauss = strategy_config(SelectionStrategy::Gaussian, beta);
    gauss.gaussian_use_variance = false;
    CHECK(shared_fraction(gauss, shifted_normal, 60000, 4) == doctest::Approx(beta).epsilon(0.1));
  }
  CHECK(shared_fraction(strategy_config(SelectionStrategy::ShareAll, 0.1), expo, 1000, 5) == 1.0);
  CHECK(shared_fraction(strategy_config(SelectionStrategy::None, 0.9), expo, 1000, 6) == 0.0);
}

TEST_CASE("td-driven selectors wait for the window to fill") {
  for (auto s : {SelectionStrategy::Quantile, SelectionStrategy::Gaussian, SelectionStrategy::Stochastic}) {
    ExperienceSelector sel(strategy_config(s, 0.5));
    std::mt19937_64 rng(1);
    for (int i = 0; i < 30; ++i) CHECK_FALSE(sel.decide(1e6, rng));
    CHECK(sel.window().count() == 30);
  }
  ExperienceSelector all(strategy_config(SelectionStrategy::ShareAll, 0.5));
  std::mt19937_64 rng(1);
  CHECK(all.decide(0.0, rng));
  CHECK_THROWS_AS(all.decide(-1.0, rng), ContractViolation);
  CHECK_THROWS_AS(ExperienceSelector(strategy_config(SelectionStrategy::Quantile, 1.5)), ConfigError);
}

TEST_CASE("relay broadcasts to every other agent in sender order") {
  const std::size_t n = 4, dim = 3;
  RelayChannel channel(n, dim);
  std::mt19937_64 rng(0);
  std::vector<ExperienceSelector> selectors;
  for (std::size_t i = 0; i < n; ++i) selectors.emplace_back(strategy_config(SelectionStrategy::ShareAll, 0.1));

  // senders 2, 0, 1 in that order; agent 3 shares nothing
  const std::vector<AgentId> order{2, 0, 1};
  for (AgentId a : order) {
    std::vector<Experience> batch;
    std::vector<double> td;
    for (int j = 0; j < 3; ++j) {
      batch.push_back(make_experience(dim, j, static_cast<float>(10 * a + j), false));
      td.push_back(0.5 * j + static_cast<double>(a));
    }
    CHECK(select_and_relay(a, batch, td, selectors[a], channel, rng) == 3);
  }
  CHECK(channel.total_enqueued() == (n - 1) * 9);

  for (AgentId r = 0; r < n; ++r) {
    const auto got = channel.drain(r);
    std::vector<float> rewards;
    for (const auto& e : got) {
      CHECK(e.origin_agent != r);
      REQUIRE(e.td_at_share.has_value());
      CHECK(*e.td_at_share == doctest::Approx(0.5 * e.action + e.origin_agent));
      rewards.push_back(e.reward);
    }
    std::vector<float> expected;
    for (AgentId s = 0; s < 3; ++s) {
      if (s == r) continue;
      for (int j = 0; j < 3; ++j) expected.push_back(static_cast<float>(10 * s + j));
    }
    CHECK(rewards == expected);
    CHECK(channel.drain(r).empty());
    CHECK(channel.pending(r) == 0);
  }

  for (AgentId a : order) {
    const auto c = channel.counters(a);
    CHECK(c.offered == 3);
    CHECK(c.shared == 3);
    CHECK(c.actual_bandwidth() == 1.0);
    CHECK(c.bytes_shared > 0);
  }
  CHECK(channel.counters(3).actual_bandwidth() == 0.0);
  CHECK_THROWS_AS(channel.drain(n), ContractViolation);
}

TEST_CASE("the no-sharing strategy records nothing but still tracks tds") {
  RelayChannel channel(2, 2);
  ExperienceSelector sel(strategy_config(SelectionStrategy::None, 0.5));
  std::mt19937_64 rng(0);
  std::vector<Experience> batch{make_experience(2, 0, 1.0F, false), make_experience(2, 1, 2.0F, true)};
  const std::vector<double> td{1.0, 2.0};
  CHECK(select_and_relay(0, batch, td, sel, channel, rng) == 0);
  CHECK(channel.counters(0).offered == 0);
  CHECK(sel.window().count() == 2);
  CHECK(channel.total_enqueued() == 0);
}

TEST_CASE("relayed experiences survive the wire format intact") {
  RelayChannel channel(2, 4);
  Experience e = make_experience(4, 3, -0.25F, true, 0.5F, 0.75F);
  e.obs[2] = -7.0F;
  e.origin_agent = 1;
  e.td_at_share = 0.125F;
  channel.broadcast(1, e);
  const auto got = channel.drain(0);
  REQUIRE(got.size() == 1);
  CHECK(got[0] == e);
}
