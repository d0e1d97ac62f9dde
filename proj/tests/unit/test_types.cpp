#include <cmath>
#include <sstream>

#include "doctest.h"
#include "super/config.hpp"
#include "super/errors.hpp"
#include "super/experience_io.hpp"
#include "super/experiment_config.hpp"
#include "super/td_error.hpp"
#include "support/test_support.hpp"

using namespace super;
using super::testing::constant_net;
using super::testing::make_experience;

TEST_CASE("game spec and experience validation") {
  MarkovGameSpec spec{2, 3, 5, 10, 0.9};
  CHECK_NOTHROW(spec.validate());
  MarkovGameSpec bad = spec;
  bad.gamma = 1.0;
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
  bad = spec;
  bad.agent_count = 0;
  CHECK_THROWS_AS(bad.validate(), ContractViolation);

  auto e = make_experience(3, 4, 1.0F, false);
  CHECK_NOTHROW(validate_experience(e, spec));
  e.action = 5;
  CHECK_THROWS_AS(validate_experience(e, spec), ContractViolation);
  e.action = 0;
  e.next_obs.pop_back();
  CHECK_THROWS_AS(validate_experience(e, spec), ContractViolation);
  e = make_experience(3, 0, 1.0F, false);
  e.td_at_share = -0.5F;
  CHECK_THROWS_AS(validate_experience(e, spec), ContractViolation);
}

TEST_CASE("td error value is non-negative and finite") {
  CHECK(TdError(0.0).value() == 0.0);
  CHECK(TdError(2.5).value() == 2.5);
  CHECK_THROWS_AS(TdError(-1e-12), ContractViolation);
  CHECK_THROWS_AS(TdError(std::nan("")), ContractViolation);
}

TEST_CASE("experience records round-trip") {
  const std::size_t dim = 5;
  CHECK(experience_record_size(dim) == 8 * dim + 18);

  auto a = make_experience(dim, 3, -0.25F, true, 0.5F, 1.5F);
  a.origin_agent = 7;
  a.td_at_share = 2.25F;
  auto b = make_experience(dim, 1, 4.0F, false, -1.0F, 0.0F);

  std::vector<std::byte> rec;
  encode_experience(a, dim, rec);
  CHECK(rec.size() == experience_record_size(dim));
  CHECK(decode_experience(rec, dim) == a);

  std::stringstream ss;
  std::vector<Experience> both{a, b};
  write_experiences(ss, dim, both);
  std::size_t read_dim = 0;
  auto back = read_experiences(ss, &read_dim);
  CHECK(read_dim == dim);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == a);
  CHECK(back[1] == b);
  CHECK_FALSE(back[1].td_at_share.has_value());
}

TEST_CASE("experience stream rejects corrupt input") {
  std::stringstream bad_magic("XXXX\x01\x00\x00\x00\x05\x00\x00\x00");
  CHECK_THROWS_AS(read_experiences(bad_magic), FormatError);

  std::stringstream ss;
  std::vector<Experience> one{make_experience(4, 0, 1.0F, false)};
  write_experiences(ss, 4, one);
  std::string bytes = ss.str();
  bytes.resize(bytes.size() - 3);
  std::stringstream truncated(bytes);
  CHECK_THROWS_AS(read_experiences(truncated), FormatError);

  std::vector<std::byte> rec;
  CHECK_THROWS_AS(encode_experience(make_experience(3, 0, 0.0F, false), 4, rec), ContractViolation);
}

TEST_CASE("trainer config invariants name the offending field") {
  TrainerConfig c;
  CHECK_NOTHROW(c.validate());
  auto expect_field = [](TrainerConfig bad, const std::string& field) {
    try {
      bad.validate();
      FAIL("expected ConfigError for " << field);
    } catch (const ConfigError& e) {
      INFO(std::string(e.what()));
      CHECK(std::string(e.what()).find(field) != std::string::npos);
    }
  };
  TrainerConfig bad = c;
  bad.epsilon_final = 0.5;
  expect_field(bad, "epsilon_final");
  bad = c;
  bad.priority_epsilon = 0.0;
  expect_field(bad, "priority_epsilon");
  bad = c;
  bad.train_batch_size = bad.buffer_capacity + 1;
  expect_field(bad, "train_batch_size");
  bad = c;
  bad.selection.bandwidth_beta = 1.5;
  expect_field(bad, "bandwidth_beta");
  bad = c;
  bad.selection.window_size_k = 0;
  expect_field(bad, "window_size_k");
}

TEST_CASE("exploration and importance schedules are linear then flat") {
  TrainerConfig c;
  // independent evaluation of max(final, initial - t * (initial - final) / steps)
  auto oracle = [&](double t) {
    return std::max(c.epsilon_final,
                    c.epsilon_initial - t * (c.epsilon_initial - c.epsilon_final) /
                                            static_cast<double>(c.epsilon_decay_steps));
  };
  for (std::uint64_t t : {0ULL, 1ULL, 4ULL, 50000ULL, 99999ULL, 100000ULL, 400000ULL}) {
    CHECK(epsilon_at(c, t) == oracle(static_cast<double>(t)));
  }
  CHECK(epsilon_at(c, 0) == doctest::Approx(0.1));
  CHECK(epsilon_at(c, 50000) == doctest::Approx(0.0505));
  CHECK(epsilon_at(c, 10'000'000) == c.epsilon_final);

  CHECK(is_beta_at(c, 0) == doctest::Approx(0.4));
  CHECK(is_beta_at(c, 50000) == doctest::Approx(0.7));
  CHECK(is_beta_at(c, 100000) == doctest::Approx(1.0));
  CHECK(is_beta_at(c, 500000) == doctest::Approx(1.0));
}

TEST_CASE("selection strategy names") {
  CHECK(parse_selection_strategy("quantile") == SelectionStrategy::Quantile);
  CHECK(parse_selection_strategy("gaussian") == SelectionStrategy::Gaussian);
  CHECK(parse_selection_strategy("stochastic") == SelectionStrategy::Stochastic);
  CHECK(parse_selection_strategy("share_all") == SelectionStrategy::ShareAll);
  CHECK(parse_selection_strategy("all") == SelectionStrategy::ShareAll);
  CHECK(parse_selection_strategy("uniform") == SelectionStrategy::UniformRandom);
  CHECK(parse_selection_strategy("none") == SelectionStrategy::None);
  CHECK_THROWS_AS(parse_selection_strategy("best"), ConfigError);
  for (auto s : {SelectionStrategy::None, SelectionStrategy::Quantile, SelectionStrategy::Gaussian,
                 SelectionStrategy::Stochastic, SelectionStrategy::ShareAll, SelectionStrategy::UniformRandom}) {
    CHECK(parse_selection_strategy(to_string(s)) == s);
  }
}

TEST_CASE("td error: discount zero, zero nets") {
  auto zero = constant_net<double>(3, {0.0, 0.0});
  auto e = make_experience(3, 1, 1.0F, false, 0.3F, 0.7F);
  CHECK(td_error(e, zero, zero, 0.0, false).value() == doctest::Approx(1.0));
  CHECK(td_error(e, zero, zero, 0.0, true).value() == doctest::Approx(1.0));
}

TEST_CASE("td error: hand-evaluated bootstrap") {
  // Q_online(obs, 0) = 0.5, max_a Q_target(next, a) = 2.0
  auto online = constant_net<double>(2, {0.5, -3.0});
  auto target = constant_net<double>(2, {2.0, 1.0});
  auto e = make_experience(2, 0, 1.0F, false);
  // |1 + 0.9 * 2 - 0.5|
  CHECK(td_error(e, online, target, 0.9, false).value() == doctest::Approx(2.3));
  // double Q: online argmax at next is action 0, evaluated by target = 2.0 as well
  CHECK(td_error(e, online, target, 0.9, true).value() == doctest::Approx(2.3));

  // double Q picks the online argmax, not the target max
  auto online2 = constant_net<double>(2, {0.5, 9.0});
  // |1 + 0.9 * Q_target(next, 1) - 0.5| = |1 + 0.9 - 0.5|
  CHECK(td_error(e, online2, target, 0.9, true).value() == doctest::Approx(1.4));
}

TEST_CASE("td error: terminal transitions ignore next observation") {
  auto online = constant_net<float>(2, {0.0, 0.0});
  auto target = constant_net<float>(2, {7.0, 3.0});
  auto e = make_experience(2, 1, 0.0F, true, 0.0F, 123.0F);
  CHECK(td_error(e, online, target, 0.99, true).value() == 0.0);
  e.next_obs = {-5.0F, 9.0F};
  CHECK(td_error(e, online, target, 0.99, false).value() == 0.0);

  // a random network: changing next_obs under done=true changes nothing
  NetworkShape shape{2, 3, {8}, true};
  QNetwork64 q(shape, 3), t(shape, 4);
  auto d = make_experience(2, 2, 0.7F, true, 0.2F, 0.1F);
  const double before = td_error(d, q, t, 0.9, true).value();
  d.next_obs = {40.0F, -12.0F};
  CHECK(td_error(d, q, t, 0.9, true).value() == before);
}

TEST_CASE("td error: double Q equals plain when networks coincide") {
  NetworkShape shape{4, 5, {16, 16}, true};
  QNetwork64 net(shape, 11);
  std::mt19937_64 rng(5);
  std::normal_distribution<float> n(0.0F, 1.0F);
  for (int i = 0; i < 50; ++i) {
    Experience e = make_experience(4, i % 5, n(rng), false);
    for (auto& v : e.obs) v = n(rng);
    for (auto& v : e.next_obs) v = n(rng);
    const double a = td_error(e, net, net, 0.95, true).value();
    const double b = td_error(e, net, net, 0.95, false).value();
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    CHECK(a >= 0.0);
  }
}

TEST_CASE("td error: dimension mismatch is a contract violation") {
  auto net = constant_net<float>(3, {0.0, 0.0});
  auto e = make_experience(4, 0, 0.0F, false);
  CHECK_THROWS_AS(td_error(e, net, net, 0.9, true), ContractViolation);
}

TEST_CASE("experiment config parsing") {
  std::istringstream ok(R"([experiment]
mode = independent
total_env_steps = 5000
seeds = 3, 4
report_interval_steps = 500

[environment]
preset = mini
max_cycles = 50

[trainer]
learning_rate = 0.001
relay_priority = max

[network]
hidden_layers = 32, 16
dueling = false

[selection]
strategy = gaussian
bandwidth_beta = 0.05
gaussian_use_variance = false
)");
  const auto c = parse_experiment_config(ok);
  CHECK(c.mode == RunMode::IndependentDQN);
  CHECK(c.total_env_steps == 5000);
  CHECK(c.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK(c.environment.grid_width == 7);
  CHECK(c.environment.max_cycles == 50);
  CHECK(c.trainer.learning_rate == 0.001);
  CHECK(c.trainer.relay_priority == RelayPriority::MaxPriority);
  CHECK(c.trainer.hidden_layers == std::vector<std::size_t>{32, 16});
  CHECK_FALSE(c.trainer.dueling);
  CHECK(c.trainer.selection.strategy == SelectionStrategy::Gaussian);
  CHECK_FALSE(c.trainer.selection.gaussian_use_variance);

  // written form parses back to the same values
  std::stringstream ss;
  write_experiment_config(ss, c);
  const auto again = parse_experiment_config(ss);
  std::stringstream ss2;
  write_experiment_config(ss2, again);
  std::stringstream ss1;
  write_experiment_config(ss1, c);
  CHECK(ss1.str() == ss2.str());
}

TEST_CASE("experiment config errors are field-level") {
  auto message_of = [](const std::string& text) {
    std::istringstream is(text);
    try {
      parse_experiment_config(is);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message_of("[trainer]\nlearning_rat = 0.1\n").find("trainer.learning_rat") != std::string::npos);
  CHECK(message_of("[bogus]\nx = 1\n").find("bogus") != std::string::npos);
  CHECK(message_of("[trainer]\ntrain_batch_size = many\n").find("trainer.train_batch_size") != std::string::npos);
  CHECK(message_of("[experiment]\nseeds =\n").find("experiment.seeds") != std::string::npos);
  CHECK(message_of("[experiment]\nreport_interval_steps = 0\n").find("report_interval_steps") != std::string::npos);
  CHECK(message_of("[selection]\nstrategy = best\n").find("selection.strategy") != std::string::npos);
  CHECK(message_of("[environment]\nobs_range = 4\n").find("obs_range") != std::string::npos);
  CHECK(message_of("[network]\ndueling = maybe\n").find("network.dueling") != std::string::npos);
}
