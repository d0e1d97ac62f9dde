#include <benchmark/benchmark.h>

#include <random>

#include "super/prioritized_buffer.hpp"
#include "super/pursuit.hpp"
#include "super/qnetwork.hpp"
#include "super/selection.hpp"
#include "super/sum_tree.hpp"

using namespace super;

namespace {

Experience blank(std::size_t dim) {
  Experience e;
  e.obs.assign(dim, 0.5F);
  e.next_obs.assign(dim, 0.25F);
  return e;
}

void BM_SumTreeSet(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  SumTree tree(n);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> idx(0, n - 1);
  for (auto _ : state) tree.set(idx(rng), 1.0);
}
BENCHMARK(BM_SumTreeSet)->Arg(1 << 10)->Arg(120000);

void BM_SumTreeFind(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  SumTree tree(n);
  for (std::size_t i = 0; i < n; ++i) tree.set(i, 1.0 + static_cast<double>(i % 7));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> mass(0.0, tree.total());
  for (auto _ : state) benchmark::DoNotOptimize(tree.find_prefix(mass(rng)));
}
BENCHMARK(BM_SumTreeFind)->Arg(1 << 10)->Arg(120000);

void BM_ReplaySample32(benchmark::State& state) {
  PrioritizedBuffer buf({20000, 0.6, 1e-6});
  for (int i = 0; i < 20000; ++i) buf.insert(blank(75), 0.01 * (i % 100));
  std::mt19937_64 rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(buf.sample(32, 0.4, rng));
}
BENCHMARK(BM_ReplaySample32);

void BM_NetworkForward(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  QNetwork net({75, 5, {width, width}, true}, 1);
  QNetwork::Matrix obs = QNetwork::Matrix::Random(75, 32);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(obs));
}
BENCHMARK(BM_NetworkForward)->Arg(64)->Arg(128);

void BM_NetworkLossAndGradient(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  QNetwork net({75, 5, {width, width}, true}, 1);
  QNetwork::Matrix obs = QNetwork::Matrix::Random(75, 32);
  std::vector<int> actions(32, 2);
  std::vector<float> targets(32, 1.0F), weights(32, 1.0F), grad(net.parameter_count());
  for (auto _ : state) benchmark::DoNotOptimize(net.loss_and_gradient(obs, actions, targets, weights, 1.0, grad));
}
BENCHMARK(BM_NetworkLossAndGradient)->Arg(64)->Arg(128);

void BM_QuantileDecision(benchmark::State& state) {
  SelectionConfig cfg;
  cfg.strategy = SelectionStrategy::Quantile;
  cfg.window_size_k = 1500;
  ExperienceSelector sel(cfg);
  std::mt19937_64 rng(4);
  std::exponential_distribution<double> td(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(sel.decide(td(rng), rng));
}
BENCHMARK(BM_QuantileDecision);

void BM_PursuitStep(benchmark::State& state) {
  const PursuitConfig cfg = state.range(0) == 0 ? mini_pursuit_config() : PursuitConfig{};
  PursuitGame game(cfg, 1);
  game.reset();
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> act(0, 4);
  std::vector<int> actions(cfg.num_pursuers);
  for (auto _ : state) {
    for (auto& a : actions) a = act(rng);
    if (game.step(actions).done) game.reset();
  }
}
BENCHMARK(BM_PursuitStep)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
