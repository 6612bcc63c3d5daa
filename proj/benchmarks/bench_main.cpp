#include <vector>

#include <benchmark/benchmark.h>
#include <nlohmann/json.hpp>

#include "resalloc/dqn_agents.hpp"
#include "resalloc/harness.hpp"
#include "resalloc/replay_memory.hpp"
#include "resalloc/sim_env.hpp"
#include "resalloc/tensor_nn.hpp"

using namespace resalloc;

namespace {

nn::Matrix random_batch(int rows, int cols, Rng& rng) {
  nn::Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  for (double& v : m.values()) v = rng.uniform();
  return m;
}

void BM_EnvStep(benchmark::State& state) {
  env::ResourceEnv sim(env::EnvConfig{});
  Rng rng(1);
  sim.reset(1);
  for (auto _ : state) {
    if (sim.done()) sim.reset(rng.next_u64());
    benchmark::DoNotOptimize(sim.step(static_cast<int>(rng.uniform_index(11))));
  }
}
BENCHMARK(BM_EnvStep);

void BM_Forward(benchmark::State& state) {
  const bool noisy = state.range(1) != 0;
  const auto spec = nn::make_q_network_spec(23, 11, true, noisy);
  Rng rng(2);
  const auto params = nn::init_params(spec, rng);
  const auto noise = noisy ? nn::sample_noise(spec, rng) : nn::NoiseSample{};
  const auto x = random_batch(23, static_cast<int>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward_batch(params, spec, x, noise));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Args({1, 0})->Args({32, 0})->Args({32, 1});

void BM_ForwardBackward(benchmark::State& state) {
  const bool noisy = state.range(0) != 0;
  const auto spec = nn::make_q_network_spec(23, 11, true, noisy);
  Rng rng(3);
  const auto params = nn::init_params(spec, rng);
  const auto noise = noisy ? nn::sample_noise(spec, rng) : nn::NoiseSample{};
  const auto x = random_batch(23, 32, rng);
  const auto g = random_batch(11, 32, rng);
  nn::ForwardCache cache;
  for (auto _ : state) {
    nn::forward_batch(params, spec, x, noise, &cache);
    benchmark::DoNotOptimize(nn::backward_batch(params, spec, cache, g));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(0)->Arg(1);

void BM_SumTreeUpdateAndFind(benchmark::State& state) {
  replay::SumTree tree(10000);
  Rng rng(4);
  for (std::size_t i = 0; i < 10000; ++i) tree.set(i, rng.uniform());
  for (auto _ : state) {
    tree.set(rng.uniform_index(10000), rng.uniform());
    benchmark::DoNotOptimize(tree.find_prefix(rng.uniform() * tree.total()));
  }
}
BENCHMARK(BM_SumTreeUpdateAndFind);

void BM_LearnStep(benchmark::State& state) {
  const int variant = static_cast<int>(state.range(0));
  agents::Agent agent = agents::make_agent(variant, env::EnvConfig{}, nlohmann::json::object());
  env::ResourceEnv sim(env::EnvConfig{});
  auto obs = sim.reset(5);
  for (int i = 0; i < 600; ++i) {
    if (sim.done()) obs = sim.reset(static_cast<std::uint64_t>(i));
    const int a = agent.select_action(obs, true);
    auto r = sim.step(a);
    agent.observe({obs, a, r.reward, r.observation, false});
    obs = r.observation;
  }
  for (auto _ : state) benchmark::DoNotOptimize(agent.learn_step());
}
BENCHMARK(BM_LearnStep)->DenseRange(1, 8)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
