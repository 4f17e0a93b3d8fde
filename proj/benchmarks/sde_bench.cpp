#include <benchmark/benchmark.h>

#include "cim/sde.hpp"

namespace {

void BM_Step(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto problem = cim::make_ferro(n, 1.0);
  const cim::ModelParams params{1.2, 0.2, 0.01};
  cim::GaussianStream noise(1);
  auto x = cim::NetworkState::vacuum(n);
  long long k = 0;
  for (auto _ : state) {
    x = cim::step(x, problem, params, 0.002, noise, k++);
    benchmark::DoNotOptimize(x.mu.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(n));
}
BENCHMARK(BM_Step)->Arg(50)->Arg(200)->Arg(500);

void BM_RunEnsemble(benchmark::State& state) {
  const auto problem = cim::make_ferro(200, 1.0);
  const cim::ModelParams params{1.2, 0.2, 0.01};
  cim::IntegrationConfig config;
  config.dt = 0.002;
  config.steps = 2000;
  config.burn_in = 500;
  config.trajectories = 4;
  for (auto _ : state) benchmark::DoNotOptimize(cim::run_ensemble(problem, params, config, 1));
}
BENCHMARK(BM_RunEnsemble)->Unit(benchmark::kMillisecond);

}  // namespace
