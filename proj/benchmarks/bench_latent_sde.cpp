#include "cpdsde/latent_sde.hpp"
#include "cpdsde/synth.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace cpdsde;

void BM_TrainEpoch(benchmark::State& state) {
  const auto ds = synth::corpus_row(12, 0);
  SDEConfig sde;
  sde.obs_dim = 1;
  sde.dt = 0.1;
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(train(ds.series, sde, tc).loss_history);
}
BENCHMARK(BM_TrainEpoch)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_SamplePosterior(benchmark::State& state) {
  const auto ds = synth::corpus_row(12, 0);
  SDEConfig sde;
  sde.obs_dim = 1;
  sde.dt = 0.1;
  const LatentSDEModel model(sde, 0);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_posterior(model, ds.series, n, 1));
}
BENCHMARK(BM_SamplePosterior)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
