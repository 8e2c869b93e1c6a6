#include "cpdsde/autodiff.hpp"
#include "cpdsde/nn.hpp"
#include "cpdsde/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace cpdsde;

void BM_MlpForwardBackward(benchmark::State& state) {
  const auto batch = static_cast<Eigen::Index>(state.range(0));
  nn::MLP mlp(9, 200, 1);
  Engine engine(1);
  mlp.init_uniform(engine);
  const Matrix x = Matrix::Random(batch, 9);
  for (auto _ : state) {
    ad::Tape tape;
    const auto bound = mlp.bind(tape);
    const ad::Var loss = ad::sum(ad::square(mlp.forward(bound, tape.constant(x))));
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.grad(bound.front().weight));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpForwardBackward)->Arg(1)->Arg(32)->Arg(512);

void BM_MlpForwardPlain(benchmark::State& state) {
  const auto batch = static_cast<Eigen::Index>(state.range(0));
  nn::MLP mlp(9, 200, 1);
  Engine engine(1);
  mlp.init_uniform(engine);
  const Matrix x = Matrix::Random(batch, 9);
  for (auto _ : state) benchmark::DoNotOptimize(mlp.forward(x));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpForwardPlain)->Arg(1)->Arg(100);

}  // namespace
