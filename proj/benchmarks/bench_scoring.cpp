#include "cpdsde/scoring.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace cpdsde;

TrajectoryBundle random_bundle(Eigen::Index T, Eigen::Index N, Eigen::Index D) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  TrajectoryBundle b;
  for (Eigen::Index t = 0; t < T; ++t) {
    Matrix m(N, D);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    b.decoded.push_back(m);
  }
  b.latent = b.decoded;
  return b;
}

void BM_CpdScore(benchmark::State& state) {
  const auto N = static_cast<Eigen::Index>(state.range(0));
  const auto bundle = random_bundle(400, N, 2);
  const auto series = TimeSeries::from_values(Matrix::Random(400, 2));
  for (auto _ : state) benchmark::DoNotOptimize(cpd_score(series, bundle, 5, 0.1));
}
BENCHMARK(BM_CpdScore)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ProminencePeaks(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  std::vector<double> s(static_cast<std::size_t>(state.range(0)));
  for (auto& v : s) v = n(rng);
  const ScoreSeries scores(s);
  for (auto _ : state) benchmark::DoNotOptimize(prominence_peaks(scores, 0.0, 0.5, 1));
}
BENCHMARK(BM_ProminencePeaks)->Arg(400)->Arg(10000);

}  // namespace
