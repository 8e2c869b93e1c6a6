#include "cpdsde/metrics.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace cpdsde;

void BM_BestThresholdEval(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  std::vector<double> s(400);
  for (auto& v : s) v = n(rng);
  s[200] += 10.0;
  const ScoreSeries scores(s);
  const ChangePointLabels labels({200}, 400);
  const EvalConfig cfg;
  const PeakConfig peaks;
  for (auto _ : state) {
    for (const auto m : kAllMetrics) benchmark::DoNotOptimize(best_threshold_eval(scores, labels, m, peaks, cfg));
  }
}
BENCHMARK(BM_BestThresholdEval)->Unit(benchmark::kMillisecond);

}  // namespace
