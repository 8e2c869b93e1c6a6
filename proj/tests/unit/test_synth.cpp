#include "cpdsde/errors.hpp"
#include "cpdsde/synth.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cpdsde::synth {
namespace {

using cpdsde::testing::read_text;
using cpdsde::testing::TempDir;

SegmentSpec segment(long length, double mean, double scale = 1.0) {
  SegmentSpec s;
  s.length = length;
  s.mean = Vector::Constant(1, mean);
  s.scale = Vector::Constant(1, scale);
  s.slope = Vector::Zero(1);
  return s;
}

double variance(const Vector& v) { return (v.array() - v.mean()).square().mean(); }

TEST(Gumbel, MomentsAndMedian) {
  Engine engine(2024);
  constexpr int n = 1000000;
  std::vector<double> draws(n);
  double sum = 0.0;
  for (auto& d : draws) {
    d = gumbel_sample(0.0, 1.0, engine);
    sum += d;
  }
  const double mean = sum / n;
  double sq = 0.0;
  for (double d : draws) sq += (d - mean) * (d - mean);
  EXPECT_NEAR(mean, std::numbers::egamma, 0.01);
  EXPECT_NEAR(sq / n / (std::numbers::pi * std::numbers::pi / 6.0), 1.0, 0.02);

  Engine half(7);
  std::vector<double> h(200001);
  for (auto& d : h) d = gumbel_sample(3.0, 0.5, half);
  std::nth_element(h.begin(), h.begin() + 100000, h.end());
  EXPECT_NEAR(h[100000], 3.0 - 0.5 * std::log(std::log(2.0)), 0.01);
  EXPECT_THROW(gumbel_sample(0.0, 0.0, engine), ContractError);
}

TEST(Generate, TwoSegmentsMeansWithinBand) {
  const auto ds = generate({segment(200, 0.0), segment(200, 3.0)}, 11);
  EXPECT_EQ(ds.labels.positions(), std::vector<long>{200});
  EXPECT_EQ(ds.series.length(), 400u);
  const Vector x = ds.series.column(0);
  const double band = 3.0 / std::sqrt(200.0);
  EXPECT_NEAR(x.head(200).mean(), 0.0, band);
  EXPECT_NEAR(x.tail(200).mean(), 3.0, band);
}

TEST(Generate, IdenticalSegmentsStillLabelled) {
  const auto ds = generate({segment(100, 1.0), segment(100, 1.0)}, 3);
  EXPECT_EQ(ds.labels.positions(), std::vector<long>{100});
}

TEST(Generate, DeterministicGivenSeed) {
  const std::vector<SegmentSpec> segs{segment(50, 0.0), segment(60, 1.0, 2.0)};
  EXPECT_EQ(generate(segs, 5).series, generate(segs, 5).series);
  EXPECT_FALSE(generate(segs, 5).series == generate(segs, 6).series);
}

TEST(Generate, RejectsBadSegments) {
  EXPECT_THROW(generate({segment(100, 0.0)}, 1), InputError);
  EXPECT_THROW(generate({segment(0, 0.0), segment(10, 0.0)}, 1), InputError);
  auto two_d = segment(10, 0.0);
  two_d.mean = Vector::Zero(2);
  two_d.scale = Vector::Ones(2);
  two_d.slope = Vector::Zero(2);
  EXPECT_THROW(generate({segment(10, 0.0), two_d}, 1), InputError);
  EXPECT_THROW(generate({segment(10, 0.0), segment(10, 0.0, -1.0)}, 1), InputError);
  auto corr = segment(10, 0.0);
  corr.correlation = 0.5;
  EXPECT_THROW(generate({segment(10, 0.0), corr}, 1), InputError);
}

TEST(Generate, FractureIsContinuous) {
  auto a = segment(200, 0.0, 1e-6);
  auto b = segment(200, 0.0, 1e-6);
  a.slope(0) = 0.0;
  b.slope(0) = 0.05;
  b.continuous = true;
  const auto ds = generate({a, b}, 1);
  EXPECT_NEAR(ds.series(199, 0), ds.series(200, 0), 1e-4);
  EXPECT_NEAR(ds.series(399, 0) - ds.series(200, 0), 0.05 * 199, 1e-4);
}

TEST(Corpus, RowsMatchTable) {
  const auto rows = corpus(7);
  ASSERT_EQ(rows.size(), static_cast<std::size_t>(kCorpusSize));
  const int dims[] = {2, 2, 2, 2, 2, 2, 2, 2, 1, 1, 2, 1, 2};
  const ChangeType types[] = {ChangeType::volatility, ChangeType::volatility, ChangeType::volatility,
                              ChangeType::volatility, ChangeType::volatility, ChangeType::volatility,
                              ChangeType::volatility, ChangeType::trend,      ChangeType::trend,
                              ChangeType::mixed,      ChangeType::jump,       ChangeType::jump,
                              ChangeType::jump};
  for (int i = 0; i < kCorpusSize; ++i) {
    const auto& ds = rows[static_cast<std::size_t>(i)];
    EXPECT_EQ(ds.index, i + 1);
    EXPECT_EQ(ds.series.dims(), static_cast<std::size_t>(dims[i])) << ds.name;
    EXPECT_EQ(ds.cp_type, types[i]) << ds.name;
    EXPECT_EQ(ds.series.length(), 400u);
    for (long p : ds.labels.positions()) {
      EXPECT_GT(p, 0);
      EXPECT_LT(p, 400);
    }
    if (i + 1 == 10) {
      EXPECT_GE(ds.labels.size(), 3u);
    } else {
      EXPECT_EQ(ds.labels.size(), 1u) << ds.name;
    }
  }
  EXPECT_EQ(rows[11].directory_name(), "12_single_step_1d");
}

TEST(Corpus, VolatilityRowsChangeVariance) {
  for (int row : {2, 6, 7}) {
    const auto ds = corpus_row(row, 13);
    const long tau = ds.labels.positions()[0];
    const Vector x = ds.series.column(0);
    const double before = variance(x.head(tau));
    const double after = variance(x.tail(static_cast<Eigen::Index>(400 - tau)));
    // factor 3 in scale is 9 in variance; allow a wide estimation band
    EXPECT_GT(after / before, 3.0) << row;
  }
}

TEST(Corpus, CovarianceRowChangesCorrelation) {
  const auto ds = corpus_row(4, 21);
  const long tau = ds.labels.positions()[0];
  auto corr = [](const Matrix& m) {
    const Vector a = m.col(0).array() - m.col(0).mean();
    const Vector b = m.col(1).array() - m.col(1).mean();
    return a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
  };
  const Matrix& v = ds.series.values();
  EXPECT_LT(std::abs(corr(v.topRows(tau))), 0.25);
  EXPECT_NEAR(corr(v.bottomRows(400 - tau)), 0.8, 0.1);
}

TEST(Corpus, JumpRowShiftsMean) {
  const auto ds = corpus_row(12, 1);
  const Vector x = ds.series.column(0);
  EXPECT_NEAR(x.tail(200).mean() - x.head(200).mean(), 2.0, 0.4);
}

TEST(Corpus, DeterministicAndSeedSensitive) {
  EXPECT_EQ(corpus_row(3, 9).series, corpus_row(3, 9).series);
  EXPECT_FALSE(corpus_row(3, 9).series == corpus_row(3, 10).series);
  EXPECT_THROW(corpus_row(0, 1), InputError);
  EXPECT_THROW(corpus_row(14, 1), InputError);
}

TEST(Corpus, DemoSeries) {
  const auto ds = demo_series(0);
  EXPECT_EQ(ds.series.length(), 600u);
  EXPECT_EQ(ds.series.dims(), 1u);
  EXPECT_EQ(ds.labels.positions(), (std::vector<long>{200, 400}));
}

TEST(Corpus, WriteDatasetLayout) {
  TempDir dir;
  const auto ds = corpus_row(12, 4);
  write_dataset(ds, dir.path());
  const auto root = dir / "12_single_step_1d";
  EXPECT_TRUE(std::filesystem::exists(root / "series.csv"));
  EXPECT_EQ(load_labels(root / "labels.json"), ds.labels);
  const auto loaded = load_csv(root / "series.csv");
  EXPECT_EQ(loaded.values(), ds.series.values());
  const auto params = nlohmann::json::parse(read_text(root / "params.json"));
  EXPECT_EQ(params.at("index"), 12);
  EXPECT_EQ(params.at("cp_type"), "jump");
}

}  // namespace
}  // namespace cpdsde::synth
