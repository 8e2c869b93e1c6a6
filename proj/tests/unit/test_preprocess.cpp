#include "cpdsde/errors.hpp"
#include "cpdsde/preprocess.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace cpdsde {
namespace {

TimeSeries column_series(std::initializer_list<double> values) {
  Matrix m(static_cast<Eigen::Index>(values.size()), 1);
  Eigen::Index i = 0;
  for (double v : values) m(i++, 0) = v;
  return TimeSeries::from_values(m);
}

Vector ar1(double phi, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise;
  Vector x(static_cast<Eigen::Index>(n));
  x(0) = noise(rng);
  for (Eigen::Index t = 1; t < x.size(); ++t) x(t) = phi * x(t - 1) + noise(rng);
  return x;
}

TEST(StandardScale, HandExample) {
  const auto r = standard_scale(column_series({1, 2, 3}));
  const double s = std::sqrt(1.5);
  EXPECT_NEAR(r.series(0, 0), -s, 1e-12);
  EXPECT_NEAR(r.series(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(r.series(2, 0), s, 1e-12);
  EXPECT_TRUE(r.degenerate_channels.empty());
}

TEST(StandardScale, ConstantChannelIsZeroedAndFlagged) {
  Matrix m(3, 2);
  m << 5, 1, 5, 2, 5, 4;
  const auto r = standard_scale(TimeSeries::from_values(m));
  EXPECT_TRUE(r.series.values().col(0).isZero());
  ASSERT_EQ(r.degenerate_channels.size(), 1u);
  EXPECT_EQ(r.degenerate_channels[0], 0u);
}

TEST(StandardScale, IdempotentOnItsOutput) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(4.0, 9.0);
  Matrix m(50, 3);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  const auto once = standard_scale(TimeSeries::from_values(m)).series;
  const auto twice = standard_scale(once).series;
  EXPECT_LT((once.values() - twice.values()).cwiseAbs().maxCoeff(), 1e-10);
  for (Eigen::Index j = 0; j < 3; ++j) {
    EXPECT_NEAR(once.values().col(j).mean(), 0.0, 1e-12);
    EXPECT_NEAR(once.values().col(j).squaredNorm() / 50.0, 1.0, 1e-12);
  }
}

TEST(FitAr, RecoversAr1Coefficient) {
  const auto model = fit_ar(ar1(0.8, 20000, 17), 5, 0);
  EXPECT_NEAR(model.coefficients(0), 0.8, 0.03);
  for (int k = 1; k < 5; ++k) EXPECT_NEAR(model.coefficients(k), 0.0, 0.04);
}

TEST(FitAr, WhiteNoiseResidualVarianceMatchesInput) {
  const Vector x = ar1(0.0, 2000, 23);
  const auto model = fit_ar(x, 5, 0);
  const Vector r = residuals(x, model).tail(1995);
  const double var_in = (x.array() - x.mean()).square().mean();
  const double var_r = (r.array() - r.mean()).square().mean();
  EXPECT_NEAR(var_r / var_in, 1.0, 0.1);
}

TEST(FitAr, RejectsShortSeriesAndRankDeficiency) {
  EXPECT_THROW(fit_ar(Vector::Zero(10), 5, 0), FitError);
  Vector ramp(40);
  for (Eigen::Index t = 0; t < 40; ++t) ramp(t) = 0.5 * static_cast<double>(t);
  EXPECT_THROW(fit_ar(ramp, 5, 1), FitError);
}

TEST(Residuals, RampWithDifferencingIsExact) {
  Vector ramp(40);
  for (Eigen::Index t = 0; t < 40; ++t) ramp(t) = 3.0 + 0.5 * static_cast<double>(t);
  const auto model = fit_ar_or_fallback(ramp, 5, 1);
  EXPECT_TRUE(model.coefficients.isZero());
  EXPECT_NEAR(model.intercept, 0.5, 1e-12);
  EXPECT_LT(residuals(ramp, model).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Residuals, ExactModelOnDeterministicProcess) {
  Vector x(30);
  x(0) = 1.0;
  x(1) = 0.5;
  for (Eigen::Index t = 2; t < 30; ++t) x(t) = 0.6 * x(t - 1) - 0.3 * x(t - 2) + 0.1;
  ARModel model;
  model.coefficients = Vector::Zero(2);
  model.coefficients << 0.6, -0.3;
  model.intercept = 0.1;
  const Vector r = residuals(x, model);
  EXPECT_EQ(r(0), 0.0);
  EXPECT_EQ(r(1), 0.0);
  EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Residuals, ZeroModelIdentityAndDifferenceForms) {
  const Vector x = ar1(0.5, 20, 4);
  ARModel identity;
  identity.coefficients = Vector::Zero(3);
  const Vector r0 = residuals(x, identity);
  EXPECT_TRUE(r0.head(3).isZero());
  EXPECT_EQ(r0.tail(17), x.tail(17));

  ARModel diff = identity;
  diff.diff_order = 1;
  const Vector r1 = residuals(x, diff);
  EXPECT_TRUE(r1.head(4).isZero());
  for (Eigen::Index t = 4; t < 20; ++t) EXPECT_NEAR(r1(t), x(t) - x(t - 1), 1e-15);
}

TEST(Augment, ShapesAndContent) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  Matrix m(60, 3);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  const auto raw = TimeSeries::from_values(m);
  const PreprocessConfig on;
  const auto aug = augment(raw, on);
  EXPECT_EQ(aug.dims(), 6u);
  EXPECT_EQ(aug.values().leftCols(3), standard_scale(raw).series.values());
  EXPECT_TRUE(aug.values().topRightCorner(6, 3).isZero());
  EXPECT_TRUE(aug.values().allFinite());

  PreprocessConfig off;
  off.use_residuals = false;
  EXPECT_EQ(augment(raw, off), standard_scale(raw).series);

  const auto one = augment(TimeSeries::from_values(m.leftCols(1)), on);
  EXPECT_EQ(one.dims(), 2u);
}

TEST(Augment, ConstantSeriesStaysFinite) {
  const auto aug = augment(TimeSeries::from_values(Matrix::Constant(30, 1, 2.0)), PreprocessConfig{});
  EXPECT_TRUE(aug.values().allFinite());
  EXPECT_TRUE(aug.values().isZero());
}

TEST(PreprocessConfig, Validation) {
  PreprocessConfig c;
  c.n_pos_encodings = 3;
  EXPECT_THROW(c.validate(), InputError);
  c = {};
  c.diff_order = 2;
  EXPECT_THROW(c.validate(), InputError);
  c = {};
  c.ar_order = 0;
  EXPECT_THROW(c.validate(), InputError);
}

TEST(PositionalEncoding, Examples) {
  const Vector z = positional_encoding(0.0, 8);
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(z(2 * k), 0.0);
    EXPECT_EQ(z(2 * k + 1), 1.0);
  }
  const Vector one = positional_encoding(1.0, 2);
  EXPECT_NEAR(one(0), 0.841471, 1e-6);
  EXPECT_NEAR(one(1), 0.540302, 1e-6);
  for (int t = 0; t < 500; ++t) {
    EXPECT_LE(positional_encoding(t, 8).cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(PositionalEncoding, InjectiveOnGrid) {
  std::vector<Vector> seen;
  for (int t = 0; t < 10000; t += 37) seen.push_back(positional_encoding(t, 4));
  for (std::size_t a = 0; a < seen.size(); ++a) {
    for (std::size_t b = a + 1; b < seen.size(); ++b) {
      EXPECT_GT((seen[a] - seen[b]).norm(), 1e-9) << a << " " << b;
    }
  }
}

}  // namespace
}  // namespace cpdsde
