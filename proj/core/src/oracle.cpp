#include "cpdsde/oracle.hpp"

#include "cpdsde/errors.hpp"
#include "cpdsde/latent_sde.hpp"
#include "cpdsde/rng.hpp"
#include "cpdsde/scoring.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cpdsde::oracle {
namespace {

// ln|C+Λ| + (x-b)ᵀ(C+Λ)⁻¹(x-b) for diagonal Λ.
double log_det_plus_quad(const Vector& x, const Vector& b, const Vector& lambda, double c) {
  const auto var = (lambda.array() + c);
  return var.log().sum() + ((x - b).array().square() / var).sum();
}

double quad(const Vector& x, const Vector& b, const Vector& lambda, double c) {
  return ((x - b).array().square() / (lambda.array() + c)).sum();
}

void check_same_size(std::initializer_list<Eigen::Index> sizes) {
  const auto first = *sizes.begin();
  for (auto s : sizes) {
    if (s != first) throw ContractError("oracle: inconsistent vector dimensions");
  }
}

}  // namespace

void GaussianProcessSpec::validate() const {
  if (means.rows() != variances.rows() || means.cols() != variances.cols()) {
    throw InputError("gaussian spec: means and variances differ in shape");
  }
  if (means.rows() < 1 || means.cols() < 1) throw InputError("gaussian spec: empty");
  if ((variances.array() <= 0.0).any()) throw InputError("gaussian spec: variances must be > 0");
  if (!(obs_variance > 0.0)) throw InputError("gaussian spec: obs_variance must be > 0");
  if (lags < 1) throw InputError("gaussian spec: lags must be >= 1");
}

void to_json(nlohmann::json& j, const GaussianProcessSpec& spec) {
  auto rows = [](const Matrix& m) {
    std::vector<std::vector<double>> out;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      out.emplace_back(m.row(r).data(), m.row(r).data() + m.cols());
    }
    return out;
  };
  j = nlohmann::json{{"means", rows(spec.means)},
                     {"variances", rows(spec.variances)},
                     {"obs_variance", spec.obs_variance},
                     {"lags", spec.lags}};
}

void from_json(const nlohmann::json& j, GaussianProcessSpec& spec) {
  auto matrix = [](const nlohmann::json& a) {
    const auto rows = a.get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw InputError("gaussian spec: empty matrix");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows[0].size()) throw InputError("gaussian spec: ragged matrix");
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
    }
    return m;
  };
  spec.means = matrix(j.at("means"));
  spec.variances = matrix(j.at("variances"));
  spec.obs_variance = j.value("obs_variance", 0.1);
  spec.lags = j.value("lags", 5);
  spec.validate();
}

double marginal_log_density(const Vector& x, std::size_t v, const GaussianProcessSpec& spec) {
  if (static_cast<Eigen::Index>(v) >= spec.length()) throw ContractError("time index out of range");
  if (x.size() != spec.dims()) throw ContractError("dimension mismatch");
  const auto row = static_cast<Eigen::Index>(v);
  const Vector b = spec.means.row(row).transpose();
  const Vector lambda = spec.variances.row(row).transpose();
  const double D = static_cast<double>(x.size());
  return -0.5 * D * std::log(2.0 * std::numbers::pi) -
         0.5 * log_det_plus_quad(x, b, lambda, spec.obs_variance);
}

double analytic_cpd(const Vector& x, std::size_t t, const GaussianProcessSpec& spec) {
  if (t < 1) throw ContractError("analytic_cpd: t must be >= 1");
  if (static_cast<Eigen::Index>(t) >= spec.length()) throw ContractError("time index out of range");
  if (x.size() != spec.dims()) throw ContractError("dimension mismatch");
  const double c = spec.obs_variance;
  auto term = [&](std::size_t v) {
    const auto row = static_cast<Eigen::Index>(v);
    return log_det_plus_quad(x, spec.means.row(row).transpose(),
                             spec.variances.row(row).transpose(), c);
  };
  const double now = term(t);
  const std::size_t max_lag = std::min<std::size_t>(static_cast<std::size_t>(spec.lags), t);
  double acc = 0.0;
  for (std::size_t l = 1; l <= max_lag; ++l) acc += term(t - l) - now;
  return 0.5 * acc;
}

double mean_jump_score(const Vector& x, const Vector& b, const Vector& delta_b, const Vector& lambda,
                       double c, int lags) {
  check_same_size({x.size(), b.size(), delta_b.size(), lambda.size()});
  const Vector shifted = b + delta_b;
  return 0.5 * lags * (quad(x, b, lambda, c) - quad(x, shifted, lambda, c));
}

double trend_jump_score(const Vector& x_delta, const Vector& b_delta, const Vector& delta2_b,
                        const Vector& lambda_delta, double c, int lags) {
  return mean_jump_score(x_delta, b_delta, delta2_b, lambda_delta, c, lags);
}

double cov_change_score(const Vector& x, const Vector& b, const Vector& lambda1,
                        const Vector& lambda2, double c, int lags) {
  check_same_size({x.size(), b.size(), lambda1.size(), lambda2.size()});
  const auto v1 = lambda1.array() + c;
  const auto v2 = lambda2.array() + c;
  const double log_det = v1.log().sum() - v2.log().sum();
  const double q = ((x - b).array().square() * (v1.inverse() - v2.inverse())).sum();
  return 0.5 * lags * (log_det + q);
}

GaussianProcessSpec mean_jump_spec(const Vector& b, const Vector& delta_b, const Vector& lambda,
                                   double c, int lags) {
  GaussianProcessSpec spec;
  spec.means = b.transpose().replicate(lags + 1, 1);
  spec.means.row(lags) = (b + delta_b).transpose();
  spec.variances = lambda.transpose().replicate(lags + 1, 1);
  spec.obs_variance = c;
  spec.lags = lags;
  return spec;
}

GaussianProcessSpec cov_change_spec(const Vector& b, const Vector& lambda1, const Vector& lambda2,
                                    double c, int lags) {
  GaussianProcessSpec spec;
  spec.means = b.transpose().replicate(lags + 1, 1);
  spec.variances = lambda1.transpose().replicate(lags + 1, 1);
  spec.variances.row(lags) = lambda2.transpose();
  spec.obs_variance = c;
  spec.lags = lags;
  return spec;
}

McCheck mc_vs_analytic_check(const GaussianProcessSpec& spec, const Vector& x, std::size_t t,
                             std::size_t n_samples, std::uint64_t seed) {
  spec.validate();
  if (n_samples < 1) throw ContractError("mc_vs_analytic_check: need at least one sample");
  if (t < 1) throw ContractError("mc_vs_analytic_check: t must be >= 1");
  const auto T = static_cast<Eigen::Index>(t) + 1;
  if (T > spec.length()) throw ContractError("time index out of range");
  const auto N = static_cast<Eigen::Index>(n_samples);
  const auto D = spec.dims();

  NormalStream normal(derive_seed(seed, 0x0c1e));
  Matrix xi(N, D);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < D; ++j) xi(i, j) = normal();
  }
  TrajectoryBundle bundle;
  bundle.seed = seed;
  for (Eigen::Index v = 0; v < T; ++v) {
    Matrix decoded = xi.array().rowwise() * spec.variances.row(v).array().sqrt();
    decoded.rowwise() += spec.means.row(v);
    bundle.decoded.push_back(std::move(decoded));
  }
  bundle.latent = bundle.decoded;

  Matrix observed = spec.means.topRows(T);
  observed.row(T - 1) = x.transpose();
  const auto series = TimeSeries::from_values(std::move(observed));
  const ScoreMatrix scores = cpd_score(series, bundle, spec.lags, spec.obs_variance);

  McCheck out;
  out.mc_score = scores.row(T - 1).sum();
  out.analytic_score = analytic_cpd(x, t, spec);
  const double denom = std::abs(out.analytic_score);
  out.rel_error = denom > 0.0 ? std::abs(out.mc_score - out.analytic_score) / denom
                              : std::abs(out.mc_score - out.analytic_score);
  return out;
}

}  // namespace cpdsde::oracle
