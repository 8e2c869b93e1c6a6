#pragma once

#include "cpdsde/timeseries.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <cstdint>

namespace cpdsde::oracle {

/// Gaussian decoded-state law per time: f(z_v) ~ N(means[v], diag(variances[v])),
/// observed through N(x | f(z_v), c·I). Closed-form scores follow from the
/// marginal x | v ~ N(b_v, C + Λ_v).
struct GaussianProcessSpec {
  Matrix means;
  Matrix variances;
  double obs_variance = 0.1;
  int lags = 5;

  [[nodiscard]] Eigen::Index length() const { return means.rows(); }
  [[nodiscard]] Eigen::Index dims() const { return means.cols(); }
  void validate() const;
};

void to_json(nlohmann::json& j, const GaussianProcessSpec& spec);
void from_json(const nlohmann::json& j, GaussianProcessSpec& spec);

double marginal_log_density(const Vector& x, std::size_t v, const GaussianProcessSpec& spec);

/// ½·Σ_{l=1..min(L,t)} [(ln|C+Λ_{t-l}| + q_{t-l}) - (ln|C+Λ_t| + q_t)],
/// q_v = (x - b_v)ᵀ(C+Λ_v)⁻¹(x - b_v).
double analytic_cpd(const Vector& x, std::size_t t, const GaussianProcessSpec& spec);

/// (L/2)·[(x-b)ᵀ(C+Λ)⁻¹(x-b) - (x-b-Δb)ᵀ(C+Λ)⁻¹(x-b-Δb)].
double mean_jump_score(const Vector& x, const Vector& b, const Vector& delta_b, const Vector& lambda,
                       double c, int lags);

/// The mean-jump form evaluated on first-differenced quantities.
double trend_jump_score(const Vector& x_delta, const Vector& b_delta, const Vector& delta2_b,
                        const Vector& lambda_delta, double c, int lags);

/// (L/2)·[(ln|C+Λ1| - ln|C+Λ2|) + (x-b)ᵀ((C+Λ1)⁻¹ - (C+Λ2)⁻¹)(x-b)].
double cov_change_score(const Vector& x, const Vector& b, const Vector& lambda1,
                        const Vector& lambda2, double c, int lags);

/// Specs realising each corollary's substitution at time t = lags:
/// rows 0..L-1 carry the "before" law and row L the "after" law.
GaussianProcessSpec mean_jump_spec(const Vector& b, const Vector& delta_b, const Vector& lambda,
                                   double c, int lags);
GaussianProcessSpec cov_change_spec(const Vector& b, const Vector& lambda1, const Vector& lambda2,
                                    double c, int lags);

struct McCheck {
  double mc_score = 0.0;
  double analytic_score = 0.0;
  double rel_error = 0.0;
};

/// Draws N decoded samples per time from N(b_v, Λ_v) with common random
/// numbers across time, scores x at time t through the Monte-Carlo scorer
/// (per-dimension scores summed) and compares with analytic_cpd.
McCheck mc_vs_analytic_check(const GaussianProcessSpec& spec, const Vector& x, std::size_t t,
                             std::size_t n_samples, std::uint64_t seed);

}  // namespace cpdsde::oracle
