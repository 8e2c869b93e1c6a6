#pragma once

#include "cpdsde/timeseries.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <vector>

namespace cpdsde {

struct PreprocessConfig {
  bool use_residuals = true;
  int ar_order = 5;
  int diff_order = 1;
  int n_pos_encodings = 8;
  double scale_eps = 1e-8;

  void validate() const;
};

void to_json(nlohmann::json& j, const PreprocessConfig& cfg);
void from_json(const nlohmann::json& j, PreprocessConfig& cfg);

/// Autoregressive model on the `diff_order`-times differenced channel:
/// y[t] = intercept + sum_k coefficients[k] * y[t-1-k].
struct ARModel {
  Vector coefficients;
  double intercept = 0.0;
  int diff_order = 0;

  [[nodiscard]] int order() const noexcept { return static_cast<int>(coefficients.size()); }
};

struct ScaleResult {
  TimeSeries series;
  /// Channels whose variance fell below scale_eps; they are output as zeros.
  std::vector<std::size_t> degenerate_channels;
};

/// Per-channel zero mean, unit population variance.
ScaleResult standard_scale(const TimeSeries& series, double eps = 1e-8);

/// Conditional least squares on the differenced channel. Throws FitError
/// when the design matrix is rank deficient or there are too few rows.
ARModel fit_ar(const Vector& channel, int order, int diff_order);

/// fit_ar, falling back to the intercept-only model (zero AR coefficients,
/// intercept = mean of the differenced channel) when the fit fails.
ARModel fit_ar_or_fallback(const Vector& channel, int order, int diff_order);

/// One-step-ahead in-sample residuals in the original scale. The first
/// order + diff_order rows have no full prediction and are zero.
Vector residuals(const Vector& channel, const ARModel& model);
TimeSeries residuals(const TimeSeries& series, const std::vector<ARModel>& models);

/// Scaled input, optionally followed by standard-scaled AR residual
/// channels (warm-up rows stay zero). D_out = 2D with residuals, D otherwise.
TimeSeries augment(const TimeSeries& series, const PreprocessConfig& cfg);

/// Sinusoidal time features: [sin(t/10000^(2k/n)), cos(t/10000^(2k/n))]_k.
Vector positional_encoding(double t, int n);

}  // namespace cpdsde
