#include "cpdsde/preprocess.hpp"

#include "cpdsde/errors.hpp"

#include <Eigen/QR>
#include <nlohmann/json.hpp>

#include <cmath>
#include <string>

namespace cpdsde {

void PreprocessConfig::validate() const {
  if (ar_order < 1) throw InputError("preprocess.ar_order must be >= 1");
  if (diff_order != 0 && diff_order != 1) throw InputError("preprocess.diff_order must be 0 or 1");
  if (n_pos_encodings < 2 || n_pos_encodings % 2 != 0) {
    throw InputError("preprocess.n_pos_encodings must be even and >= 2");
  }
  if (!(scale_eps > 0.0)) throw InputError("preprocess.scale_eps must be positive");
}

void to_json(nlohmann::json& j, const PreprocessConfig& cfg) {
  j = nlohmann::json{{"use_residuals", cfg.use_residuals},
                     {"ar_order", cfg.ar_order},
                     {"diff_order", cfg.diff_order},
                     {"n_pos_encodings", cfg.n_pos_encodings},
                     {"scale_eps", cfg.scale_eps}};
}

void from_json(const nlohmann::json& j, PreprocessConfig& cfg) {
  cfg.use_residuals = j.value("use_residuals", cfg.use_residuals);
  cfg.ar_order = j.value("ar_order", cfg.ar_order);
  cfg.diff_order = j.value("diff_order", cfg.diff_order);
  cfg.n_pos_encodings = j.value("n_pos_encodings", cfg.n_pos_encodings);
  cfg.scale_eps = j.value("scale_eps", cfg.scale_eps);
}

ScaleResult standard_scale(const TimeSeries& series, double eps) {
  const auto& x = series.values();
  Matrix out(x.rows(), x.cols());
  std::vector<std::size_t> degenerate;
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).sum() / n;
    const double var = (x.col(j).array() - mean).square().sum() / n;
    if (var < eps) {
      out.col(j).setZero();
      degenerate.push_back(static_cast<std::size_t>(j));
    } else {
      out.col(j) = (x.col(j).array() - mean) / std::sqrt(var);
    }
  }
  return {TimeSeries(std::move(out), series.channel_names(), series.dt()), std::move(degenerate)};
}

namespace {

Vector difference(const Vector& x, int d) {
  if (d == 0) return x;
  return x.tail(x.size() - 1) - x.head(x.size() - 1);
}

}  // namespace

ARModel fit_ar(const Vector& channel, int order, int diff_order) {
  if (order < 1) throw FitError("AR order must be >= 1");
  const Eigen::Index n = channel.size();
  if (n - diff_order <= 2 * order) {
    throw FitError("need more than " + std::to_string(2 * order) + " differenced rows for AR(" +
                   std::to_string(order) + ")");
  }
  const Vector y = difference(channel, diff_order);
  const Eigen::Index rows = y.size() - order;
  Eigen::MatrixXd design(rows, order + 1);
  Eigen::VectorXd target(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index t = r + order;
    design(r, 0) = 1.0;
    for (int k = 0; k < order; ++k) design(r, k + 1) = y(t - 1 - k);
    target(r) = y(t);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) {
    throw FitError("rank-deficient AR design matrix (rank " + std::to_string(qr.rank()) + " of " +
                   std::to_string(design.cols()) + ")");
  }
  const Eigen::VectorXd beta = qr.solve(target);
  ARModel model;
  model.intercept = beta(0);
  model.coefficients = beta.tail(order);
  model.diff_order = diff_order;
  if (!model.coefficients.allFinite() || !std::isfinite(model.intercept)) {
    throw FitError("non-finite AR coefficients");
  }
  return model;
}

ARModel fit_ar_or_fallback(const Vector& channel, int order, int diff_order) {
  try {
    return fit_ar(channel, order, diff_order);
  } catch (const FitError&) {
    ARModel model;
    model.coefficients = Vector::Zero(order);
    model.diff_order = diff_order;
    const Vector y = difference(channel, diff_order);
    model.intercept = y.size() > 0 ? y.mean() : 0.0;
    return model;
  }
}

Vector residuals(const Vector& channel, const ARModel& model) {
  const Eigen::Index n = channel.size();
  const int p = model.order();
  const int d = model.diff_order;
  Vector r = Vector::Zero(n);
  const Vector y = difference(channel, d);
  // y[i] corresponds to channel[i + d].
  for (Eigen::Index t = p + d; t < n; ++t) {
    const Eigen::Index i = t - d;
    double pred = model.intercept;
    for (int k = 0; k < p; ++k) pred += model.coefficients(k) * y(i - 1 - k);
    const double level = d == 1 ? channel(t - 1) : 0.0;
    r(t) = channel(t) - (level + pred);
  }
  return r;
}

TimeSeries residuals(const TimeSeries& series, const std::vector<ARModel>& models) {
  if (models.size() != series.dims()) {
    throw ContractError("residuals: one AR model per channel required");
  }
  Matrix out(series.values().rows(), series.values().cols());
  for (std::size_t j = 0; j < series.dims(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = residuals(series.column(j), models[j]);
  }
  return TimeSeries(std::move(out), series.channel_names(), series.dt());
}

TimeSeries augment(const TimeSeries& series, const PreprocessConfig& cfg) {
  cfg.validate();
  auto scaled = standard_scale(series, cfg.scale_eps).series;
  if (!cfg.use_residuals) return scaled;

  const Eigen::Index T = scaled.values().rows();
  const Eigen::Index D = scaled.values().cols();
  const Eigen::Index warmup = cfg.ar_order + cfg.diff_order;
  Matrix out(T, 2 * D);
  out.leftCols(D) = scaled.values();
  std::vector<std::string> names = scaled.channel_names();
  for (Eigen::Index j = 0; j < D; ++j) {
    const Vector channel = scaled.values().col(j);
    const ARModel model = fit_ar_or_fallback(channel, cfg.ar_order, cfg.diff_order);
    Vector r = residuals(channel, model);
    if (warmup < T) {
      auto tail = r.tail(T - warmup);
      const double mean = tail.mean();
      const double var = (tail.array() - mean).square().mean();
      if (var < cfg.scale_eps) {
        tail.setZero();
      } else {
        tail = (tail.array() - mean) / std::sqrt(var);
      }
    }
    out.col(D + j) = r;
    names.push_back(scaled.channel_names()[static_cast<std::size_t>(j)] + "_resid");
  }
  return TimeSeries(std::move(out), std::move(names), series.dt());
}

Vector positional_encoding(double t, int n) {
  Vector pe(n);
  for (int k = 0; k < n / 2; ++k) {
    const double freq = std::pow(10000.0, -2.0 * k / static_cast<double>(n));
    pe(2 * k) = std::sin(t * freq);
    pe(2 * k + 1) = std::cos(t * freq);
  }
  return pe;
}

}  // namespace cpdsde
