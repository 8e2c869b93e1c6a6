#include "cpdsde/scoring.hpp"

#include "cpdsde/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace cpdsde {

void ScoreConfig::validate() const {
  if (lags < 1) throw InputError("score.lags must be >= 1");
  if (!(obs_variance > 0.0)) throw InputError("score.obs_variance must be positive");
  if (n_trajectories < 1) throw InputError("score.n_trajectories must be >= 1");
  if (!(prominence >= 0.0)) throw InputError("score.prominence must be >= 0");
  if (min_peak_distance < 1) throw InputError("score.min_peak_distance must be >= 1");
}

void to_json(nlohmann::json& j, const ScoreConfig& cfg) {
  j = nlohmann::json{{"lags", cfg.lags},
                     {"obs_variance", cfg.obs_variance},
                     {"n_trajectories", cfg.n_trajectories},
                     {"prominence", cfg.prominence},
                     {"min_peak_distance", cfg.min_peak_distance},
                     {"auto_prominence", cfg.auto_prominence},
                     {"seed", cfg.seed}};
}

void from_json(const nlohmann::json& j, ScoreConfig& cfg) {
  cfg.lags = j.value("lags", cfg.lags);
  cfg.obs_variance = j.value("obs_variance", cfg.obs_variance);
  cfg.n_trajectories = j.value("n_trajectories", cfg.n_trajectories);
  cfg.prominence = j.value("prominence", cfg.prominence);
  cfg.min_peak_distance = j.value("min_peak_distance", cfg.min_peak_distance);
  cfg.auto_prominence = j.value("auto_prominence", cfg.auto_prominence);
  cfg.seed = j.value("seed", cfg.seed);
}

Vector mc_log_likelihood(const Vector& x, const TrajectoryBundle& bundle, std::size_t v, double c) {
  if (v >= bundle.length()) throw ContractError("mc_log_likelihood: time index out of range");
  const Matrix& means = bundle.decoded[v];
  if (means.rows() == 0) throw ContractError("mc_log_likelihood: empty bundle");
  if (means.cols() != x.size()) throw ContractError("mc_log_likelihood: dimension mismatch");
  const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi * c);
  const double log_n = std::log(static_cast<double>(means.rows()));
  Vector out(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const auto sq = (means.col(j).array() - x(j)).square();
    // log Σ exp(-sq/2c) = -min/2c + log Σ exp(-(sq - min)/2c)
    const double min_sq = sq.minCoeff();
    const double acc = (-(sq - min_sq) / (2.0 * c)).exp().sum();
    out(j) = log_norm - min_sq / (2.0 * c) + std::log(acc) - log_n;
  }
  return out;
}

ScoreMatrix cpd_score(const TimeSeries& series, const TrajectoryBundle& bundle, int lags, double c) {
  if (lags < 1) throw ContractError("cpd_score: lags must be >= 1");
  if (bundle.length() < series.length()) {
    throw ContractError("cpd_score: bundle covers " + std::to_string(bundle.length()) +
                        " steps, series has " + std::to_string(series.length()));
  }
  if (bundle.obs_dim() != series.dims()) throw ContractError("cpd_score: dimension mismatch");
  const auto T = static_cast<Eigen::Index>(series.length());
  const auto D = static_cast<Eigen::Index>(series.dims());
  ScoreMatrix scores = ScoreMatrix::Zero(T, D);
  for (Eigen::Index t = 1; t < T; ++t) {
    const Vector x = series.values().row(t).transpose();
    const auto ut = static_cast<std::size_t>(t);
    const Vector current = mc_log_likelihood(x, bundle, ut, c);
    const Eigen::Index max_lag = std::min<Eigen::Index>(lags, t);
    Vector acc = Vector::Zero(D);
    for (Eigen::Index l = 1; l <= max_lag; ++l) {
      acc += current - mc_log_likelihood(x, bundle, static_cast<std::size_t>(t - l), c);
    }
    scores.row(t) = acc.transpose();
  }
  return scores;
}

ScoreSeries max_aggregate(const ScoreMatrix& m) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index t = 0; t < m.rows(); ++t) out[static_cast<std::size_t>(t)] = m.row(t).maxCoeff();
  return ScoreSeries(std::move(out));
}

namespace {

std::vector<std::size_t> local_maxima(const std::vector<double>& s) {
  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] > s[i - 1] && s[i] > s[i + 1]) peaks.push_back(i);
  }
  return peaks;
}

double prominence_of(const std::vector<double>& s, std::size_t peak) {
  const double h = s[peak];
  double left_min = h;
  for (std::size_t i = peak; i-- > 0;) {
    if (s[i] > h) break;
    left_min = std::min(left_min, s[i]);
  }
  double right_min = h;
  for (std::size_t i = peak + 1; i < s.size(); ++i) {
    if (s[i] > h) break;
    right_min = std::min(right_min, s[i]);
  }
  return h - std::max(left_min, right_min);
}

}  // namespace

std::vector<double> peak_prominences(const std::vector<double>& s) {
  std::vector<double> out(s.size(), 0.0);
  for (auto p : local_maxima(s)) out[p] = prominence_of(s, p);
  return out;
}

Detections prominence_peaks(const ScoreSeries& s, double threshold, double prominence,
                            int min_distance) {
  const auto& v = s.scores();
  std::vector<std::size_t> candidates;
  for (auto p : local_maxima(v)) {
    if (v[p] >= threshold && prominence_of(v, p) >= prominence) candidates.push_back(p);
  }
  if (min_distance > 1 && candidates.size() > 1) {
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return v[candidates[a]] > v[candidates[b]];
    });
    std::vector<bool> removed(candidates.size(), false);
    for (auto k : order) {
      if (removed[k]) continue;
      for (std::size_t other = 0; other < candidates.size(); ++other) {
        if (other == k || removed[other]) continue;
        const auto dist = candidates[k] > candidates[other] ? candidates[k] - candidates[other]
                                                            : candidates[other] - candidates[k];
        if (dist < static_cast<std::size_t>(min_distance)) removed[other] = true;
      }
    }
    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      if (!removed[k]) kept.push_back(candidates[k]);
    }
    candidates = std::move(kept);
  }
  std::vector<long> positions;
  std::vector<double> heights;
  for (auto p : candidates) {
    positions.push_back(static_cast<long>(p));
    heights.push_back(v[p]);
  }
  return Detections(std::move(positions), std::move(heights));
}

double auto_prominence(const ScoreSeries& s) {
  auto v = s.scores();
  if (v.empty()) return 0.0;
  const double max = *std::max_element(v.begin(), v.end());
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double median = *mid;
  if (v.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(v.begin(), mid));
  }
  return 0.5 * (max - median);
}

PipelineResult score_pipeline(const TimeSeries& raw, const LatentSDEModel& model,
                              const PreprocessConfig& pre, const ScoreConfig& cfg,
                              double threshold) {
  cfg.validate();
  auto augmented = augment(raw, pre);
  const auto bundle = sample_posterior(model, augmented,
                                       static_cast<std::size_t>(cfg.n_trajectories), cfg.seed);
  auto per_dim = cpd_score(augmented, bundle, cfg.lags, cfg.obs_variance);
  auto scores = max_aggregate(per_dim);
  const double prom = cfg.auto_prominence ? auto_prominence(scores) : cfg.prominence;
  auto detections = prominence_peaks(scores, threshold, prom, cfg.min_peak_distance);
  return {std::move(augmented), std::move(per_dim), std::move(scores), std::move(detections)};
}

}  // namespace cpdsde
