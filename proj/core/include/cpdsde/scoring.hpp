#pragma once

#include "cpdsde/latent_sde.hpp"
#include "cpdsde/preprocess.hpp"
#include "cpdsde/timeseries.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <cstdint>
#include <limits>

namespace cpdsde {

struct ScoreConfig {
  int lags = 5;
  double obs_variance = 0.1;
  int n_trajectories = 100;
  double prominence = 0.0;
  int min_peak_distance = 1;
  /// When set, prominence is replaced by 0.5·(max - median) of the score.
  bool auto_prominence = false;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const ScoreConfig& cfg);
void from_json(const nlohmann::json& j, ScoreConfig& cfg);

/// T×D per-dimension scores.
using ScoreMatrix = Matrix;

/// Per-dimension log((1/N)·Σ_i N(x[j] | decoded[i][v][j], c)), log-sum-exp.
Vector mc_log_likelihood(const Vector& x, const TrajectoryBundle& bundle, std::size_t v, double c);

/// score[t][j] = Σ_{l=1..min(L,t)} (ll(x_t | t) - ll(x_t | t-l)); row 0 is zero.
ScoreMatrix cpd_score(const TimeSeries& series, const TrajectoryBundle& bundle, int lags, double c);

/// out[t] = max_j m[t][j].
ScoreSeries max_aggregate(const ScoreMatrix& m);

/// Topographic prominence of each strict local maximum (edges excluded);
/// entries for non-peaks are zero.
std::vector<double> peak_prominences(const std::vector<double>& s);

/// Strict local maxima with score >= threshold and prominence >= the given
/// minimum; then among peaks closer than min_distance the higher one wins
/// (ties go to the earlier index).
Detections prominence_peaks(const ScoreSeries& s, double threshold, double prominence,
                            int min_distance);

/// 0.5·(max - median) of the series.
double auto_prominence(const ScoreSeries& s);

struct PipelineResult {
  TimeSeries augmented;
  ScoreMatrix per_dimension;
  ScoreSeries scores;
  Detections detections;
};

/// augment → sample_posterior → cpd_score → max_aggregate → prominence_peaks.
PipelineResult score_pipeline(const TimeSeries& raw, const LatentSDEModel& model,
                              const PreprocessConfig& pre, const ScoreConfig& cfg,
                              double threshold = -std::numeric_limits<double>::infinity());

}  // namespace cpdsde
