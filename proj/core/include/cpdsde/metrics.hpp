#pragma once

#include "cpdsde/timeseries.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <string>
#include <string_view>

namespace cpdsde {

struct MatchConfig {
  long margin = 5;

  void validate() const;
};

void to_json(nlohmann::json& j, const MatchConfig& cfg);
void from_json(const nlohmann::json& j, MatchConfig& cfg);

struct NABProfile {
  std::string name;
  double a_tp = 1.0;
  double a_fp = -0.11;
  double a_fn = -1.0;
  double a_tn = 1.0;

  static NABProfile standard() { return {"standard", 1.0, -0.11, -1.0, 1.0}; }
  static NABProfile low_fp() { return {"lowfp", 1.0, -0.22, -1.0, 1.0}; }
  static NABProfile low_fn() { return {"lowfn", 1.0, -0.11, -2.0, 1.0}; }
  static NABProfile by_name(std::string_view name);
};

struct NABConfig {
  NABProfile profile = NABProfile::standard();
  double window_fraction = 0.10;
  /// Sigmoid steepness; 0 selects 5 / window_length.
  double steepness = 0.0;

  void validate() const;
};

void to_json(nlohmann::json& j, const NABConfig& cfg);
void from_json(const nlohmann::json& j, NABConfig& cfg);

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long true_positives = 0;
};

F1Result f1(const ChangePointLabels& truth, const Detections& preds, long margin = 5);

double covering(const ChangePointLabels& truth, const Detections& preds);

struct NABResult {
  double score = 0.0;  ///< clamped to [0, 100]
  double unclamped = 0.0;
  double raw = 0.0;
  double perfect = 0.0;
  double null = 0.0;
  long window = 0;
};

/// Window length max(1, round(fraction·T/|truth|)).
long nab_window(const ChangePointLabels& truth, double window_fraction);

/// (A_TP - A_FP)/(1 + exp(δ·d)) - 1 for a detection d samples after the label.
double nab_sigmoid(const NABProfile& profile, double delta, double d);

NABResult nab(const ChangePointLabels& truth, const Detections& preds, const NABConfig& cfg = {});

/// Mean distance from each prediction to its nearest label, divided by T.
double rcpd(const ChangePointLabels& truth, const Detections& preds);

enum class Metric { nab_standard, nab_lowfp, nab_lowfn, f1, covering, rcpd };

inline constexpr std::array<Metric, 6> kAllMetrics = {Metric::nab_standard, Metric::nab_lowfp,
                                                      Metric::nab_lowfn,    Metric::f1,
                                                      Metric::covering,     Metric::rcpd};

std::string to_string(Metric m);
Metric metric_from_string(std::string_view name);

/// Metrics are maximised except RCPD.
bool lower_is_better(Metric m);

struct EvalConfig {
  MatchConfig match;
  NABConfig nab;
};

double evaluate_metric(Metric m, const ChangePointLabels& truth, const Detections& preds,
                       const EvalConfig& cfg = {});

struct PeakConfig {
  double prominence = 0.0;
  int min_distance = 1;
};

struct ThresholdResult {
  double value = 0.0;
  double threshold = 0.0;
  Detections detections;
};

/// Sweeps thresholds over the unique peak heights plus +inf and keeps the
/// best value; ties go to the higher threshold.
ThresholdResult best_threshold_eval(const ScoreSeries& scores, const ChangePointLabels& truth,
                                    Metric metric, const PeakConfig& peaks,
                                    const EvalConfig& cfg = {});

}  // namespace cpdsde
