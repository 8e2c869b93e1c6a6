#include "cpdsde/metrics.hpp"

#include "cpdsde/errors.hpp"
#include "cpdsde/scoring.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace cpdsde {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_positions(const ChangePointLabels& truth, const Detections& preds) {
  for (long p : preds.positions()) {
    if (p >= truth.series_length()) {
      throw InputError("detection " + std::to_string(p) + " outside series of length " +
                       std::to_string(truth.series_length()));
    }
  }
}

std::vector<long> boundaries(std::vector<long> cuts, long T) {
  std::set<long> s;
  for (long c : cuts) {
    if (c > 0 && c < T) s.insert(c);
  }
  std::vector<long> out{0};
  out.insert(out.end(), s.begin(), s.end());
  out.push_back(T);
  return out;
}

}  // namespace

void MatchConfig::validate() const {
  if (margin < 0) throw InputError("match.margin must be >= 0");
}

void to_json(nlohmann::json& j, const MatchConfig& cfg) { j = {{"margin", cfg.margin}}; }

void from_json(const nlohmann::json& j, MatchConfig& cfg) {
  cfg = MatchConfig{};
  for (const auto& [key, value] : j.items()) {
    if (key == "margin") {
      cfg.margin = value.get<long>();
    } else {
      throw InputError("unknown match key '" + key + "'");
    }
  }
  cfg.validate();
}

NABProfile NABProfile::by_name(std::string_view name) {
  if (name == "standard") return standard();
  if (name == "lowfp") return low_fp();
  if (name == "lowfn") return low_fn();
  throw InputError("unknown NAB profile '" + std::string(name) + "'");
}

void NABConfig::validate() const {
  if (!(window_fraction > 0.0) || !std::isfinite(window_fraction)) {
    throw InputError("nab.window_fraction must be positive");
  }
  if (!(steepness >= 0.0) || !std::isfinite(steepness)) {
    throw InputError("nab.steepness must be >= 0");
  }
  if (!(profile.a_tp > profile.a_fp)) throw InputError("nab profile needs A_TP > A_FP");
  if (!(profile.a_fn < 0.0)) throw InputError("nab profile needs A_FN < 0");
}

void to_json(nlohmann::json& j, const NABConfig& cfg) {
  j = {{"profile", cfg.profile.name},
       {"window_fraction", cfg.window_fraction},
       {"steepness", cfg.steepness}};
}

void from_json(const nlohmann::json& j, NABConfig& cfg) {
  cfg = NABConfig{};
  for (const auto& [key, value] : j.items()) {
    if (key == "profile") {
      cfg.profile = NABProfile::by_name(value.get<std::string>());
    } else if (key == "window_fraction") {
      cfg.window_fraction = value.get<double>();
    } else if (key == "steepness") {
      cfg.steepness = value.get<double>();
    } else {
      throw InputError("unknown nab key '" + key + "'");
    }
  }
  cfg.validate();
}

F1Result f1(const ChangePointLabels& truth, const Detections& preds, long margin) {
  if (margin < 0) throw InputError("margin must be >= 0");
  check_positions(truth, preds);
  const auto& t = truth.positions();
  const auto& p = preds.positions();
  F1Result r;
  if (t.empty() && p.empty()) return {1.0, 1.0, 1.0, 0};
  std::vector<bool> claimed(p.size(), false);
  for (long tau : t) {
    long best = -1;
    long best_dist = 0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (claimed[j]) continue;
      const long d = std::abs(p[j] - tau);
      if (d < margin && (best < 0 || d < best_dist)) {
        best = static_cast<long>(j);
        best_dist = d;
      }
    }
    if (best >= 0) {
      claimed[static_cast<std::size_t>(best)] = true;
      ++r.true_positives;
    }
  }
  if (p.empty() || r.true_positives == 0) return r;
  r.precision = static_cast<double>(r.true_positives) / static_cast<double>(p.size());
  r.recall = t.empty() ? 0.0 : static_cast<double>(r.true_positives) / static_cast<double>(t.size());
  r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

double covering(const ChangePointLabels& truth, const Detections& preds) {
  const long T = truth.series_length();
  const auto tb = boundaries(truth.positions(), T);
  const auto pb = boundaries(preds.positions(), T);
  double total = 0.0;
  for (std::size_t a = 0; a + 1 < tb.size(); ++a) {
    const long a0 = tb[a];
    const long a1 = tb[a + 1];
    double best = 0.0;
    for (std::size_t b = 0; b + 1 < pb.size(); ++b) {
      const long b0 = pb[b];
      const long b1 = pb[b + 1];
      const long inter = std::max(0L, std::min(a1, b1) - std::max(a0, b0));
      if (inter == 0) continue;
      const long uni = std::max(a1, b1) - std::min(a0, b0);
      best = std::max(best, static_cast<double>(inter) / static_cast<double>(uni));
    }
    total += static_cast<double>(a1 - a0) * best;
  }
  return total / static_cast<double>(T);
}

long nab_window(const ChangePointLabels& truth, double window_fraction) {
  if (truth.positions().empty()) throw MetricError("NAB is undefined without labels");
  const double w = window_fraction * static_cast<double>(truth.series_length()) /
                   static_cast<double>(truth.positions().size());
  return std::max(1L, std::lround(w));
}

double nab_sigmoid(const NABProfile& profile, double delta, double d) {
  return (profile.a_tp - profile.a_fp) / (1.0 + std::exp(delta * d)) - 1.0;
}

NABResult nab(const ChangePointLabels& truth, const Detections& preds, const NABConfig& cfg) {
  cfg.validate();
  check_positions(truth, preds);
  const auto& t = truth.positions();
  const auto& p = preds.positions();
  NABResult r;
  r.window = nab_window(truth, cfg.window_fraction);
  const double delta = cfg.steepness > 0.0 ? cfg.steepness : 5.0 / static_cast<double>(r.window);
  const auto& A = cfg.profile;

  std::vector<bool> in_window(p.size(), false);
  for (long tau : t) {
    bool hit = false;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (p[j] < tau || p[j] >= tau + r.window) continue;
      in_window[j] = true;
      if (!hit) {
        hit = true;
        r.raw += nab_sigmoid(A, delta, static_cast<double>(p[j] - tau));
      }
    }
    if (!hit) r.raw += A.a_fn;
  }
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (!in_window[j]) r.raw += A.a_fp;
  }

  const double n = static_cast<double>(t.size());
  r.perfect = n * nab_sigmoid(A, delta, 0.0);
  r.null = n * A.a_fn;
  r.unclamped = 100.0 * (r.raw - r.null) / (r.perfect - r.null);
  r.score = std::clamp(r.unclamped, 0.0, 100.0);
  return r;
}

double rcpd(const ChangePointLabels& truth, const Detections& preds) {
  check_positions(truth, preds);
  const auto& p = preds.positions();
  const auto& t = truth.positions();
  if (p.empty()) return kInf;
  if (t.empty()) throw MetricError("RCPD is undefined for detections without labels");
  double total = 0.0;
  for (long x : p) {
    long best = std::numeric_limits<long>::max();
    for (long tau : t) best = std::min(best, std::abs(tau - x));
    total += static_cast<double>(best);
  }
  return total / (static_cast<double>(truth.series_length()) * static_cast<double>(p.size()));
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::nab_standard:
      return "nab_standard";
    case Metric::nab_lowfp:
      return "nab_lowfp";
    case Metric::nab_lowfn:
      return "nab_lowfn";
    case Metric::f1:
      return "f1";
    case Metric::covering:
      return "covering";
    case Metric::rcpd:
      return "rcpd";
  }
  return "unknown";
}

Metric metric_from_string(std::string_view name) {
  for (Metric m : kAllMetrics) {
    if (to_string(m) == name) return m;
  }
  throw InputError("unknown metric '" + std::string(name) + "'");
}

bool lower_is_better(Metric m) { return m == Metric::rcpd; }

double evaluate_metric(Metric m, const ChangePointLabels& truth, const Detections& preds,
                       const EvalConfig& cfg) {
  auto with_profile = [&](NABProfile profile) {
    NABConfig c = cfg.nab;
    c.profile = std::move(profile);
    return nab(truth, preds, c).score;
  };
  switch (m) {
    case Metric::nab_standard:
      return with_profile(NABProfile::standard());
    case Metric::nab_lowfp:
      return with_profile(NABProfile::low_fp());
    case Metric::nab_lowfn:
      return with_profile(NABProfile::low_fn());
    case Metric::f1:
      return f1(truth, preds, cfg.match.margin).f1;
    case Metric::covering:
      return covering(truth, preds);
    case Metric::rcpd:
      return rcpd(truth, preds);
  }
  throw ContractError("unhandled metric");
}

ThresholdResult best_threshold_eval(const ScoreSeries& scores, const ChangePointLabels& truth,
                                    Metric metric, const PeakConfig& peaks,
                                    const EvalConfig& cfg) {
  if (static_cast<long>(scores.series_length()) != truth.series_length()) {
    throw InputError("scores have length " + std::to_string(scores.series_length()) +
                     " but labels expect " + std::to_string(truth.series_length()));
  }
  const auto all = prominence_peaks(scores, -kInf, peaks.prominence, peaks.min_distance);
  std::vector<double> thresholds(all.peak_scores().begin(), all.peak_scores().end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(kInf);

  const bool lower = lower_is_better(metric);
  ThresholdResult best;
  bool have = false;
  for (double th : thresholds) {
    Detections dets = std::isinf(th) ? Detections{}
                                     : prominence_peaks(scores, th, peaks.prominence,
                                                        peaks.min_distance);
    const double v = evaluate_metric(metric, truth, dets, cfg);
    const bool better = !have || (lower ? v <= best.value : v >= best.value);
    if (better) {
      best = {v, th, std::move(dets)};
      have = true;
    }
  }
  return best;
}

}  // namespace cpdsde
