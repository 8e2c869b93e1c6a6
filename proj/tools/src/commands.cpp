#include "cpdsde/cli/commands.hpp"

#include "cpdsde/errors.hpp"
#include "cpdsde/timeseries.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace cpdsde::cli {
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

RunConfig config_or_default(const fs::path& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory " + dir.string() + ": " + ec.message());
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string loss_csv(const std::vector<double>& history) {
  std::string out = "epoch,neg_elbo\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    out += std::to_string(i) + "," + format_double(history[i]) + "\n";
  }
  return out;
}

nlohmann::json model_document(const LatentSDEModel& model, const PreprocessConfig& pre) {
  auto doc = model_to_json(model);
  doc["preprocess"] = pre;
  return doc;
}

std::string plot_csv(const TimeSeries& series, const ScoreSeries& scores) {
  std::string out = "t";
  for (const auto& name : series.channel_names()) out += "," + name;
  out += ",score\n";
  for (std::size_t t = 0; t < series.length(); ++t) {
    out += std::to_string(t);
    for (std::size_t j = 0; j < series.dims(); ++j) out += "," + format_double(series(t, j));
    out += "," + format_double(scores[t]) + "\n";
  }
  return out;
}

PeakConfig peak_config(const ScoreSeries& scores, const ScoreConfig& cfg) {
  return {cfg.auto_prominence ? auto_prominence(scores) : cfg.prominence, cfg.min_peak_distance};
}

bool better(Metric m, double candidate, double incumbent) {
  return lower_is_better(m) ? candidate < incumbent : candidate > incumbent;
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CPD_SDE_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return 1;
}

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

// Population moments; any infinity makes the mean infinite.
Moments moments(const std::vector<double>& v) {
  if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  const bool any_inf = std::any_of(v.begin(), v.end(), [](double x) { return std::isinf(x); });
  if (any_inf) {
    const bool all_same = std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
    return {kInf, all_same ? 0.0 : kInf};
  }
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

}  // namespace

int exit_code_for(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  if (dynamic_cast<const TrainingError*>(&e) != nullptr) return kNumericalError;
  if (dynamic_cast<const FitError*>(&e) != nullptr) return kNumericalError;
  if (dynamic_cast<const InputError*>(&e) != nullptr) return kInputError;
  if (dynamic_cast<const MetricError*>(&e) != nullptr) return kInputError;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e) != nullptr) return kInputError;
  return kFailure;
}

std::string report_header() {
  std::string h = "dataset,seed";
  for (Metric m : kAllMetrics) h += "," + to_string(m);
  for (Metric m : kAllMetrics) h += ",threshold_" + to_string(m);
  h += ",nab_standard_unclamped,nab_lowfp_unclamped,nab_lowfn_unclamped";
  return h;
}

std::string report_line(const ReportRow& row) {
  std::string line = row.dataset + "," + row.seed;
  for (double v : row.values) line += "," + format_double(v);
  for (double v : row.thresholds) line += "," + format_double(v);
  for (double v : row.nab_unclamped) line += "," + format_double(v);
  return line;
}

ReportRow evaluate_scores(const ScoreSeries& scores, const ChangePointLabels& labels,
                          const RunConfig& cfg) {
  const auto peaks = peak_config(scores, cfg.score);
  const auto eval = cfg.eval();
  ReportRow row;
  for (std::size_t i = 0; i < kAllMetrics.size(); ++i) {
    const Metric m = kAllMetrics[i];
    const auto best = best_threshold_eval(scores, labels, m, peaks, eval);
    row.values[i] = best.value;
    row.thresholds[i] = best.threshold;
    if (i < 3) {
      NABConfig nc = cfg.nab;
      nc.profile = i == 0 ? NABProfile::standard()
                          : (i == 1 ? NABProfile::low_fp() : NABProfile::low_fn());
      row.nab_unclamped[i] = nab(labels, best.detections, nc).unclamped;
    }
  }
  return row;
}

int cmd_generate(const GenerateOptions& opts, std::ostream& err) {
  try {
    synth::CorpusParams params;
    if (opts.length) params.length = *opts.length;
    std::vector<int> rows = opts.rows;
    if (rows.empty()) {
      for (int i = 1; i <= synth::kCorpusSize; ++i) rows.push_back(i);
    }
    std::vector<synth::SyntheticDataset> datasets;
    for (int r : rows) datasets.push_back(synth::corpus_row(r, opts.seed, params));
    ensure_dir(opts.out);
    for (const auto& ds : datasets) synth::write_dataset(ds, opts.out);
    return kOk;
  } catch (const std::exception& e) {
    return exit_code_for(e, err);
  }
}

int cmd_train(const TrainOptions& opts, std::ostream& err) {
  try {
    RunConfig cfg = config_or_default(opts.config);
    if (!opts.profile.empty()) cfg.apply_profile(opts.profile);
    cfg.train.seed = opts.seed.value_or(cfg.seeds.front());
    const auto raw = load_csv(opts.data);
    const auto augmented = augment(raw, cfg.preprocess);
    const auto result = train(augmented, cfg.sde_for(raw.dims()), cfg.train);

    fs::path loss = opts.loss;
    if (loss.empty()) {
      loss = opts.out.parent_path() / (opts.out.stem().string() + "_loss.csv");
    }
    write_file_atomic(opts.out, model_document(result.model, cfg.preprocess).dump() + "\n");
    write_file_atomic(loss, loss_csv(result.loss_history));
    return kOk;
  } catch (const std::exception& e) {
    return exit_code_for(e, err);
  }
}

int cmd_score(const ScoreOptions& opts, std::ostream& err) {
  try {
    const RunConfig cfg = config_or_default(opts.config);
    const auto doc = read_json_file(opts.model);
    const auto model = model_from_json(doc);
    PreprocessConfig pre = cfg.preprocess;
    if (doc.contains("preprocess")) from_json(doc["preprocess"], pre);
    ScoreConfig sc = cfg.score;
    sc.seed = opts.seed.value_or(model.seed());
    const auto raw = load_csv(opts.data);
    const auto expected = static_cast<std::size_t>(model.obs_dim());
    const std::size_t got = pre.use_residuals ? 2 * raw.dims() : raw.dims();
    if (got != expected) {
      throw InputError("model expects " + std::to_string(expected) +
                       " augmented channels but the series gives " + std::to_string(got));
    }
    const auto result = score_pipeline(raw, model, pre, sc);
    save_scores(result.scores, opts.out);
    if (!opts.detections.empty()) {
      save_detections(result.detections, static_cast<long>(raw.length()), opts.detections);
    }
    return kOk;
  } catch (const std::exception& e) {
    return exit_code_for(e, err);
  }
}

int cmd_evaluate(const EvaluateOptions& opts, std::ostream& err) {
  try {
    const RunConfig cfg = config_or_default(opts.config);
    const auto scores = load_scores(opts.scores);
    const auto labels = load_labels(opts.labels);
    if (static_cast<long>(scores.series_length()) != labels.series_length()) {
      throw InputError("scores have length " + std::to_string(scores.series_length()) +
                       " but labels describe " + std::to_string(labels.series_length()));
    }
    ReportRow row = evaluate_scores(scores, labels, cfg);
    row.dataset = opts.dataset.empty() ? opts.scores.stem().string() : opts.dataset;
    row.seed = opts.seed;
    write_file_atomic(opts.out, report_header() + "\n" + report_line(row) + "\n");
    return kOk;
  } catch (const std::exception& e) {
    return exit_code_for(e, err);
  }
}

namespace {

struct Job {
  int row = 0;
  std::uint64_t seed = 0;
};

struct JobResult {
  bool ok = false;
  int exit_code = kOk;
  std::string error;
  ReportRow report;
};

JobResult run_job(const Job& job, const RunConfig& base, const fs::path& out) {
  JobResult result;
  RunConfig cfg = base;
  cfg.train.seed = job.seed;
  cfg.score.seed = job.seed;
  const auto ds = synth::corpus_row(job.row, cfg.corpus.data_seed(job.seed), cfg.corpus.params);
  const auto dir = out / "runs" / ds.directory_name() / ("seed_" + std::to_string(job.seed));
  ensure_dir(dir);

  const auto augmented = augment(ds.series, cfg.preprocess);
  const auto sde = cfg.sde_for(ds.series.dims());

  ReportRow best;
  bool have_best = false;
  EpochCallback on_epoch;
  if (cfg.best_epoch) {
    on_epoch = [&](int, const LatentSDEModel& model, double) {
      const auto scored = score_pipeline(ds.series, model, cfg.preprocess, cfg.score);
      const auto row = evaluate_scores(scored.scores, ds.labels, cfg);
      if (!have_best) {
        best = row;
        have_best = true;
        return;
      }
      for (std::size_t i = 0; i < kAllMetrics.size(); ++i) {
        if (better(kAllMetrics[i], row.values[i], best.values[i])) {
          best.values[i] = row.values[i];
          best.thresholds[i] = row.thresholds[i];
          if (i < 3) best.nab_unclamped[i] = row.nab_unclamped[i];
        }
      }
    };
  }
  const auto trained = train(augmented, sde, cfg.train, on_epoch);
  const auto scored = score_pipeline(ds.series, trained.model, cfg.preprocess, cfg.score);

  write_file_atomic(dir / "model.json",
                    model_document(trained.model, cfg.preprocess).dump() + "\n");
  write_file_atomic(dir / "loss.csv", loss_csv(trained.loss_history));
  save_scores(scored.scores, dir / "scores.json");
  write_file_atomic(dir / "plot.csv", plot_csv(ds.series, scored.scores));

  result.report = cfg.best_epoch && have_best ? best
                                              : evaluate_scores(scored.scores, ds.labels, cfg);
  result.report.dataset = ds.directory_name();
  result.report.seed = std::to_string(job.seed);
  result.ok = true;
  return result;
}

}  // namespace

int cmd_run_corpus(const RunCorpusOptions& opts, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::vector<Job> jobs;
  try {
    cfg = config_or_default(opts.config);
    if (!opts.profile.empty()) cfg.apply_profile(opts.profile);
    if (!opts.rows.empty()) cfg.corpus.rows = opts.rows;
    if (!opts.seeds.empty()) cfg.seeds = opts.seeds;
    if (opts.length) cfg.corpus.params.length = *opts.length;
    cfg.validate();
    std::vector<int> rows = cfg.corpus.rows;
    if (rows.empty()) {
      for (int i = 1; i <= synth::kCorpusSize; ++i) rows.push_back(i);
    }
    ensure_dir(opts.out);
    write_file_atomic(opts.out / "run_config.json", to_json(cfg).dump(2) + "\n");
    for (int r : rows) {
      if (cfg.corpus.per_seed_data) {
        for (auto s : cfg.seeds) {
          const auto ds = synth::corpus_row(r, s, cfg.corpus.params);
          synth::write_dataset(ds, opts.out / "corpus" / ("seed_" + std::to_string(s)));
        }
      } else {
        const auto ds = synth::corpus_row(r, cfg.corpus.seed, cfg.corpus.params);
        synth::write_dataset(ds, opts.out / "corpus");
      }
      for (auto s : cfg.seeds) jobs.push_back({r, s});
    }
  } catch (const std::exception& e) {
    return exit_code_for(e, err);
  }

  std::vector<JobResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      std::ostringstream msg;
      try {
        results[i] = run_job(jobs[i], cfg, opts.out);
      } catch (const std::exception& e) {
        results[i].ok = false;
        results[i].exit_code = exit_code_for(e, msg);
        results[i].error = e.what();
      }
      std::lock_guard lock(log_mutex);
      out << "row " << jobs[i].row << " seed " << jobs[i].seed << ": "
          << (results[i].ok ? "ok" : "FAILED " + results[i].error) << "\n";
      out.flush();
    }
  };
  const unsigned n_threads =
      std::min<unsigned>(resolve_threads(opts.threads), static_cast<unsigned>(jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  try {
    std::string report = report_header() + "\n";
    std::string failures = "dataset_row,seed,exit_code,error\n";
    std::map<std::string, std::array<std::vector<double>, 6>> per_dataset;
    std::vector<std::string> dataset_order;
    std::map<std::uint64_t, std::array<std::vector<double>, 6>> per_seed;
    int worst = kOk;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const auto& r = results[i];
      if (!r.ok) {
        failures += std::to_string(jobs[i].row) + "," + std::to_string(jobs[i].seed) + "," +
                    std::to_string(r.exit_code) + ",\"" + r.error + "\"\n";
        worst = std::max(worst, r.exit_code == kOk ? kFailure : r.exit_code);
        continue;
      }
      report += report_line(r.report) + "\n";
      if (!per_dataset.contains(r.report.dataset)) dataset_order.push_back(r.report.dataset);
      for (std::size_t m = 0; m < 6; ++m) {
        per_dataset[r.report.dataset][m].push_back(r.report.values[m]);
        per_seed[jobs[i].seed][m].push_back(r.report.values[m]);
      }
    }
    write_file_atomic(opts.out / "report.csv", report);
    write_file_atomic(opts.out / "failures.csv", failures);

    ensure_dir(opts.out / "tables");
    for (std::size_t m = 0; m < 6; ++m) {
      std::string table = "dataset,mean,std\n";
      for (const auto& name : dataset_order) {
        const auto mo = moments(per_dataset[name][m]);
        table += name + "," + format_double(mo.mean) + "," + format_double(mo.std) + "\n";
      }
      write_file_atomic(opts.out / "tables" / (to_string(kAllMetrics[m]) + ".csv"), table);
    }

    std::array<std::vector<double>, 6> seed_means;
    for (const auto& [seed, values] : per_seed) {
      for (std::size_t m = 0; m < 6; ++m) seed_means[m].push_back(moments(values[m]).mean);
    }
    std::string mean_line = "mean";
    std::string std_line = "std";
    std::string header = "statistic";
    for (std::size_t m = 0; m < 6; ++m) {
      const auto mo = moments(seed_means[m]);
      header += "," + to_string(kAllMetrics[m]);
      mean_line += "," + format_double(mo.mean);
      std_line += "," + format_double(mo.std);
    }
    write_file_atomic(opts.out / "aggregate.csv",
                      header + "\n" + mean_line + "\n" + std_line + "\n");
    return worst;
  } catch (const std::exception& e) {
    return exit_code_for(e, err);
  }
}

}  // namespace cpdsde::cli
