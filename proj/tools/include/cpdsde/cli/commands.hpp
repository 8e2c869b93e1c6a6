#pragma once

#include "cpdsde/cli/run_config.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cpdsde::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kInputError = 2, kNumericalError = 3 };

struct GenerateOptions {
  std::filesystem::path out;
  std::uint64_t seed = 0;
  std::vector<int> rows;
  std::optional<long> length;
};

struct TrainOptions {
  std::filesystem::path data;
  std::filesystem::path config;
  std::filesystem::path out;
  /// Defaults to `<out stem>_loss.csv` next to the model.
  std::filesystem::path loss;
  std::optional<std::uint64_t> seed;
  std::string profile;
};

struct ScoreOptions {
  std::filesystem::path data;
  std::filesystem::path model;
  std::filesystem::path out;
  std::filesystem::path detections;
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
};

struct EvaluateOptions {
  std::filesystem::path scores;
  std::filesystem::path labels;
  std::filesystem::path config;
  std::filesystem::path out;
  std::string dataset;
  std::string seed;
};

struct RunCorpusOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  std::vector<int> rows;
  std::vector<std::uint64_t> seeds;
  std::optional<long> length;
  std::string profile;
  /// Worker threads; 0 reads CPD_SDE_THREADS and falls back to 1.
  unsigned threads = 0;
};

/// Each command reports errors to `err` and returns an ExitCode.
int cmd_generate(const GenerateOptions& opts, std::ostream& err);
int cmd_train(const TrainOptions& opts, std::ostream& err);
int cmd_score(const ScoreOptions& opts, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& opts, std::ostream& err);
int cmd_run_corpus(const RunCorpusOptions& opts, std::ostream& out, std::ostream& err);

/// One evaluation row: each metric at its own best threshold.
struct ReportRow {
  std::string dataset;
  std::string seed;
  std::array<double, 6> values{};
  std::array<double, 6> thresholds{};
  std::array<double, 3> nab_unclamped{};
};

ReportRow evaluate_scores(const ScoreSeries& scores, const ChangePointLabels& labels,
                          const RunConfig& cfg);

std::string report_header();
std::string report_line(const ReportRow& row);

/// Map of exceptions to exit codes, writing the message to `err`.
int exit_code_for(const std::exception& e, std::ostream& err);

}  // namespace cpdsde::cli
