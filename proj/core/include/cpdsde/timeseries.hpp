#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace cpdsde {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// T×D observation matrix. Rows are timestamps, columns are channels.
///
/// Construction validates the invariants (T >= 2, D >= 1, finite entries,
/// distinct channel names); a constructed series is never mutated.
class TimeSeries {
 public:
  TimeSeries(Matrix values, std::vector<std::string> channel_names, double dt = 1.0);

  /// Builds a series with generated channel names `x0, x1, ...`.
  static TimeSeries from_values(Matrix values, double dt = 1.0);

  [[nodiscard]] const Matrix& values() const noexcept { return values_; }
  [[nodiscard]] const std::vector<std::string>& channel_names() const noexcept { return names_; }
  [[nodiscard]] double dt() const noexcept { return dt_; }
  [[nodiscard]] std::size_t length() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  [[nodiscard]] std::size_t dims() const noexcept { return static_cast<std::size_t>(values_.cols()); }

  [[nodiscard]] double operator()(std::size_t t, std::size_t j) const {
    return values_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
  }
  [[nodiscard]] Vector column(std::size_t j) const { return values_.col(static_cast<Eigen::Index>(j)); }

  friend bool operator==(const TimeSeries& a, const TimeSeries& b) {
    return a.dt_ == b.dt_ && a.names_ == b.names_ && a.values_ == b.values_;
  }

 private:
  Matrix values_;
  std::vector<std::string> names_;
  double dt_;
};

/// Ground-truth change points: strictly increasing, each in [1, T-1].
class ChangePointLabels {
 public:
  ChangePointLabels(std::vector<long> positions, long series_length);

  [[nodiscard]] const std::vector<long>& positions() const noexcept { return positions_; }
  [[nodiscard]] long series_length() const noexcept { return length_; }
  [[nodiscard]] std::size_t size() const noexcept { return positions_.size(); }
  [[nodiscard]] bool empty() const noexcept { return positions_.empty(); }

  friend bool operator==(const ChangePointLabels&, const ChangePointLabels&) = default;

 private:
  std::vector<long> positions_;
  long length_;
};

/// Per-timestamp change-point score.
class ScoreSeries {
 public:
  explicit ScoreSeries(std::vector<double> scores);

  [[nodiscard]] const std::vector<double>& scores() const noexcept { return scores_; }
  [[nodiscard]] long series_length() const noexcept { return static_cast<long>(scores_.size()); }
  [[nodiscard]] double operator[](std::size_t t) const { return scores_[t]; }

  friend bool operator==(const ScoreSeries&, const ScoreSeries&) = default;

 private:
  std::vector<double> scores_;
};

/// Detected change points with the score of each peak. Position 0 is allowed.
class Detections {
 public:
  Detections() = default;
  Detections(std::vector<long> positions, std::vector<double> peak_scores);

  /// Detections with all peak scores set to 1; handy for metric fixtures.
  static Detections at(std::vector<long> positions);

  [[nodiscard]] const std::vector<long>& positions() const noexcept { return positions_; }
  [[nodiscard]] const std::vector<double>& peak_scores() const noexcept { return peak_scores_; }
  [[nodiscard]] std::size_t size() const noexcept { return positions_.size(); }
  [[nodiscard]] bool empty() const noexcept { return positions_.empty(); }

  friend bool operator==(const Detections&, const Detections&) = default;

 private:
  std::vector<long> positions_;
  std::vector<double> peak_scores_;
};

/// Parses a comma-separated file with a header row. When `has_time_column`
/// is set, or the first header cell is `t`/`time`, the first column is
/// checked for strict monotonicity and dropped.
TimeSeries load_csv(const std::filesystem::path& path, bool has_time_column = false);

/// Writes `t,<channels...>` rows with 17 significant digits.
void save_csv(const TimeSeries& series, const std::filesystem::path& path);

/// x'[0] = 0, x'[t] = x[t] - x[t-1].
TimeSeries first_difference(const TimeSeries& series);

void save_labels(const ChangePointLabels& labels, const std::filesystem::path& path);
ChangePointLabels load_labels(const std::filesystem::path& path);

void save_scores(const ScoreSeries& scores, const std::filesystem::path& path);
ScoreSeries load_scores(const std::filesystem::path& path);

void save_detections(const Detections& detections, long series_length,
                     const std::filesystem::path& path);
Detections load_detections(const std::filesystem::path& path);

/// Writes `text` to `path` through a temporary sibling and a rename, so a
/// failed run never leaves a truncated artifact behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

/// Formats a double with 17 significant digits (round-trip exact).
std::string format_double(double value);

}  // namespace cpdsde
