#include "cpdsde/timeseries.hpp"

#include "cpdsde/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>

namespace cpdsde {
namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_cell(std::string_view cell, std::size_t row, std::size_t col) {
  cell = trim(cell);
  double value = 0.0;
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc{} || ptr != end) {
    throw InputError("cannot parse '" + std::string(cell) + "' at row " + std::to_string(row) +
                     ", column " + std::to_string(col));
  }
  if (!std::isfinite(value)) {
    throw InputError("non-finite value '" + std::string(cell) + "' at row " +
                     std::to_string(row) + ", column " + std::to_string(col));
  }
  return value;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

nlohmann::json read_json(const std::filesystem::path& path) {
  const auto text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::vector<long> read_positions(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_array()) {
    throw InputError(std::string("missing array field '") + key + "'");
  }
  std::vector<long> out;
  for (const auto& p : doc[key]) {
    if (!p.is_number_integer()) throw InputError(std::string("non-integer entry in '") + key + "'");
    out.push_back(p.get<long>());
  }
  return out;
}

long read_length(const nlohmann::json& doc) {
  if (!doc.contains("series_length") || !doc["series_length"].is_number_integer()) {
    throw InputError("missing integer field 'series_length'");
  }
  return doc["series_length"].get<long>();
}

}  // namespace

TimeSeries::TimeSeries(Matrix values, std::vector<std::string> channel_names, double dt)
    : values_(std::move(values)), names_(std::move(channel_names)), dt_(dt) {
  if (values_.rows() < 2) throw InputError("time series needs at least 2 rows");
  if (values_.cols() < 1) throw InputError("time series needs at least 1 channel");
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw InputError("dt must be positive and finite");
  if (names_.size() != static_cast<std::size_t>(values_.cols())) {
    throw InputError("channel_names has " + std::to_string(names_.size()) + " entries, expected " +
                     std::to_string(values_.cols()));
  }
  if (std::set<std::string>(names_.begin(), names_.end()).size() != names_.size()) {
    throw InputError("channel names must be distinct");
  }
  for (Eigen::Index t = 0; t < values_.rows(); ++t) {
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
      if (!std::isfinite(values_(t, j))) {
        throw InputError("non-finite value at row " + std::to_string(t) + ", column " +
                         std::to_string(j));
      }
    }
  }
}

TimeSeries TimeSeries::from_values(Matrix values, double dt) {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < values.cols(); ++j) names.push_back("x" + std::to_string(j));
  return TimeSeries(std::move(values), std::move(names), dt);
}

ChangePointLabels::ChangePointLabels(std::vector<long> positions, long series_length)
    : positions_(std::move(positions)), length_(series_length) {
  if (length_ < 2) throw InputError("series_length must be at least 2");
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    const long p = positions_[i];
    if (p < 1 || p > length_ - 1) {
      throw InputError("change point " + std::to_string(p) + " outside [1, " +
                       std::to_string(length_ - 1) + "]");
    }
    if (i > 0 && p <= positions_[i - 1]) {
      throw InputError("change points must be strictly increasing");
    }
  }
}

ScoreSeries::ScoreSeries(std::vector<double> scores) : scores_(std::move(scores)) {
  for (std::size_t t = 0; t < scores_.size(); ++t) {
    if (!std::isfinite(scores_[t])) {
      throw InputError("non-finite score at index " + std::to_string(t));
    }
  }
}

Detections::Detections(std::vector<long> positions, std::vector<double> peak_scores)
    : positions_(std::move(positions)), peak_scores_(std::move(peak_scores)) {
  if (positions_.size() != peak_scores_.size()) {
    throw InputError("detections: positions and peak_scores differ in length");
  }
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    if (positions_[i] < 0) throw InputError("detections: negative position");
    if (i > 0 && positions_[i] <= positions_[i - 1]) {
      throw InputError("detections must be strictly increasing");
    }
  }
}

Detections Detections::at(std::vector<long> positions) {
  std::vector<double> ones(positions.size(), 1.0);
  return Detections(std::move(positions), std::move(ones));
}

TimeSeries load_csv(const std::filesystem::path& path, bool has_time_column) {
  const auto text = read_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");

  auto header = split_commas(line);
  std::vector<std::string> names;
  for (auto h : header) names.emplace_back(trim(h));
  const bool drop_time = has_time_column || names.front() == "t" || names.front() == "time";
  if (drop_time && names.size() < 2) throw InputError(path.string() + ": no data columns");

  std::vector<std::vector<double>> rows;
  std::vector<double> times;
  std::size_t row_index = 0;
  while (std::getline(in, line)) {
    ++row_index;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != names.size()) {
      throw InputError(path.string() + ": row " + std::to_string(row_index) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(names.size()));
    }
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = parse_cell(cells[c], row_index, c);
      if (drop_time && c == 0) {
        times.push_back(v);
      } else {
        row.push_back(v);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw InputError(path.string() + ": need at least 2 data rows");

  double dt = 1.0;
  if (drop_time) {
    for (std::size_t i = 1; i < times.size(); ++i) {
      if (!(times[i] > times[i - 1])) {
        throw InputError(path.string() + ": time column not strictly increasing at row " +
                         std::to_string(i + 1));
      }
    }
    const double step = times[1] - times[0];
    bool uniform = true;
    for (std::size_t i = 2; i < times.size(); ++i) {
      if (std::abs((times[i] - times[i - 1]) - step) > 1e-9 * std::max(1.0, std::abs(step))) {
        uniform = false;
        break;
      }
    }
    if (uniform) dt = step;
    names.erase(names.begin());
  }

  Matrix values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
    }
  }
  return TimeSeries(std::move(values), std::move(names), dt);
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
    if (!out) throw InputError("write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw InputError("cannot write " + path.string());
  }
}

void save_csv(const TimeSeries& series, const std::filesystem::path& path) {
  std::string out = "t";
  for (const auto& name : series.channel_names()) out += "," + name;
  out += "\n";
  for (std::size_t t = 0; t < series.length(); ++t) {
    out += format_double(static_cast<double>(t) * series.dt());
    for (std::size_t j = 0; j < series.dims(); ++j) out += "," + format_double(series(t, j));
    out += "\n";
  }
  write_file_atomic(path, out);
}

TimeSeries first_difference(const TimeSeries& series) {
  const auto& x = series.values();
  Matrix d = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index t = 1; t < x.rows(); ++t) d.row(t) = x.row(t) - x.row(t - 1);
  return TimeSeries(std::move(d), series.channel_names(), series.dt());
}

void save_labels(const ChangePointLabels& labels, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["series_length"] = labels.series_length();
  doc["positions"] = labels.positions();
  write_file_atomic(path, doc.dump() + "\n");
}

ChangePointLabels load_labels(const std::filesystem::path& path) {
  const auto doc = read_json(path);
  return ChangePointLabels(read_positions(doc, "positions"), read_length(doc));
}

void save_scores(const ScoreSeries& scores, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["series_length"] = scores.series_length();
  doc["scores"] = scores.scores();
  write_file_atomic(path, doc.dump() + "\n");
}

ScoreSeries load_scores(const std::filesystem::path& path) {
  const auto doc = read_json(path);
  const long length = read_length(doc);
  if (!doc.contains("scores") || !doc["scores"].is_array()) {
    throw InputError(path.string() + ": missing array field 'scores'");
  }
  std::vector<double> scores;
  for (const auto& s : doc["scores"]) {
    if (!s.is_number()) throw InputError(path.string() + ": non-numeric score");
    scores.push_back(s.get<double>());
  }
  if (static_cast<long>(scores.size()) != length) {
    throw InputError(path.string() + ": series_length does not match number of scores");
  }
  return ScoreSeries(std::move(scores));
}

void save_detections(const Detections& detections, long series_length,
                     const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["series_length"] = series_length;
  doc["positions"] = detections.positions();
  doc["peak_scores"] = detections.peak_scores();
  write_file_atomic(path, doc.dump() + "\n");
}

Detections load_detections(const std::filesystem::path& path) {
  const auto doc = read_json(path);
  auto positions = read_positions(doc, "positions");
  std::vector<double> peaks;
  if (doc.contains("peak_scores")) {
    for (const auto& s : doc["peak_scores"]) peaks.push_back(s.get<double>());
  } else {
    peaks.assign(positions.size(), 1.0);
  }
  return Detections(std::move(positions), std::move(peaks));
}

}  // namespace cpdsde
