#pragma once

#include "cpdsde/rng.hpp"
#include "cpdsde/timeseries.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cpdsde::synth {

enum class NoiseFamily { gaussian, gumbel };
enum class ChangeType { jump, trend, volatility, mixed };

std::string to_string(NoiseFamily f);
std::string to_string(ChangeType t);

/// One stationary stretch of a synthetic series. At local index k the value
/// is level + slope·k + scale·noise, where level = mean, or, for a
/// `continuous` segment, the previous segment's trend extrapolated one step
/// plus mean (so a fracture has no level jump). Gumbel noise is centred.
struct SegmentSpec {
  long length = 200;
  NoiseFamily noise = NoiseFamily::gaussian;
  Vector mean;
  Vector scale;
  Vector slope;
  /// Correlation of the two noise channels (2D only), via Cholesky mixing.
  double correlation = 0.0;
  bool continuous = false;
};

nlohmann::json to_json(const SegmentSpec& s);

struct SyntheticDataset {
  int index = 0;
  std::string name;
  TimeSeries series;
  ChangePointLabels labels;
  std::uint64_t seed = 0;
  ChangeType cp_type = ChangeType::jump;
  nlohmann::json params;

  [[nodiscard]] std::string directory_name() const {
    return std::to_string(index) + "_" + name;
  }
};

/// location - scale·ln(-ln U), U ~ uniform(0, 1).
double gumbel_sample(double location, double scale, Engine& engine);

/// Concatenates the segments; labels sit at the segment boundaries.
SyntheticDataset generate(const std::vector<SegmentSpec>& segments, std::uint64_t seed);

struct CorpusParams {
  long length = 400;
  double jump = 2.0;
  double slope_change = 0.02;
  double volatility_factor = 3.0;
  double correlation = 0.8;
};

nlohmann::json to_json(const CorpusParams& p);

inline constexpr int kCorpusSize = 13;

/// Row `index` (1-based) of the synthetic corpus.
SyntheticDataset corpus_row(int index, std::uint64_t seed, const CorpusParams& params = {});
std::vector<SyntheticDataset> corpus(std::uint64_t seed, const CorpusParams& params = {});

/// Three 1D mean-jump segments of 200 samples with labels at 200 and 400.
SyntheticDataset demo_series(std::uint64_t seed);

/// `<dir>/<index>_<name>/{series.csv, labels.json, params.json}`.
void write_dataset(const SyntheticDataset& dataset, const std::filesystem::path& dir);

}  // namespace cpdsde::synth
