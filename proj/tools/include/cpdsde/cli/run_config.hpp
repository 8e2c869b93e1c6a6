#pragma once

#include "cpdsde/latent_sde.hpp"
#include "cpdsde/metrics.hpp"
#include "cpdsde/preprocess.hpp"
#include "cpdsde/scoring.hpp"
#include "cpdsde/synth.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cpdsde::cli {

struct PathsConfig {
  std::filesystem::path data;
  std::filesystem::path out;
};

struct CorpusConfig {
  synth::CorpusParams params;
  std::uint64_t seed = 0;
  /// 1-based rows to run; empty means all.
  std::vector<int> rows;
  /// Each run draws its series from the run seed instead of `seed`.
  bool per_seed_data = false;

  [[nodiscard]] std::uint64_t data_seed(std::uint64_t run_seed) const {
    return per_seed_data ? run_seed : seed;
  }
};

/// Everything a command needs. The SDE observation and encoding sizes are
/// not configured directly; they follow the data and the preprocess block.
struct RunConfig {
  PreprocessConfig preprocess;
  SDEConfig sde;
  TrainConfig train;
  ScoreConfig score = [] {
    ScoreConfig s;
    s.auto_prominence = true;
    return s;
  }();
  NABConfig nab;
  MatchConfig match;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  PathsConfig paths;
  CorpusConfig corpus;
  /// Score and evaluate after every epoch and keep each metric's best.
  bool best_epoch = false;

  void validate() const;
  /// Applies a named preset ("desk" or "paper").
  void apply_profile(const std::string& name);
  /// sde.obs_dim and sde.n_pos_encodings for a raw series with `dims` channels.
  [[nodiscard]] SDEConfig sde_for(std::size_t dims) const;
  [[nodiscard]] EvalConfig eval() const { return {match, nab}; }
};

/// Rejects unknown keys and wrong types with InputError.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace cpdsde::cli
