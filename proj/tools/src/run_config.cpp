#include "cpdsde/cli/run_config.hpp"

#include "cpdsde/errors.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace cpdsde::cli {
namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                const std::string& section) {
  if (!j.is_object()) throw InputError("config section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw InputError("unknown key '" + key + "' in config section '" + section + "'");
    }
  }
}

std::set<std::string> keys_of(const nlohmann::json& j) {
  std::set<std::string> out;
  for (const auto& [key, value] : j.items()) out.insert(key);
  return out;
}

template <typename T>
T parse_section(const nlohmann::json& doc, const char* name, const T& defaults,
                std::set<std::string> allowed) {
  if (!doc.contains(name)) return defaults;
  const auto& j = doc.at(name);
  check_keys(j, allowed, name);
  nlohmann::json merged = defaults;
  for (const auto& [key, value] : j.items()) {
    if (merged.contains(key) && !merged[key].is_null()) {
      const bool numeric = merged[key].is_number() && value.is_number();
      if (!numeric && merged[key].type() != value.type()) {
        throw InputError(std::string("config key '") + name + "." + key + "' has the wrong type");
      }
      if (merged[key].is_number_integer() && !value.is_number_integer()) {
        throw InputError(std::string("config key '") + name + "." + key + "' must be an integer");
      }
    }
    merged[key] = value;
  }
  T out = defaults;
  from_json(merged, out);
  return out;
}

}  // namespace

void RunConfig::validate() const {
  preprocess.validate();
  sde_for(1).validate();
  train.validate();
  score.validate();
  nab.validate();
  match.validate();
  if (seeds.empty()) throw InputError("seeds must not be empty");
  if (corpus.params.length < 8) throw InputError("corpus.length must be >= 8");
  for (int r : corpus.rows) {
    if (r < 1 || r > synth::kCorpusSize) {
      throw InputError("corpus.rows entries must be in 1.." + std::to_string(synth::kCorpusSize));
    }
  }
}

void RunConfig::apply_profile(const std::string& name) {
  if (name == "desk") {
    train.batch = 32;
  } else if (name == "paper") {
    train.batch = 512;
  } else {
    throw InputError("unknown profile '" + name + "' (expected desk or paper)");
  }
}

SDEConfig RunConfig::sde_for(std::size_t dims) const {
  SDEConfig out = sde;
  out.obs_dim = static_cast<int>(preprocess.use_residuals ? 2 * dims : dims);
  out.n_pos_encodings = preprocess.n_pos_encodings;
  return out;
}

RunConfig parse_run_config(const nlohmann::json& doc) {
  check_keys(doc, {"preprocess", "sde", "train", "score", "nab", "match", "seeds", "paths",
                   "corpus", "best_epoch"},
             "<root>");
  RunConfig cfg;
  try {
    cfg.preprocess = parse_section(doc, "preprocess", cfg.preprocess,
                                   keys_of(nlohmann::json(cfg.preprocess)));
    auto sde_keys = keys_of(nlohmann::json(cfg.sde));
    sde_keys.erase("obs_dim");
    sde_keys.erase("n_pos_encodings");
    cfg.sde = parse_section(doc, "sde", cfg.sde, sde_keys);
    auto train_keys = keys_of(nlohmann::json(cfg.train));
    train_keys.erase("seed");
    cfg.train = parse_section(doc, "train", cfg.train, train_keys);
    auto score_keys = keys_of(nlohmann::json(cfg.score));
    score_keys.erase("seed");
    cfg.score = parse_section(doc, "score", cfg.score, score_keys);
    if (doc.contains("nab")) {
      check_keys(doc["nab"], {"profile", "window_fraction", "steepness"}, "nab");
      from_json(doc["nab"], cfg.nab);
    }
    if (doc.contains("match")) {
      check_keys(doc["match"], {"margin"}, "match");
      from_json(doc["match"], cfg.match);
    }
    if (doc.contains("seeds")) {
      const auto& s = doc["seeds"];
      if (!s.is_array()) throw InputError("seeds must be an array of non-negative integers");
      cfg.seeds.clear();
      for (const auto& v : s) {
        if (!v.is_number_unsigned()) {
          throw InputError("seeds must be an array of non-negative integers");
        }
        cfg.seeds.push_back(v.get<std::uint64_t>());
      }
    }
    if (doc.contains("paths")) {
      const auto& p = doc["paths"];
      check_keys(p, {"data", "out"}, "paths");
      if (p.contains("data")) cfg.paths.data = p["data"].get<std::string>();
      if (p.contains("out")) cfg.paths.out = p["out"].get<std::string>();
    }
    if (doc.contains("corpus")) {
      const auto& c = doc["corpus"];
      check_keys(c,
                 {"length", "jump", "slope_change", "volatility_factor", "correlation", "seed",
                  "rows", "per_seed_data"},
                 "corpus");
      auto& p = cfg.corpus.params;
      p.length = c.value("length", p.length);
      p.jump = c.value("jump", p.jump);
      p.slope_change = c.value("slope_change", p.slope_change);
      p.volatility_factor = c.value("volatility_factor", p.volatility_factor);
      p.correlation = c.value("correlation", p.correlation);
      cfg.corpus.seed = c.value("seed", cfg.corpus.seed);
      if (c.contains("rows")) cfg.corpus.rows = c["rows"].get<std::vector<int>>();
      if (c.contains("per_seed_data")) {
        if (!c["per_seed_data"].is_boolean()) throw InputError("corpus.per_seed_data must be a boolean");
        cfg.corpus.per_seed_data = c["per_seed_data"].get<bool>();
      }
    }
    if (doc.contains("best_epoch")) {
      if (!doc["best_epoch"].is_boolean()) throw InputError("best_epoch must be a boolean");
      cfg.best_epoch = doc["best_epoch"].get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return parse_run_config(doc);
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json sde = cfg.sde;
  sde.erase("obs_dim");
  sde.erase("n_pos_encodings");
  nlohmann::json train = cfg.train;
  train.erase("seed");
  nlohmann::json score = cfg.score;
  score.erase("seed");
  nlohmann::json corpus = synth::to_json(cfg.corpus.params);
  corpus["seed"] = cfg.corpus.seed;
  corpus["rows"] = cfg.corpus.rows;
  corpus["per_seed_data"] = cfg.corpus.per_seed_data;
  return {{"preprocess", cfg.preprocess},
          {"sde", sde},
          {"train", train},
          {"score", score},
          {"nab", cfg.nab},
          {"match", cfg.match},
          {"seeds", cfg.seeds},
          {"paths", {{"data", cfg.paths.data.string()}, {"out", cfg.paths.out.string()}}},
          {"corpus", corpus},
          {"best_epoch", cfg.best_epoch}};
}

}  // namespace cpdsde::cli
