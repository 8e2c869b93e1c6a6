#include "cpdsde/latent_sde.hpp"

#include "cpdsde/errors.hpp"
#include "cpdsde/preprocess.hpp"
#include "cpdsde/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <string>

namespace cpdsde {

void SDEConfig::validate() const {
  if (obs_dim < 1) throw InputError("sde.obs_dim must be >= 1");
  if (latent_dim < 0) throw InputError("sde.latent_dim must be >= 0 (0 = obs_dim)");
  if (hidden < 1) throw InputError("sde.hidden must be >= 1");
  if (n_pos_encodings < 2 || n_pos_encodings % 2 != 0) {
    throw InputError("sde.n_pos_encodings must be even and >= 2");
  }
  if (!(diffusion > 0.0)) throw InputError("sde.diffusion must be positive");
  if (!(obs_variance > 0.0)) throw InputError("sde.obs_variance must be positive");
  if (!(dt > 0.0)) throw InputError("sde.dt must be positive");
  if (!(drift_output_scale >= 0.0)) throw InputError("sde.drift_output_scale must be >= 0");
  if (substeps < 1) throw InputError("sde.substeps must be >= 1");
}

void to_json(nlohmann::json& j, const SDEConfig& cfg) {
  j = nlohmann::json{{"obs_dim", cfg.obs_dim},         {"latent_dim", cfg.latent_dim},
                     {"hidden", cfg.hidden},           {"n_pos_encodings", cfg.n_pos_encodings},
                     {"diffusion", cfg.diffusion},     {"obs_variance", cfg.obs_variance},
                     {"dt", cfg.dt},                   {"substeps", cfg.substeps},
                     {"drift_output_scale", cfg.drift_output_scale}};
}

void from_json(const nlohmann::json& j, SDEConfig& cfg) {
  cfg.obs_dim = j.value("obs_dim", cfg.obs_dim);
  cfg.latent_dim = j.value("latent_dim", cfg.latent_dim);
  cfg.hidden = j.value("hidden", cfg.hidden);
  cfg.n_pos_encodings = j.value("n_pos_encodings", cfg.n_pos_encodings);
  cfg.diffusion = j.value("diffusion", cfg.diffusion);
  cfg.obs_variance = j.value("obs_variance", cfg.obs_variance);
  cfg.dt = j.value("dt", cfg.dt);
  cfg.substeps = j.value("substeps", cfg.substeps);
  cfg.drift_output_scale = j.value("drift_output_scale", cfg.drift_output_scale);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InputError("train.epochs must be >= 1");
  if (batch < 1) throw InputError("train.batch must be >= 1");
  if (!(lr > 0.0)) throw InputError("train.lr must be positive");
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
  j = nlohmann::json{
      {"epochs", cfg.epochs}, {"batch", cfg.batch}, {"lr", cfg.lr}, {"seed", cfg.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch = j.value("batch", cfg.batch);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.seed = j.value("seed", cfg.seed);
}

LatentSDEModel::LatentSDEModel(SDEConfig config, std::uint64_t init_seed)
    : config_(config), seed_(init_seed) {
  config_.validate();
  const int d = config_.resolved_latent_dim();
  const int D = config_.obs_dim;
  encoder = nn::Linear(D, d);
  decoder = nn::Linear(d, D);
  encoder.init_identity();
  decoder.init_identity();
  drift = nn::MLP(config_.n_pos_encodings + d, config_.hidden, d);
  Engine engine(derive_seed(init_seed, 0x1417));
  drift.init_uniform(engine);
  drift.layers().back().weight *= config_.drift_output_scale;
  drift.layers().back().bias *= config_.drift_output_scale;
}

std::vector<Matrix*> LatentSDEModel::parameters() {
  std::vector<Matrix*> out{&encoder.weight, &encoder.bias, &decoder.weight, &decoder.bias};
  for (auto& layer : drift.layers()) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  return out;
}

std::vector<const Matrix*> LatentSDEModel::parameters() const {
  std::vector<const Matrix*> out{&encoder.weight, &encoder.bias, &decoder.weight, &decoder.bias};
  for (const auto& layer : drift.layers()) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  return out;
}

std::vector<std::string> LatentSDEModel::parameter_names() {
  return {"encoder.weight", "encoder.bias",  "decoder.weight", "decoder.bias",
          "drift.0.weight", "drift.0.bias",  "drift.2.weight", "drift.2.bias",
          "drift.4.weight", "drift.4.bias"};
}

namespace {

Matrix pe_block(double t, int n, Eigen::Index rows) {
  const Vector pe = positional_encoding(t, n);
  return pe.transpose().replicate(rows, 1);
}

class PathNoise {
 public:
  PathNoise(std::uint64_t seed, std::size_t first_path, std::size_t n_paths) {
    streams_.reserve(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) streams_.emplace_back(derive_seed(seed, first_path + i));
  }

  Matrix next(Eigen::Index dims) {
    Matrix xi(static_cast<Eigen::Index>(streams_.size()), dims);
    for (std::size_t i = 0; i < streams_.size(); ++i) {
      for (Eigen::Index j = 0; j < dims; ++j) xi(static_cast<Eigen::Index>(i), j) = streams_[i]();
    }
    return xi;
  }

 private:
  std::vector<NormalStream> streams_;
};

void check_inputs(const LatentSDEModel& model, const Vector& x0, const SolveOptions& opts) {
  if (opts.n_paths < 1) throw ContractError("solve_paths: n_paths must be >= 1");
  if (opts.length < 1) throw ContractError("solve_paths: length must be >= 1");
  if (x0.size() != model.obs_dim()) {
    throw InputError("initial observation has " + std::to_string(x0.size()) +
                     " channels, model expects " + std::to_string(model.obs_dim()));
  }
}

}  // namespace

Matrix LatentSDEModel::drift_value(const Matrix& z, double t, DriftMode mode) const {
  switch (mode) {
    case DriftMode::prior:
      return -z;
    case DriftMode::zero:
      return Matrix::Zero(z.rows(), z.cols());
    case DriftMode::learned:
      break;
  }
  Matrix input(z.rows(), config_.n_pos_encodings + z.cols());
  input.leftCols(config_.n_pos_encodings) = pe_block(t, config_.n_pos_encodings, z.rows());
  input.rightCols(z.cols()) = z;
  return drift.forward(input);
}

bool operator==(const LatentSDEModel& a, const LatentSDEModel& b) {
  if (a.seed_ != b.seed_) return false;
  if (nlohmann::json(a.config_) != nlohmann::json(b.config_)) return false;
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i]->rows() != pb[i]->rows() || pa[i]->cols() != pb[i]->cols() || *pa[i] != *pb[i]) {
      return false;
    }
  }
  return true;
}

nlohmann::json model_to_json(const LatentSDEModel& model) {
  nlohmann::json j;
  j["format"] = "cpdsde-latent-sde";
  j["sde_config"] = model.config();
  j["seed"] = model.seed();
  auto& params = j["parameters"] = nlohmann::json::array();
  const auto names = LatentSDEModel::parameter_names();
  const auto arrays = model.parameters();
  for (std::size_t i = 0; i < arrays.size(); ++i) params.push_back(nn::matrix_to_json(names[i], *arrays[i]));
  return j;
}

LatentSDEModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string()) != "cpdsde-latent-sde") {
      throw InputError("not a latent SDE model file");
    }
    const auto cfg = j.at("sde_config").get<SDEConfig>();
    LatentSDEModel model(cfg, j.at("seed").get<std::uint64_t>());
    const auto names = LatentSDEModel::parameter_names();
    const auto& params = j.at("parameters");
    auto arrays = model.parameters();
    if (params.size() != arrays.size()) throw InputError("model file has wrong parameter count");
    for (std::size_t i = 0; i < arrays.size(); ++i) {
      if (params[i].at("name").get<std::string>() != names[i]) {
        throw InputError("model file: expected parameter '" + names[i] + "'");
      }
      *arrays[i] = nn::matrix_from_json(params[i], arrays[i]->rows(), arrays[i]->cols());
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model file: ") + e.what());
  }
}

std::vector<ad::Var> BoundModel::variables() const {
  std::vector<ad::Var> out{encoder.weight, encoder.bias, decoder.weight, decoder.bias};
  for (const auto& layer : drift) {
    out.push_back(layer.weight);
    out.push_back(layer.bias);
  }
  return out;
}

BoundModel bind(ad::Tape& tape, const LatentSDEModel& model) {
  return {nn::bind(tape, model.encoder), nn::bind(tape, model.decoder), model.drift.bind(tape)};
}

LatentPaths solve_paths(const LatentSDEModel& model, const Vector& x0, const SolveOptions& opts) {
  check_inputs(model, x0, opts);
  const auto& cfg = model.config();
  const Eigen::Index N = static_cast<Eigen::Index>(opts.n_paths);
  const Eigen::Index d = model.latent_dim();
  const double h = cfg.dt / cfg.substeps;
  const double noise_scale = cfg.diffusion * std::sqrt(h);

  PathNoise noise(opts.noise_seed, opts.first_path, opts.n_paths);
  LatentPaths states;
  states.reserve(opts.length);
  Matrix z = model.encoder.forward(x0.transpose()).replicate(N, 1);
  states.push_back(z);
  for (std::size_t t = 0; t + 1 < opts.length; ++t) {
    for (int s = 0; s < cfg.substeps; ++s) {
      const double time = static_cast<double>(t) + static_cast<double>(s) / cfg.substeps;
      const Matrix mu = model.drift_value(z, time, opts.drift);
      Matrix stepped = z + mu * h;
      z = stepped + noise_scale * noise.next(d);
    }
    if (!z.allFinite()) {
      throw TrainingError("non-finite latent state at step " + std::to_string(t + 1));
    }
    states.push_back(z);
  }
  return states;
}

TapedSolve solve_paths(ad::Tape& tape, const BoundModel& bound, const LatentSDEModel& model,
                       const Vector& x0, const SolveOptions& opts) {
  check_inputs(model, x0, opts);
  const auto& cfg = model.config();
  const Eigen::Index N = static_cast<Eigen::Index>(opts.n_paths);
  const Eigen::Index d = model.latent_dim();
  const double h = cfg.dt / cfg.substeps;
  const double noise_scale = cfg.diffusion * std::sqrt(h);

  PathNoise noise(opts.noise_seed, opts.first_path, opts.n_paths);
  TapedSolve out;
  out.states.reserve(opts.length);

  const ad::Var x0_row = tape.constant(x0.transpose());
  ad::Var z = tape.add(tape.constant(Matrix::Zero(N, d)), bound.encoder(x0_row));
  out.states.push_back(z);
  ad::Var kl = tape.constant(Matrix::Zero(1, 1));
  for (std::size_t t = 0; t + 1 < opts.length; ++t) {
    for (int s = 0; s < cfg.substeps; ++s) {
      const double time = static_cast<double>(t) + static_cast<double>(s) / cfg.substeps;
      ad::Var mu;
      switch (opts.drift) {
        case DriftMode::learned: {
          const ad::Var pe = tape.constant(pe_block(time, cfg.n_pos_encodings, N));
          mu = model.drift.forward(bound.drift, ad::concat(pe, z));
          break;
        }
        case DriftMode::prior:
          mu = z * -1.0;
          break;
        case DriftMode::zero:
          mu = tape.constant(Matrix::Zero(N, d));
          break;
      }
      // u = (μ_θ - μ_φ)/σ with μ_θ(z) = -z
      const ad::Var u = (z + mu) * (-1.0 / cfg.diffusion);
      kl = kl + ad::sum(ad::square(u)) * (0.5 * h);
      z = z + mu * h + tape.constant(noise_scale * noise.next(d));
    }
    if (!z.value().allFinite()) {
      throw TrainingError("non-finite latent state at step " + std::to_string(t + 1));
    }
    out.states.push_back(z);
  }
  out.kl = kl;
  return out;
}

ad::Var elbo(ad::Tape& tape, const BoundModel& bound, const LatentSDEModel& model,
             const TimeSeries& series, const ElboOptions& opts) {
  if (static_cast<int>(series.dims()) != model.obs_dim()) {
    throw InputError("series has " + std::to_string(series.dims()) + " channels, model expects " +
                     std::to_string(model.obs_dim()));
  }
  if (opts.batch < 1) throw ContractError("elbo: batch must be >= 1");
  SolveOptions so;
  so.n_paths = opts.batch;
  so.length = series.length();
  so.noise_seed = opts.seed;
  so.first_path = opts.first_path;
  so.drift = opts.drift;
  const Vector x0 = series.values().row(0).transpose();
  const auto solved = solve_paths(tape, bound, model, x0, so);

  const double c = model.config().obs_variance;
  ad::Var recon = tape.constant(Matrix::Zero(1, 1));
  for (std::size_t t = 0; t < series.length(); ++t) {
    const ad::Var x_t = tape.constant(series.values().row(static_cast<Eigen::Index>(t)));
    const ad::Var decoded = bound.decoder(solved.states[t]);
    recon = recon + ad::sum(ad::gaussian_log_density(x_t, decoded, c));
  }
  return (recon - solved.kl) * (1.0 / static_cast<double>(opts.batch));
}

double elbo_value(const LatentSDEModel& model, const TimeSeries& series, const ElboOptions& opts) {
  ad::Tape tape;
  const auto bound = bind(tape, model);
  return elbo(tape, bound, model, series, opts).scalar();
}

TrainResult train(const TimeSeries& series, const SDEConfig& sde_cfg, const TrainConfig& train_cfg,
                  const EpochCallback& on_epoch) {
  if (static_cast<int>(series.dims()) != sde_cfg.obs_dim) {
    throw InputError("series has " + std::to_string(series.dims()) + " channels, sde.obs_dim is " +
                     std::to_string(sde_cfg.obs_dim));
  }
  if (train_cfg.epochs < 0 || train_cfg.batch < 1 || !(train_cfg.lr > 0.0)) {
    throw InputError("invalid training configuration");
  }
  TrainResult result{LatentSDEModel(sde_cfg, train_cfg.seed), {}};
  nn::AdamState adam;
  adam.lr = train_cfg.lr;

  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    ad::Tape tape;
    const BoundModel bound = bind(tape, result.model);
    ElboOptions eo;
    eo.batch = static_cast<std::size_t>(train_cfg.batch);
    eo.seed = derive_seed(train_cfg.seed, 0xe90c, static_cast<std::uint64_t>(epoch));
    ad::Var loss;
    try {
      loss = elbo(tape, bound, result.model, series, eo) * -1.0;
    } catch (const TrainingError& e) {
      throw TrainingError("epoch " + std::to_string(epoch) + ": " + e.what());
    }
    const double value = loss.scalar();
    if (!std::isfinite(value)) {
      throw TrainingError("non-finite loss at epoch " + std::to_string(epoch));
    }
    tape.backward(loss);
    std::vector<Matrix> grads;
    for (const auto& v : bound.variables()) {
      grads.push_back(tape.grad(v));
      if (!grads.back().allFinite()) {
        throw TrainingError("non-finite gradient at epoch " + std::to_string(epoch));
      }
    }
    result.loss_history.push_back(value);
    const auto params = result.model.parameters();
    nn::adam_step(params, grads, adam);
    if (on_epoch) on_epoch(epoch, result.model, value);
  }
  return result;
}

TrajectoryBundle sample_posterior(const LatentSDEModel& model, const TimeSeries& series,
                                  std::size_t n_paths, std::uint64_t seed, DriftMode drift) {
  if (static_cast<int>(series.dims()) != model.obs_dim()) {
    throw InputError("series has " + std::to_string(series.dims()) + " channels, model expects " +
                     std::to_string(model.obs_dim()));
  }
  SolveOptions so;
  so.n_paths = n_paths;
  so.length = series.length();
  so.noise_seed = seed;
  so.drift = drift;
  TrajectoryBundle bundle;
  bundle.seed = seed;
  bundle.latent = solve_paths(model, series.values().row(0).transpose(), so);
  bundle.decoded.reserve(bundle.latent.size());
  for (const auto& z : bundle.latent) bundle.decoded.push_back(model.decoder.forward(z));
  return bundle;
}

}  // namespace cpdsde
