#pragma once

#include "cpdsde/autodiff.hpp"
#include "cpdsde/nn.hpp"
#include "cpdsde/timeseries.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cpdsde {

struct SDEConfig {
  int obs_dim = 1;
  /// 0 means "same as obs_dim".
  int latent_dim = 0;
  int hidden = 200;
  int n_pos_encodings = 8;
  double diffusion = 1.0;
  double obs_variance = 0.1;
  /// SDE time between consecutive observations.
  double dt = 1.0;
  /// Euler-Maruyama steps per observation interval.
  int substeps = 1;
  /// Multiplier on the initial weights of the drift network's output layer.
  double drift_output_scale = 0.01;

  [[nodiscard]] int resolved_latent_dim() const { return latent_dim > 0 ? latent_dim : obs_dim; }
  void validate() const;
};

void to_json(nlohmann::json& j, const SDEConfig& cfg);
void from_json(const nlohmann::json& j, SDEConfig& cfg);

struct TrainConfig {
  int epochs = 100;
  int batch = 32;
  double lr = 1e-2;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

/// Which posterior drift the solver integrates. `prior` substitutes the
/// prior drift -z and `zero` a vanishing drift; both exist for analytic
/// checks of the solver and the ELBO.
enum class DriftMode { learned, prior, zero };

/// Encoder ψ and decoder f are affine maps; the posterior drift is an MLP
/// on [PE(t) | z]. The prior drift -z and the constant diffusion are fixed.
class LatentSDEModel {
 public:
  LatentSDEModel(SDEConfig config, std::uint64_t init_seed);

  [[nodiscard]] const SDEConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] int latent_dim() const { return config_.resolved_latent_dim(); }
  [[nodiscard]] int obs_dim() const { return config_.obs_dim; }

  nn::Linear encoder;
  nn::Linear decoder;
  nn::MLP drift;

  /// Every trainable array in a fixed order, with its serialised name.
  [[nodiscard]] std::vector<Matrix*> parameters();
  [[nodiscard]] std::vector<const Matrix*> parameters() const;
  [[nodiscard]] static std::vector<std::string> parameter_names();

  /// Plain (untaped) posterior drift for a batch of states at time t.
  [[nodiscard]] Matrix drift_value(const Matrix& z, double t, DriftMode mode) const;

  friend bool operator==(const LatentSDEModel& a, const LatentSDEModel& b);

 private:
  SDEConfig config_;
  std::uint64_t seed_;
};

nlohmann::json model_to_json(const LatentSDEModel& model);
LatentSDEModel model_from_json(const nlohmann::json& j);

/// Model parameters bound to a tape as gradient-carrying leaves.
struct BoundModel {
  nn::BoundLinear encoder;
  nn::BoundLinear decoder;
  std::vector<nn::BoundLinear> drift;

  /// Same order as LatentSDEModel::parameters().
  [[nodiscard]] std::vector<ad::Var> variables() const;
};

BoundModel bind(ad::Tape& tape, const LatentSDEModel& model);

struct SolveOptions {
  std::size_t n_paths = 1;
  std::size_t length = 2;
  std::uint64_t noise_seed = 0;
  /// Path i draws its noise from stream (noise_seed, first_path + i).
  std::size_t first_path = 0;
  DriftMode drift = DriftMode::learned;
};

/// Latent states at each observation time: element t is an N×d matrix.
using LatentPaths = std::vector<Matrix>;

/// Euler-Maruyama integration of the posterior SDE from z0 = ψ(x0):
/// z <- z + μ_φ(z, PE(t))·h + σ·sqrt(h)·ξ. With constant diffusion this is
/// also the Stratonovich solution. Throws TrainingError on blow-up.
LatentPaths solve_paths(const LatentSDEModel& model, const Vector& x0, const SolveOptions& opts);

struct TapedSolve {
  std::vector<ad::Var> states;
  /// Σ ½|u|²·h with u = (μ_θ - μ_φ)/σ, summed over all paths.
  ad::Var kl;
};

TapedSolve solve_paths(ad::Tape& tape, const BoundModel& bound, const LatentSDEModel& model,
                       const Vector& x0, const SolveOptions& opts);

struct ElboOptions {
  std::size_t batch = 1;
  std::uint64_t seed = 0;
  std::size_t first_path = 0;
  DriftMode drift = DriftMode::learned;
};

/// (1/batch)·Σ_paths [Σ_t log N(x_t | f(z_t), c·I) - Σ ½|u|²·h].
ad::Var elbo(ad::Tape& tape, const BoundModel& bound, const LatentSDEModel& model,
             const TimeSeries& series, const ElboOptions& opts);

/// Convenience: evaluates the ELBO on a throwaway tape.
double elbo_value(const LatentSDEModel& model, const TimeSeries& series, const ElboOptions& opts);

struct TrainResult {
  LatentSDEModel model;
  /// -ELBO evaluated at the start of each epoch.
  std::vector<double> loss_history;
};

using EpochCallback = std::function<void(int epoch, const LatentSDEModel& model, double loss)>;

/// Adam ascent on the ELBO. Bitwise deterministic for a given seed.
TrainResult train(const TimeSeries& series, const SDEConfig& sde_cfg, const TrainConfig& train_cfg,
                  const EpochCallback& on_epoch = {});

/// N posterior paths and their decoded means, both stored time-major:
/// latent[t] is N×d and decoded[t] is N×D.
struct TrajectoryBundle {
  std::vector<Matrix> latent;
  std::vector<Matrix> decoded;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t length() const { return decoded.size(); }
  [[nodiscard]] std::size_t n_paths() const {
    return decoded.empty() ? 0 : static_cast<std::size_t>(decoded.front().rows());
  }
  [[nodiscard]] std::size_t obs_dim() const {
    return decoded.empty() ? 0 : static_cast<std::size_t>(decoded.front().cols());
  }

  friend bool operator==(const TrajectoryBundle&, const TrajectoryBundle&) = default;
};

TrajectoryBundle sample_posterior(const LatentSDEModel& model, const TimeSeries& series,
                                  std::size_t n_paths, std::uint64_t seed,
                                  DriftMode drift = DriftMode::learned);

}  // namespace cpdsde
