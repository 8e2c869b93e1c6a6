#pragma once

#include "cpdsde/autodiff.hpp"
#include "cpdsde/rng.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cpdsde::nn {

/// Dense layer y = x·Wᵀ + b, W shaped out×in, b shaped 1×out.
struct Linear {
  Matrix weight;
  Matrix bias;

  Linear() = default;
  Linear(Eigen::Index in, Eigen::Index out);

  [[nodiscard]] Eigen::Index in_features() const { return weight.cols(); }
  [[nodiscard]] Eigen::Index out_features() const { return weight.rows(); }

  /// uniform(-1/sqrt(in), 1/sqrt(in)) for weight and bias.
  void init_uniform(Engine& engine);
  /// Rectangular identity weight, zero bias.
  void init_identity();

  [[nodiscard]] Matrix forward(const Matrix& x) const;
};

struct BoundLinear {
  ad::Var weight;
  ad::Var bias;

  [[nodiscard]] ad::Var operator()(ad::Var x) const { return ad::affine(x, weight, bias); }
};

BoundLinear bind(ad::Tape& tape, const Linear& layer);

/// Linear-Tanh-Linear-Tanh-Linear network.
class MLP {
 public:
  MLP() = default;
  MLP(Eigen::Index in, Eigen::Index hidden, Eigen::Index out);

  void init_uniform(Engine& engine);

  [[nodiscard]] Matrix forward(const Matrix& x) const;
  [[nodiscard]] ad::Var forward(const std::vector<BoundLinear>& bound, ad::Var x) const;
  [[nodiscard]] std::vector<BoundLinear> bind(ad::Tape& tape) const;

  [[nodiscard]] const std::vector<Linear>& layers() const noexcept { return layers_; }
  [[nodiscard]] std::vector<Linear>& layers() noexcept { return layers_; }
  [[nodiscard]] Eigen::Index in_features() const { return layers_.front().in_features(); }
  [[nodiscard]] Eigen::Index out_features() const { return layers_.back().out_features(); }

 private:
  std::vector<Linear> layers_;
};

/// Adam with bias correction; minimises.
struct AdamState {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state);

/// Named row-major parameter array, serialised as
/// {"name", "shape": [rows, cols], "values": [...]}.
nlohmann::json matrix_to_json(const std::string& name, const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols);

}  // namespace cpdsde::nn
