#include "cpdsde/nn.hpp"

#include "cpdsde/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace cpdsde::nn {

Linear::Linear(Eigen::Index in, Eigen::Index out)
    : weight(Matrix::Zero(out, in)), bias(Matrix::Zero(1, out)) {}

void Linear::init_uniform(Engine& engine) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < weight.size(); ++i) weight.data()[i] = dist(engine);
  for (Eigen::Index i = 0; i < bias.size(); ++i) bias.data()[i] = dist(engine);
}

void Linear::init_identity() {
  weight.setIdentity();
  bias.setZero();
}

Matrix Linear::forward(const Matrix& x) const {
  Matrix out = x * weight.transpose();
  out.rowwise() += bias.row(0);
  return out;
}

BoundLinear bind(ad::Tape& tape, const Linear& layer) {
  return {tape.variable(layer.weight), tape.variable(layer.bias)};
}

MLP::MLP(Eigen::Index in, Eigen::Index hidden, Eigen::Index out) {
  layers_.emplace_back(in, hidden);
  layers_.emplace_back(hidden, hidden);
  layers_.emplace_back(hidden, out);
}

void MLP::init_uniform(Engine& engine) {
  for (auto& layer : layers_) layer.init_uniform(engine);
}

Matrix MLP::forward(const Matrix& x) const {
  Matrix h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(h);
    if (i + 1 < layers_.size()) h = h.array().tanh().matrix();
  }
  return h;
}

ad::Var MLP::forward(const std::vector<BoundLinear>& bound, ad::Var x) const {
  ad::Var h = x;
  for (std::size_t i = 0; i < bound.size(); ++i) {
    h = bound[i](h);
    if (i + 1 < bound.size()) h = ad::tanh(h);
  }
  return h;
}

std::vector<BoundLinear> MLP::bind(ad::Tape& tape) const {
  std::vector<BoundLinear> out;
  out.reserve(layers_.size());
  for (const auto& layer : layers_) out.push_back(nn::bind(tape, layer));
  return out;
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state) {
  if (params.size() != grads.size()) throw ContractError("adam_step: params/grads count mismatch");
  if (state.first_moment.empty()) {
    for (const Matrix* p : params) {
      state.first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.second_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ContractError("adam_step: state was created for a different parameter list");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    const Matrix& g = grads[i];
    if (g.rows() != p.rows() || g.cols() != p.cols()) {
      throw ContractError("adam_step: gradient shape mismatch for parameter " + std::to_string(i));
    }
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    p.array() -= state.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.eps);
  }
}

nlohmann::json matrix_to_json(const std::string& name, const Matrix& m) {
  std::vector<double> values(m.data(), m.data() + m.size());
  return {{"name", name}, {"shape", {m.rows(), m.cols()}}, {"values", values}};
}

Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols) {
  const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
  if (shape.size() != 2 || shape[0] != rows || shape[1] != cols) {
    throw InputError("parameter '" + j.value("name", std::string("?")) + "' has shape [" +
                     (shape.size() == 2 ? std::to_string(shape[0]) + "," + std::to_string(shape[1])
                                        : std::string("?")) +
                     "], expected [" + std::to_string(rows) + "," + std::to_string(cols) + "]");
  }
  const auto values = j.at("values").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != rows * cols) {
    throw InputError("parameter value count does not match its shape");
  }
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

}  // namespace cpdsde::nn
