#include "cpdsde/autodiff.hpp"

#include "cpdsde/errors.hpp"

#include <cassert>
#include <cmath>
#include <numbers>
#include <string>

namespace cpdsde::ad {
namespace {

std::string shape_str(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

bool broadcastable(const Matrix& small, Eigen::Index rows, Eigen::Index cols) {
  if (small.rows() == rows && small.cols() == cols) return true;
  if (small.rows() == 1 && small.cols() == 1) return true;
  return small.rows() == 1 && small.cols() == cols;
}

// Common shape of two elementwise operands, or ContractError.
std::pair<Eigen::Index, Eigen::Index> result_shape(const Matrix& a, const Matrix& b,
                                                   const char* op) {
  const Eigen::Index rows = std::max(a.rows(), b.rows());
  const Eigen::Index cols = std::max(a.cols(), b.cols());
  if (!broadcastable(a, rows, cols) || !broadcastable(b, rows, cols)) {
    throw ContractError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                        shape_str(b));
  }
  return {rows, cols};
}

Matrix expand(const Matrix& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  if (m.rows() == 1 && m.cols() == 1) return Matrix::Constant(rows, cols, m(0, 0));
  return m.replicate(rows, 1);
}

// Sum a full-shape gradient down to the shape of a broadcast operand.
Matrix reduce_to(const Matrix& g, const Matrix& like) {
  if (g.rows() == like.rows() && g.cols() == like.cols()) return g;
  if (like.rows() == 1 && like.cols() == 1) return Matrix::Constant(1, 1, g.sum());
  return g.colwise().sum();
}

}  // namespace

const Matrix& Var::value() const { return tape_->nodes_[id_].value; }

double Var::scalar() const {
  const auto& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ContractError("scalar() on non-scalar node " + shape_str(v));
  }
  return v(0, 0);
}

void Tape::check_owned(Var v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) {
    throw ContractError("variable does not belong to this tape");
  }
}

Var Tape::push(Op op, Matrix value, std::initializer_list<Var> inputs, double attr) {
#ifndef NDEBUG
  assert(value.allFinite() && "non-finite forward value");
#endif
  Node node;
  node.op = op;
  node.attr = attr;
  node.value = std::move(value);
  for (const Var& in : inputs) {
    check_owned(in);
    node.inputs[static_cast<std::size_t>(node.n_inputs++)] = in.id_;
    node.requires_grad = node.requires_grad || nodes_[in.id_].requires_grad;
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) { return push(Op::leaf, std::move(value), {}); }

Var Tape::variable(Matrix value) {
  Var v = push(Op::leaf, std::move(value), {});
  nodes_.back().requires_grad = true;
  return v;
}

Var Tape::add(Var a, Var b) {
  check_owned(a);
  check_owned(b);
  const auto& av = a.value();
  const auto& bv = b.value();
  const auto [r, c] = result_shape(av, bv, "add");
  return push(Op::add, expand(av, r, c) + expand(bv, r, c), {a, b});
}

Var Tape::sub(Var a, Var b) {
  check_owned(a);
  check_owned(b);
  const auto& av = a.value();
  const auto& bv = b.value();
  const auto [r, c] = result_shape(av, bv, "sub");
  return push(Op::sub, expand(av, r, c) - expand(bv, r, c), {a, b});
}

Var Tape::mul(Var a, Var b) {
  check_owned(a);
  check_owned(b);
  const auto& av = a.value();
  const auto& bv = b.value();
  const auto [r, c] = result_shape(av, bv, "mul");
  Matrix out = expand(av, r, c).cwiseProduct(expand(bv, r, c));
  return push(Op::mul, std::move(out), {a, b});
}

Var Tape::scale(Var a, double factor) {
  check_owned(a);
  return push(Op::scale, a.value() * factor, {a}, factor);
}

Var Tape::tanh(Var a) {
  check_owned(a);
  return push(Op::tanh, a.value().array().tanh().matrix(), {a});
}

Var Tape::square(Var a) {
  check_owned(a);
  return push(Op::square, a.value().array().square().matrix(), {a});
}

Var Tape::sum(Var a) {
  check_owned(a);
  return push(Op::sum, Matrix::Constant(1, 1, a.value().sum()), {a});
}

Var Tape::mean(Var a) {
  check_owned(a);
  const auto& v = a.value();
  if (v.size() == 0) throw ContractError("mean of empty matrix");
  return push(Op::mean, Matrix::Constant(1, 1, v.mean()), {a});
}

Var Tape::matmul(Var a, Var b) {
  check_owned(a);
  check_owned(b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ContractError("matmul: incompatible shapes " + shape_str(av) + " and " + shape_str(bv));
  }
  Matrix out = av * bv;
  return push(Op::matmul, std::move(out), {a, b});
}

Var Tape::affine(Var x, Var weight, Var bias) {
  check_owned(x);
  check_owned(weight);
  check_owned(bias);
  const auto& xv = x.value();
  const auto& wv = weight.value();
  const auto& bv = bias.value();
  if (xv.cols() != wv.cols() || bv.rows() != 1 || bv.cols() != wv.rows()) {
    throw ContractError("affine: incompatible shapes x" + shape_str(xv) + " W" + shape_str(wv) +
                        " b" + shape_str(bv));
  }
  Matrix out = xv * wv.transpose();
  out.rowwise() += bv.row(0);
  return push(Op::affine, std::move(out), {x, weight, bias});
}

Var Tape::concat(Var a, Var b) {
  check_owned(a);
  check_owned(b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rows() != bv.rows()) {
    throw ContractError("concat: row mismatch " + shape_str(av) + " and " + shape_str(bv));
  }
  Matrix out(av.rows(), av.cols() + bv.cols());
  out.leftCols(av.cols()) = av;
  out.rightCols(bv.cols()) = bv;
  return push(Op::concat, std::move(out), {a, b});
}

Var Tape::gaussian_log_density(Var x, Var mean, double variance) {
  check_owned(x);
  check_owned(mean);
  if (!(variance > 0.0)) throw ContractError("gaussian_log_density: variance must be positive");
  const auto& xv = x.value();
  const auto& mv = mean.value();
  const auto [r, c] = result_shape(xv, mv, "gaussian_log_density");
  const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi * variance);
  Matrix diff = expand(xv, r, c) - expand(mv, r, c);
  Matrix out = (log_norm - diff.array().square() / (2.0 * variance)).matrix();
  return push(Op::gaussian_log_density, std::move(out), {x, mean}, variance);
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

void Tape::backward_node(std::size_t id) {
  const Node& n = nodes_[id];
  const Matrix& g = n.grad;
  const auto in = [&](int k) -> const Node& { return nodes_[n.inputs[static_cast<std::size_t>(k)]]; };
  const auto id_of = [&](int k) { return n.inputs[static_cast<std::size_t>(k)]; };

  switch (n.op) {
    case Op::leaf:
      break;
    case Op::add:
      if (in(0).requires_grad) accumulate(id_of(0), reduce_to(g, in(0).value));
      if (in(1).requires_grad) accumulate(id_of(1), reduce_to(g, in(1).value));
      break;
    case Op::sub:
      if (in(0).requires_grad) accumulate(id_of(0), reduce_to(g, in(0).value));
      if (in(1).requires_grad) accumulate(id_of(1), reduce_to(-g, in(1).value));
      break;
    case Op::mul: {
      const auto r = g.rows();
      const auto c = g.cols();
      if (in(0).requires_grad) {
        accumulate(id_of(0), reduce_to(g.cwiseProduct(expand(in(1).value, r, c)), in(0).value));
      }
      if (in(1).requires_grad) {
        accumulate(id_of(1), reduce_to(g.cwiseProduct(expand(in(0).value, r, c)), in(1).value));
      }
      break;
    }
    case Op::scale:
      accumulate(id_of(0), g * n.attr);
      break;
    case Op::tanh:
      accumulate(id_of(0), g.cwiseProduct((1.0 - n.value.array().square()).matrix()));
      break;
    case Op::square:
      accumulate(id_of(0), 2.0 * g.cwiseProduct(in(0).value));
      break;
    case Op::sum: {
      const auto& x = in(0).value;
      accumulate(id_of(0), Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
      break;
    }
    case Op::mean: {
      const auto& x = in(0).value;
      accumulate(id_of(0),
                 Matrix::Constant(x.rows(), x.cols(), g(0, 0) / static_cast<double>(x.size())));
      break;
    }
    case Op::matmul:
      if (in(0).requires_grad) accumulate(id_of(0), g * in(1).value.transpose());
      if (in(1).requires_grad) accumulate(id_of(1), in(0).value.transpose() * g);
      break;
    case Op::affine:
      if (in(0).requires_grad) accumulate(id_of(0), g * in(1).value);
      if (in(1).requires_grad) accumulate(id_of(1), g.transpose() * in(0).value);
      if (in(2).requires_grad) accumulate(id_of(2), g.colwise().sum());
      break;
    case Op::concat: {
      const auto left = in(0).value.cols();
      if (in(0).requires_grad) accumulate(id_of(0), g.leftCols(left));
      if (in(1).requires_grad) accumulate(id_of(1), g.rightCols(g.cols() - left));
      break;
    }
    case Op::gaussian_log_density: {
      const auto r = g.rows();
      const auto c = g.cols();
      // d/dx = -(x - m)/v, d/dm = (x - m)/v
      Matrix dm = (expand(in(0).value, r, c) - expand(in(1).value, r, c)) / n.attr;
      dm = dm.cwiseProduct(g);
      if (in(0).requires_grad) accumulate(id_of(0), reduce_to(-dm, in(0).value));
      if (in(1).requires_grad) accumulate(id_of(1), reduce_to(dm, in(1).value));
      break;
    }
  }
}

void Tape::backward(Var loss) {
  check_owned(loss);
  const auto& lv = loss.value();
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("backward: loss must be scalar, got " + shape_str(lv));
  }
  zero_grad();
  accumulate(loss.id_, Matrix::Constant(1, 1, 1.0));
  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (n.has_grad && n.requires_grad && n.op != Op::leaf) backward_node(id);
  }
}

void Tape::zero_grad() {
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
}

Matrix Tape::grad(Var v) const {
  check_owned(v);
  const Node& n = nodes_[v.id_];
  if (!n.has_grad) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

}  // namespace cpdsde::ad
