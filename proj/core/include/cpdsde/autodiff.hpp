#pragma once

#include "cpdsde/timeseries.hpp"

#include <array>
#include <cstddef>
#include <deque>

namespace cpdsde::ad {

enum class Op {
  leaf,
  add,
  sub,
  mul,
  scale,
  tanh,
  square,
  sum,
  mean,
  matmul,
  affine,
  concat,
  gaussian_log_density,
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  [[nodiscard]] const Matrix& value() const;
  [[nodiscard]] Eigen::Index rows() const { return value().rows(); }
  [[nodiscard]] Eigen::Index cols() const { return value().cols(); }
  [[nodiscard]] double scalar() const;
  [[nodiscard]] Tape& tape() const { return *tape_; }
  [[nodiscard]] std::size_t id() const noexcept { return id_; }
  [[nodiscard]] bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape over dense row-major matrices.
///
/// Nodes are appended in evaluation order, so every node's inputs precede
/// it and a single reverse sweep in backward() visits each node once.
/// Binary elementwise ops broadcast a 1×c row or a 1×1 scalar against an
/// r×c operand; the gradient of the broadcast side is reduced accordingly.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient (data, noise draws).
  Var constant(Matrix value);
  /// Leaf whose gradient is accumulated by backward().
  Var variable(Matrix value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var tanh(Var a);
  Var square(Var a);
  Var sum(Var a);
  Var mean(Var a);
  Var matmul(Var a, Var b);
  /// x·Wᵀ + b with W shaped out×in and b shaped 1×out.
  Var affine(Var x, Var weight, Var bias);
  /// Column-wise concatenation [a | b].
  Var concat(Var a, Var b);
  /// Elementwise log N(x | mean, variance) for a scalar variance.
  Var gaussian_log_density(Var x, Var mean, double variance);

  /// Reverse sweep from a 1×1 node. Clears gradients from earlier sweeps.
  void backward(Var loss);
  void zero_grad();

  /// Gradient of the last backward() w.r.t. `v`; zeros when unreached.
  [[nodiscard]] Matrix grad(Var v) const;

  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] Op op(Var v) const { return nodes_[v.id_].op; }

 private:
  friend class Var;

  struct Node {
    Op op = Op::leaf;
    std::array<std::size_t, 3> inputs{};
    int n_inputs = 0;
    double attr = 0.0;
    bool requires_grad = false;
    bool has_grad = false;
    Matrix value;
    Matrix grad;
  };

  Var push(Op op, Matrix value, std::initializer_list<Var> inputs, double attr = 0.0);
  void check_owned(Var v) const;
  void accumulate(std::size_t id, const Matrix& g);
  void backward_node(std::size_t id);

  std::deque<Node> nodes_;
};

inline Var operator+(Var a, Var b) { return a.tape().add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape().sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape().mul(a, b); }
inline Var operator*(Var a, double s) { return a.tape().scale(a, s); }
inline Var operator*(double s, Var a) { return a.tape().scale(a, s); }
inline Var tanh(Var a) { return a.tape().tanh(a); }
inline Var square(Var a) { return a.tape().square(a); }
inline Var sum(Var a) { return a.tape().sum(a); }
inline Var mean(Var a) { return a.tape().mean(a); }
inline Var matmul(Var a, Var b) { return a.tape().matmul(a, b); }
inline Var affine(Var x, Var w, Var b) { return x.tape().affine(x, w, b); }
inline Var concat(Var a, Var b) { return a.tape().concat(a, b); }
inline Var gaussian_log_density(Var x, Var mean, double variance) {
  return x.tape().gaussian_log_density(x, mean, variance);
}

}  // namespace cpdsde::ad
