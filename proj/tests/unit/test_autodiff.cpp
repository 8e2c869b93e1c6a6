#include "cpdsde/autodiff.hpp"
#include "cpdsde/errors.hpp"
#include "cpdsde/nn.hpp"
#include "gradcheck.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>
#include <random>

namespace cpdsde {
namespace {

using testing::check_gradients;
using testing::LossBuilder;

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

TEST(Autodiff, TanhAtZero) {
  ad::Tape tape;
  const auto x = tape.variable(Matrix::Zero(1, 1));
  const auto y = ad::tanh(x);
  EXPECT_EQ(y.scalar(), 0.0);
  tape.backward(y);
  EXPECT_EQ(tape.grad(x)(0, 0), 1.0);
}

TEST(Autodiff, SumOfSquaresGradient) {
  std::mt19937_64 rng(1);
  ad::Tape tape;
  const Matrix v = random_matrix(3, 4, rng);
  const auto x = tape.variable(v);
  tape.backward(ad::sum(ad::square(x)));
  EXPECT_LT((tape.grad(x) - 2.0 * v).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Autodiff, GaussianLogDensityValue) {
  ad::Tape tape;
  const auto x = tape.constant(Matrix::Zero(1, 1));
  const auto m = tape.variable(Matrix::Zero(1, 1));
  EXPECT_NEAR(ad::gaussian_log_density(x, m, 0.1).scalar(), 0.2323540132923501, 1e-12);
  EXPECT_NEAR(ad::gaussian_log_density(x, m, 0.1).scalar(),
              -0.5 * std::log(2.0 * std::numbers::pi * 0.1), 1e-15);
}

TEST(Autodiff, SumOfParametersGivesOnes) {
  std::mt19937_64 rng(2);
  ad::Tape tape;
  const auto a = tape.variable(random_matrix(2, 3, rng));
  const auto b = tape.variable(random_matrix(1, 1, rng));
  tape.backward(ad::sum(a) + b);
  EXPECT_TRUE(tape.grad(a).isOnes());
  EXPECT_TRUE(tape.grad(b).isOnes());
}

TEST(Autodiff, DisconnectedParameterHasZeroGradient) {
  ad::Tape tape;
  const auto a = tape.variable(Matrix::Ones(2, 2));
  const auto unused = tape.variable(Matrix::Ones(3, 1));
  tape.backward(ad::sum(a));
  EXPECT_TRUE(tape.grad(unused).isZero());
  EXPECT_EQ(tape.grad(unused).rows(), 3);
}

TEST(Autodiff, ErrorsOnBadShapesAndNonScalarLoss) {
  ad::Tape tape;
  const auto a = tape.variable(Matrix::Ones(2, 3));
  const auto b = tape.variable(Matrix::Ones(3, 2));
  EXPECT_THROW(a + b, ContractError);
  EXPECT_THROW(ad::matmul(a, a), ContractError);
  EXPECT_THROW(tape.backward(a), ContractError);
  EXPECT_THROW(ad::gaussian_log_density(a, a, 0.0), ContractError);
  ad::Tape other;
  const auto c = other.variable(Matrix::Ones(2, 3));
  EXPECT_THROW(a + c, ContractError);
}

TEST(Autodiff, BackwardIsLinear) {
  std::mt19937_64 rng(5);
  ad::Tape tape;
  const auto x = tape.variable(random_matrix(3, 3, rng));
  const auto w = tape.variable(random_matrix(3, 3, rng));
  const auto l1 = ad::sum(ad::tanh(ad::matmul(x, w)));
  const auto l2 = ad::mean(ad::square(x * w));
  tape.backward(l1);
  const Matrix g1 = tape.grad(x);
  tape.backward(l2);
  const Matrix g2 = tape.grad(x);
  tape.backward(l1 * 2.5 + l2 * -0.75);
  EXPECT_LT((tape.grad(x) - (2.5 * g1 - 0.75 * g2)).cwiseAbs().maxCoeff(), 1e-12);
}

// One fixture per op on r×c operands.
LossBuilder op_fixture(int op, Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  const Matrix w = random_matrix(r, c, rng);
  const Matrix data = random_matrix(r, c, rng);
  const double variance = 0.05 + std::uniform_real_distribution<double>(0.0, 2.0)(rng);
  switch (op) {
    case 0:
      return [=](ad::Tape& t, const std::vector<ad::Var>& p) {
        return ad::sum((p[0] + p[1]) * t.constant(w));
      };
    case 1:
      return [=](ad::Tape& t, const std::vector<ad::Var>& p) {
        return ad::sum((p[0] - p[2]) * t.constant(w));
      };
    case 2:
      return [=](ad::Tape&, const std::vector<ad::Var>& p) { return ad::sum(p[0] * p[1] * p[0]); };
    case 3:
      return [=](ad::Tape&, const std::vector<ad::Var>& p) { return ad::sum(ad::tanh(p[0] * 1.7)); };
    case 4:
      return [=](ad::Tape&, const std::vector<ad::Var>& p) { return ad::mean(ad::square(p[0] - p[1])); };
    case 5:
      return [=](ad::Tape&, const std::vector<ad::Var>& p) {
        return ad::sum(ad::tanh(ad::matmul(p[0], p[3])));
      };
    case 6:
      return [=](ad::Tape&, const std::vector<ad::Var>& p) {
        return ad::sum(ad::square(ad::affine(p[0], p[4], p[5])));
      };
    case 7:
      return [=](ad::Tape& t, const std::vector<ad::Var>& p) {
        return ad::sum(ad::square(ad::concat(p[0], p[1])) * t.constant(w.replicate(1, 2)));
      };
    default:
      return [=](ad::Tape& t, const std::vector<ad::Var>& p) {
        return ad::sum(ad::gaussian_log_density(t.constant(data), p[0] + p[2], variance));
      };
  }
}

TEST(Autodiff, EveryOpMatchesFiniteDifferences) {
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    std::uniform_int_distribution<int> dim(1, 4);
    const Eigen::Index r = dim(rng);
    const Eigen::Index c = dim(rng);
    const Eigen::Index k = dim(rng);
    const int op = seed % 9;
    std::vector<Matrix> params{random_matrix(r, c, rng),     random_matrix(r, c, rng),
                               random_matrix(1, c, rng),     random_matrix(c, k, rng),
                               random_matrix(k, c, rng),     random_matrix(1, k, rng)};
    const auto build = op_fixture(op, r, c, rng);
    const auto res = check_gradients(build, params, 1e-5, 1e-3);
    EXPECT_LT(res.max_rel_error, 1e-4) << "seed " << seed << " op " << op;
  }
}

TEST(Autodiff, BroadcastGradientsReduce) {
  std::mt19937_64 rng(9);
  const std::vector<Matrix> params{random_matrix(4, 3, rng), random_matrix(1, 3, rng),
                                   random_matrix(1, 1, rng)};
  const LossBuilder build = [](ad::Tape&, const std::vector<ad::Var>& p) {
    return ad::sum(ad::tanh(p[0] * p[1] + p[2]));
  };
  EXPECT_LT(check_gradients(build, params).max_rel_error, 1e-6);
}

TEST(Mlp, ShapesAndForwardAgreement) {
  nn::MLP mlp(10, 200, 3);
  ASSERT_EQ(mlp.layers().size(), 3u);
  EXPECT_EQ(mlp.layers()[0].weight.rows(), 200);
  EXPECT_EQ(mlp.layers()[0].weight.cols(), 10);
  EXPECT_EQ(mlp.layers()[1].weight.rows(), 200);
  EXPECT_EQ(mlp.layers()[2].weight.rows(), 3);
  Engine engine(4);
  mlp.init_uniform(engine);
  const double bound = 1.0 / std::sqrt(10.0);
  EXPECT_LE(mlp.layers()[0].weight.cwiseAbs().maxCoeff(), bound);
  EXPECT_LE(mlp.layers()[1].weight.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(200.0));

  std::mt19937_64 rng(6);
  const Matrix x = random_matrix(5, 10, rng);
  ad::Tape tape;
  const auto out = mlp.forward(mlp.bind(tape), tape.constant(x));
  EXPECT_LT((out.value() - mlp.forward(x)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < 5; ++seed) {
    nn::MLP mlp(4, 12, 2);
    Engine engine(static_cast<std::uint64_t>(seed));
    mlp.init_uniform(engine);
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed) + 100);
    const Matrix x = random_matrix(3, 4, rng);
    std::vector<Matrix> params;
    for (const auto& l : mlp.layers()) {
      params.push_back(l.weight);
      params.push_back(l.bias);
    }
    const LossBuilder build = [&](ad::Tape& t, const std::vector<ad::Var>& p) {
      std::vector<nn::BoundLinear> bound{{p[0], p[1]}, {p[2], p[3]}, {p[4], p[5]}};
      return ad::sum(ad::square(mlp.forward(bound, t.constant(x))));
    };
    EXPECT_LT(check_gradients(build, params, 1e-5, 1e-3).max_rel_error, 1e-4) << seed;
  }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Matrix p = Matrix::Constant(2, 2, 1.5);
  nn::AdamState state;
  std::vector<Matrix*> params{&p};
  const std::vector<Matrix> grads{Matrix::Zero(2, 2)};
  for (int i = 0; i < 10; ++i) nn::adam_step(params, grads, state);
  EXPECT_TRUE(p.isApprox(Matrix::Constant(2, 2, 1.5)));
  EXPECT_EQ(state.step, 10);
}

TEST(Adam, ConstantGradientStepApproachesLearningRate) {
  Matrix p = Matrix::Zero(1, 1);
  nn::AdamState state;
  std::vector<Matrix*> params{&p};
  const std::vector<Matrix> grads{Matrix::Constant(1, 1, 0.37)};
  double last = 0.0;
  for (int i = 0; i < 1000; ++i) {
    last = p(0, 0);
    nn::adam_step(params, grads, state);
  }
  EXPECT_NEAR(std::abs(p(0, 0) - last), state.lr, 0.01 * state.lr);
}

TEST(Adam, MinimisesQuadratic) {
  Matrix x = Matrix::Zero(1, 1);
  nn::AdamState state;
  state.lr = 1e-2;
  std::vector<Matrix*> params{&x};
  for (int i = 0; i < 5000; ++i) {
    const std::vector<Matrix> g{Matrix::Constant(1, 1, 2.0 * (x(0, 0) - 3.0))};
    nn::adam_step(params, g, state);
  }
  EXPECT_LT(std::abs(x(0, 0) - 3.0), 1e-2);
}

TEST(Adam, RejectsMismatchedShapes) {
  Matrix p = Matrix::Zero(2, 2);
  nn::AdamState state;
  std::vector<Matrix*> params{&p};
  const std::vector<Matrix> grads{Matrix::Zero(1, 2)};
  EXPECT_THROW(nn::adam_step(params, grads, state), ContractError);
}

TEST(MatrixJson, RoundTripAndShapeCheck) {
  std::mt19937_64 rng(7);
  const Matrix m = random_matrix(3, 2, rng);
  const auto j = nn::matrix_to_json("w", m);
  EXPECT_EQ(nn::matrix_from_json(j, 3, 2), m);
  EXPECT_THROW(nn::matrix_from_json(j, 2, 3), InputError);
}

}  // namespace
}  // namespace cpdsde
