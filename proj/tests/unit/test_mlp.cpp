#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "drlir/error.hpp"
#include "drlir/mlp.hpp"
#include "oracles.hpp"

using namespace drlir;
using drlir::testing::flatten;
using drlir::testing::max_relative_error;

namespace {

MlpParams random_net(std::mt19937_64& rng, std::vector<int> dims, std::vector<Activation> acts) {
  return make_mlp(dims, acts, rng);
}

}  // namespace

TEST(Mlp, ShapesAndCounts) {
  std::mt19937_64 rng(1);
  const auto net = random_net(rng, {5, 4, 3}, {Activation::relu, Activation::tanh});
  EXPECT_EQ(net.input_dim(), 5);
  EXPECT_EQ(net.output_dim(), 3);
  EXPECT_EQ(net.parameter_count(), 5u * 4 + 4 + 4 * 3 + 3);
  EXPECT_TRUE(net.all_finite());
  EXPECT_TRUE(net.same_shape(net));
}

TEST(Mlp, HandComputedForward) {
  MlpParams net;
  DenseLayer l1{Eigen::MatrixXd(2, 2), Eigen::VectorXd(2), Activation::relu};
  l1.weight << 0.5, -1.0, 2.0, 0.25;
  l1.bias << 0.1, -0.2;
  DenseLayer l2{Eigen::MatrixXd(2, 2), Eigen::VectorXd(2), Activation::tanh};
  l2.weight << 1.0, 0.3, -0.7, 0.2;
  l2.bias << 0.0, 0.05;
  net.layers = {l1, l2};
  Eigen::MatrixXd x(2, 1);
  x << 1.0, 0.4;
  // hidden: relu(0.5 - 0.4 + 0.1, 2 + 0.1 - 0.2) = (0.2, 1.9)
  const double h0 = 0.2, h1 = 1.9;
  const double y0 = std::tanh(1.0 * h0 + 0.3 * h1 + 0.0);
  const double y1 = std::tanh(-0.7 * h0 + 0.2 * h1 + 0.05);
  const auto y = mlp_forward(net, x);
  EXPECT_NEAR(y(0, 0), y0, 1e-12);
  EXPECT_NEAR(y(1, 0), y1, 1e-12);
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto net = random_net(rng, {4, 6, 5, 2}, {Activation::tanh, Activation::relu, Activation::identity});
    const Eigen::MatrixXd x = drlir::testing::random_matrix(4, 3, rng);
    const Eigen::MatrixXd w = drlir::testing::random_matrix(2, 3, rng);
    auto f = [&](const MlpParams& p) { return (mlp_forward(p, x).array() * w.array()).sum(); };
    MlpTape tape;
    mlp_forward(net, x, &tape);
    auto g = MlpGradient::zeros_like(net);
    const Eigen::MatrixXd dx = mlp_backward(net, tape, w, &g);
    const auto num = drlir::testing::numeric_gradient_checked(
        net, f, [&](const MlpParams& p) { return drlir::testing::relu_pattern(p, x); }, 1e-3);
    EXPECT_LE(max_relative_error(flatten(g), num.grad, num.smooth), 1e-4);
    // input gradient
    for (int i = 0; i < 4; ++i) {
      for (int s = 0; s < 3; ++s) {
        Eigen::MatrixXd up = x, dn = x;
        up(i, s) += 1e-3;
        dn(i, s) -= 1e-3;
        const double num = ((mlp_forward(net, up).array() * w.array()).sum() -
                            (mlp_forward(net, dn).array() * w.array()).sum()) / 2e-3;
        EXPECT_NEAR(dx(i, s), num, 1e-4 * std::max(1.0, std::abs(num)));
      }
    }
  }
}

TEST(Optimizer, SgdDescends) {
  std::mt19937_64 rng(3);
  auto net = random_net(rng, {2, 2}, {Activation::identity});
  const auto before = net;
  auto g = MlpGradient::zeros_like(net);
  g.weight[0].setConstant(1.0);
  g.bias[0].setConstant(-2.0);
  Optimizer opt({OptimizerKind::sgd, 0.1}, net);
  opt.step(net, g);
  EXPECT_NEAR(net.layers[0].weight(0, 0), before.layers[0].weight(0, 0) - 0.1, 1e-15);
  EXPECT_NEAR(net.layers[0].bias(1), before.layers[0].bias(1) + 0.2, 1e-15);
}

TEST(Optimizer, AdamFirstStepIsLearningRateSized) {
  std::mt19937_64 rng(4);
  auto net = random_net(rng, {3, 1}, {Activation::identity});
  const auto before = net;
  auto g = MlpGradient::zeros_like(net);
  g.weight[0].setConstant(5.0);
  Optimizer opt({OptimizerKind::adam, 0.01}, net);
  opt.step(net, g);
  EXPECT_NEAR(net.layers[0].weight(0, 0), before.layers[0].weight(0, 0) - 0.01, 1e-8);
  EXPECT_EQ(net.layers[0].bias(0), before.layers[0].bias(0));
}

TEST(Optimizer, ParseKind) {
  EXPECT_EQ(parse_optimizer_kind("sgd"), OptimizerKind::sgd);
  EXPECT_EQ(parse_optimizer_kind("adam"), OptimizerKind::adam);
  EXPECT_THROW(parse_optimizer_kind("rmsprop"), ConfigError);
}
