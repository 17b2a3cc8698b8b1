#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "srkocl/gradcheck.hpp"
#include "srkocl/ops.hpp"
#include "srkocl/optim.hpp"
#include "srkocl/tensor.hpp"

using namespace srkocl;
using T64 = Tensor<double>;

namespace {

std::vector<double> vals(const T64& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

TEST(Tensor, ShapeMustMatchBuffer) {
  EXPECT_THROW(T64({2, 2}, {1, 2, 3}), ShapeError);
  EXPECT_THROW(T64({0, 2}, {}), ShapeError);
  const T64 t({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.numel(), 6u);
}

TEST(Tensor, CloneIsDeep) {
  T64 a({2}, {1, 2});
  T64 b = a.clone();
  b.mutable_values()[0] = 9;
  EXPECT_EQ(a[0], 1);
  EXPECT_NE(a.id(), b.id());
}

TEST(Tensor, NonFiniteOutputRaises) {
  const T64 big({1}, {std::numeric_limits<double>::max()});
  EXPECT_THROW(ops::scale(big, 10.0), NumericError);
  const T64 nan({1}, {std::numeric_limits<double>::quiet_NaN()});
  EXPECT_THROW(ops::relu(nan), NumericError);
}

TEST(Conv2d, UnitKernelIsIdentity) {
  const T64 x({2, 3, 1}, {1, 2, 3, 4, 5, 6});
  const T64 k({1, 1, 1, 1}, {1});
  EXPECT_EQ(vals(ops::conv2d(x, k, 1, 0)), vals(x));
}

TEST(Conv2d, OnesKernelSumsWindow) {
  const auto y = ops::conv2d(T64::full({3, 3, 1}, 1), T64::full({3, 3, 1, 1}, 1), 1, 0);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1}));
  EXPECT_EQ(y.item(), 9.0);
}

TEST(Conv2d, SamePaddingShape) {
  const auto y = ops::conv2d(T64::full({32, 32, 3}, 0.5), T64::full({3, 3, 3, 20}, 0.01), 1, 1);
  EXPECT_EQ(y.shape(), (Shape{32, 32, 20}));
}

TEST(Conv2d, StrideAndChannelMismatch) {
  const auto y = ops::conv2d(T64::full({8, 8, 2}, 1), T64::full({3, 3, 2, 4}, 1), 2, 1);
  EXPECT_EQ(y.shape(), (Shape{4, 4, 4}));
  EXPECT_THROW(ops::conv2d(T64::full({8, 8, 2}, 1), T64::full({3, 3, 3, 4}, 1), 1, 1), ShapeError);
}

TEST(Conv1d, IdentityKernel) {
  const T64 x({4}, {3, -1, 2, 7});
  EXPECT_EQ(vals(ops::conv1d(x, T64({3}, {0, 1, 0}))), vals(x));
}

TEST(Conv1d, OnesKernel) {
  EXPECT_EQ(vals(ops::conv1d(T64({3}, {1, 2, 3}), T64({3}, {1, 1, 1}))), (std::vector<double>{3, 6, 5}));
}

TEST(Conv1d, KernelLongerThanInputKeepsLength) {
  const auto y = ops::conv1d(T64({4}, {1, 2, 3, 4}), T64({5}, {1, 1, 1, 1, 1}));
  EXPECT_EQ(vals(y), (std::vector<double>{6, 10, 10, 9}));
}

TEST(Conv1d, EvenKernelRejected) { EXPECT_THROW(ops::conv1d(T64({3}, {1, 2, 3}), T64({2}, {1, 1})), ValueError); }

TEST(Linear, IdentityAndBias) {
  const T64 x({2}, {1, 2});
  EXPECT_EQ(vals(ops::linear(x, T64({2, 2}, {1, 0, 0, 1}), T64({2}, {0, 0}))), vals(x));
  EXPECT_EQ(vals(ops::linear(x, T64::zeros({2, 2}), T64({2}, {4, 5}))), (std::vector<double>{4, 5}));
  EXPECT_EQ(vals(ops::linear(x, T64({2, 2}, {1, 0, 0, 1}), T64({2}, {1, 1}))), (std::vector<double>{2, 3}));
}

TEST(Linear, NonSquare) {
  // weight is inputs x outputs
  const auto y = ops::linear(T64({2}, {1, 2}), T64({2, 3}, {1, 2, 3, 4, 5, 6}), T64({3}, {0, 0, 1}));
  EXPECT_EQ(vals(y), (std::vector<double>{9, 12, 16}));
}

TEST(Activation, Values) {
  EXPECT_EQ(ops::relu(T64::scalar(-1)).item(), 0.0);
  EXPECT_EQ(ops::relu(T64::scalar(2)).item(), 2.0);
  EXPECT_EQ(ops::sigmoid(T64::scalar(0)).item(), 0.5);
  EXPECT_NEAR(ops::sigmoid(T64::scalar(std::log(3.0))).item(), 0.75, 1e-15);
}

TEST(GlobalAvgPool, Values) {
  EXPECT_EQ(vals(ops::global_avg_pool(T64::full({3, 2, 4}, 1.5))), std::vector<double>(4, 1.5));
  EXPECT_EQ(vals(ops::global_avg_pool(T64({2, 1, 1}, {1, 3}))), (std::vector<double>{2}));
  EXPECT_EQ(ops::global_avg_pool(T64::full({5, 7, 3}, 0)).shape(), (Shape{3}));
}

TEST(SoftmaxCrossEntropy, Values) {
  EXPECT_NEAR(ops::softmax_cross_entropy(T64::full({7}, 0.3), 2).item(), std::log(7.0), 1e-12);
  EXPECT_NEAR(ops::softmax_cross_entropy(T64({2}, {0, std::log(3.0)}), 1).item(), std::log(4.0 / 3.0), 1e-12);
  EXPECT_NEAR(ops::softmax_cross_entropy(T64({3}, {0, 800, 0}), 1).item(), 0.0, 1e-300);
  EXPECT_THROW(ops::softmax_cross_entropy(T64({2}, {0, 0}), 2), ValueError);
}

TEST(Backward, Square) {
  T64 x = T64::scalar(3, true);
  backward(ops::mul(x, x));
  EXPECT_EQ(x.grad()[0], 6.0);
}

TEST(Backward, SigmoidAtZero) {
  T64 x = T64::scalar(0, true);
  backward(ops::sigmoid(x));
  EXPECT_EQ(x.grad()[0], 0.25);
}

TEST(Backward, SharedSubgraphAccumulates) {
  T64 x = T64::scalar(2, true);
  const auto y = ops::square(x);
  backward(ops::add(y, ops::scale(y, 3.0)));  // 4 x^2
  EXPECT_EQ(x.grad()[0], 16.0);
}

TEST(Backward, ForwardIsBitReproducible) {
  T64 x({4, 4, 2}, std::vector<double>(32));
  for (std::size_t i = 0; i < 32; ++i) x.mutable_values()[i] = std::sin(0.37 * i);
  const T64 k({3, 3, 2, 3}, std::vector<double>(54, 0.1));
  EXPECT_EQ(vals(ops::conv2d(x, k, 1, 1)), vals(ops::conv2d(x, k, 1, 1)));
}

TEST(Backward, NoGradGuardRecordsNothing) {
  T64 x = T64::scalar(3, true);
  NoGradGuard guard;
  const auto y = ops::mul(x, x);
  EXPECT_TRUE(y.is_leaf());
}

TEST(Sgd, UpdateRule) {
  std::vector<T64> params = {T64::scalar(1, true)};
  params[0].zero_grad();
  params[0].impl().grad[0] = 2;
  SgdConfig cfg;
  cfg.learning_rate = 0.5;
  sgd_step<double>(params, cfg);
  EXPECT_EQ(params[0].item(), 0.0);
}

TEST(Sgd, ZeroGradOrRateLeavesParameter) {
  SgdConfig cfg;
  std::vector<T64> params = {T64::scalar(1.25, true)};
  params[0].zero_grad();
  sgd_step<double>(params, cfg);
  EXPECT_EQ(params[0].item(), 1.25);

  cfg.learning_rate = 0.0;
  params[0].zero_grad();
  params[0].impl().grad[0] = 5;
  sgd_step<double>(params, cfg);
  EXPECT_EQ(params[0].item(), 1.25);
}

TEST(Sgd, MissingGradientRaises) {
  std::vector<T64> params = {T64::scalar(1, true)};
  EXPECT_THROW(sgd_step<double>(params, SgdConfig{}), Error);
}

TEST(Sgd, ClipRescalesGlobalNorm) {
  SgdConfig cfg;
  cfg.learning_rate = 1.0;
  cfg.grad_clip_norm = 1.0;
  std::vector<T64> params = {T64::scalar(0, true), T64::scalar(0, true)};
  for (auto& p : params) p.zero_grad();
  params[0].impl().grad[0] = 3;
  params[1].impl().grad[0] = 4;
  Sgd<double> opt(cfg);
  opt.step(params);
  EXPECT_NEAR(params[0].item(), -0.6, 1e-15);
  EXPECT_NEAR(params[1].item(), -0.8, 1e-15);

  // Below the threshold the step is untouched.
  for (auto& p : params) p.zero_grad();
  params[0].impl().grad[0] = 0.5;
  opt.step(params);
  EXPECT_NEAR(params[0].item(), -1.1, 1e-15);
}

TEST(Sgd, InvalidConfig) {
  SgdConfig cfg;
  cfg.grad_clip_norm = -1;
  EXPECT_THROW(cfg.validate(), ValueError);
  cfg = {};
  cfg.learning_rate = std::numeric_limits<double>::infinity();
  EXPECT_THROW(cfg.validate(), ValueError);
}

TEST(GradCheck, Square) {
  const double err =
      grad_check<double>([](const T64& x) { return ops::mul(x, x); }, T64::scalar(3, true), 1e-5);
  EXPECT_LT(err, 1e-8);
}

TEST(GradCheck, LinearIsExact) {
  const T64 w({3, 1}, {0.5, -2, 1.5});
  const T64 b({1}, {0.25});
  const double err =
      grad_check<double>([&](const T64& x) { return ops::linear(x, w, b); }, T64({3}, {1, 2, 3}, true), 1e-5);
  EXPECT_LT(err, 1e-9);
}

TEST(GradCheck, ComposedNet) {
  std::vector<T64> params = {T64({3, 3, 1, 2}, {0.1, -0.2, 0.3, 0.05, -0.1, 0.2, 0.15, -0.05, 0.1, 0.2, -0.3, 0.1,
                                                 0.05, 0.25, -0.15, 0.1, 0.2, -0.1},
                                 true),
                             T64({2, 3}, {0.3, -0.2, 0.5, 0.1, -0.4, 0.2}, true), T64({3}, {0.01, 0.02, -0.03}, true)};
  T64 x({4, 4, 1}, std::vector<double>(16));
  for (std::size_t i = 0; i < 16; ++i) x.mutable_values()[i] = std::cos(0.7 * i);
  const auto f = [&] {
    const auto h = ops::relu(ops::conv2d(x, params[0], 1, 1));
    return ops::softmax_cross_entropy(ops::linear(ops::global_avg_pool(h), params[1], params[2]), 1);
  };
  const auto report = grad_check_params<double>(f, params, 1e-6);
  EXPECT_EQ(report.coordinates, 18u + 6u + 3u);
  EXPECT_LT(report.max_relative_error, 1e-4);
}
