#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "adafl/model.hpp"
#include "oracles.hpp"

namespace adafl {
namespace {

using testing::brute_force_distance;
using testing::finite_difference_gradient;
using testing::max_relative_error;
using testing::to_std;

MlpModel random_model(std::vector<std::size_t> sizes, Rng& rng, double scale = 1.0) {
  MlpModel m(std::move(sizes));
  ParamVector p(static_cast<Eigen::Index>(m.parameter_count()));
  for (Eigen::Index i = 0; i < p.values.size(); ++i) p.values[i] = scale * (2.0 * uniform01(rng) - 1.0);
  m.set_parameters(p);
  return m;
}

Eigen::MatrixXd random_features(Eigen::Index n, Eigen::Index d, Rng& rng) {
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 2.0 * uniform01(rng) - 1.0;
  return x;
}

TEST(Flatten, OneLayerIsRowMajorWeightsThenBias) {
  MlpModel m({2, 2});
  m.weights(0) << 1, 2, 3, 4;
  m.bias(0) << 5, 6;
  EXPECT_EQ(flatten(m), (ParamVector{1, 2, 3, 4, 5, 6}));
}

TEST(Flatten, NeedsAtLeastOneLayer) {
  EXPECT_THROW(MlpModel({3}), DimensionError);
  EXPECT_THROW(MlpModel({}), DimensionError);
  EXPECT_GT(MlpModel({1, 1}).parameter_count(), 0u);
}

TEST(Flatten, LengthIsSumOfLayerBlocks) {
  MlpModel m({784, 200, 200, 10});
  EXPECT_EQ(m.parameter_count(), 784u * 200 + 200 + 200u * 200 + 200 + 200u * 10 + 10);
}

TEST(Flatten, RoundTripIsBitExact) {
  Rng rng = derive_rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<std::size_t> sizes{3 + static_cast<std::size_t>(trial % 4), 5, 4};
    const MlpModel m = MlpModel::glorot(sizes, rng);
    const MlpModel back = unflatten(flatten(m), sizes);
    EXPECT_EQ(back, m);
    EXPECT_EQ(std::memcmp(back.parameters().values.data(), m.parameters().values.data(),
                          m.parameter_count() * sizeof(double)),
              0);
  }
}

TEST(Flatten, UnflattenRejectsWrongLength) {
  EXPECT_THROW(unflatten(ParamVector{1, 2, 3}, {2, 2}), DimensionError);
}

TEST(Glorot, WeightsWithinLimitAndBiasesZero) {
  Rng rng = derive_rng(3);
  const MlpModel m = MlpModel::glorot({20, 30, 10}, rng);
  const double limit0 = std::sqrt(6.0 / 50.0);
  EXPECT_LE(m.weights(0).cwiseAbs().maxCoeff(), limit0);
  EXPECT_TRUE(m.bias(0).isZero(0.0));
  EXPECT_TRUE(m.bias(1).isZero(0.0));
  Rng again = derive_rng(3);
  EXPECT_EQ(MlpModel::glorot({20, 30, 10}, again), m);
}

TEST(EuclideanDistance, Identity) {
  const ParamVector w{1.5, -2.0, 3.25};
  EXPECT_EQ(euclidean_distance(w, w), 0.0);
}

TEST(EuclideanDistance, ThreeFourFive) { EXPECT_EQ(euclidean_distance(ParamVector{3, 4}, ParamVector{0, 0}), 5.0); }

TEST(EuclideanDistance, MatchesAccumulationOracle) {
  Rng rng = derive_rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    ParamVector a(100), b(100);
    for (int i = 0; i < 100; ++i) {
      a.values[i] = 10.0 * uniform01(rng) - 5.0;
      b.values[i] = 10.0 * uniform01(rng) - 5.0;
    }
    EXPECT_NEAR(euclidean_distance(a, b), brute_force_distance(to_std(a), to_std(b)), 1e-12);
  }
}

TEST(EuclideanDistance, MetricAxiomsOnRandomTriples) {
  Rng rng = derive_rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    ParamVector x(8), y(8), z(8);
    for (int i = 0; i < 8; ++i) {
      x.values[i] = uniform01(rng) - 0.5;
      y.values[i] = uniform01(rng) - 0.5;
      z.values[i] = uniform01(rng) - 0.5;
    }
    const double xy = euclidean_distance(x, y);
    EXPECT_GE(xy, 0.0);
    EXPECT_EQ(xy, euclidean_distance(y, x));
    EXPECT_LE(xy, euclidean_distance(x, z) + euclidean_distance(z, y) + 1e-12);
    EXPECT_GT(xy, 0.0);
  }
}

TEST(EuclideanDistance, LengthMismatchThrows) {
  EXPECT_THROW(euclidean_distance(ParamVector{1, 2}, ParamVector{1, 2, 3}), DimensionError);
}

TEST(Gradient, MatchesFiniteDifferencesOnTwoInputThreeClassOneHiddenUnit) {
  Rng rng = derive_rng(21);
  const MlpModel m = random_model({2, 1, 3}, rng);
  const Eigen::MatrixXd x = random_features(4, 2, rng);
  const std::vector<int> y{0, 2, 1, 2};
  const auto [loss, grad] = m.loss_and_gradient(x, y);
  EXPECT_NEAR(loss, testing::reference_loss(m, x, y), 1e-12);
  EXPECT_LT(max_relative_error(grad.values, finite_difference_gradient(m, x, y)), 1e-4);
}

TEST(Gradient, MatchesFiniteDifferencesOnRandomTinyModels) {
  Rng rng = derive_rng(22);
  const std::vector<std::vector<std::size_t>> shapes{{2, 2}, {1, 2, 2}, {2, 1, 3}, {1, 1, 1, 2}, {3, 2}};
  for (int trial = 0; trial < 50; ++trial) {
    const auto& shape = shapes[static_cast<std::size_t>(trial) % shapes.size()];
    const MlpModel m = random_model(shape, rng);
    ASSERT_LE(m.parameter_count(), 10u);
    const Eigen::MatrixXd x = random_features(3, static_cast<Eigen::Index>(shape.front()), rng);
    std::vector<int> y(3);
    for (auto& label : y) label = static_cast<int>(rng() % shape.back());
    const auto grad = m.loss_and_gradient(x, y).gradient;
    EXPECT_LT(max_relative_error(grad.values, finite_difference_gradient(m, x, y)), 1e-4) << "trial " << trial;
  }
}

TEST(SgdStep, ZeroGradientFixedPoint) {
  // Saturated softmax: probabilities are exactly one-hot on the target class.
  MlpModel m({2, 3});
  m.bias(0) << 1000.0, 0.0, 0.0;
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 2);
  const std::vector<int> y{0, 0, 0};
  const ParamVector before = m.parameters();
  for (double lr : {0.01, 1.0, 50.0}) {
    OptimizerState opt(m.parameter_count(), lr, 0.5);
    sgd_step(m, opt, x, y);
    EXPECT_EQ(m.parameters(), before);
  }
}

TEST(SgdStep, PlainStepMovesAgainstFiniteDifferenceGradient) {
  Rng rng = derive_rng(23);
  MlpModel m = random_model({2, 1, 3}, rng);
  const Eigen::MatrixXd x = random_features(5, 2, rng);
  const std::vector<int> y{0, 1, 2, 1, 0};
  const Eigen::VectorXd fd = finite_difference_gradient(m, x, y);
  const ParamVector w0 = m.parameters();
  const double lr = 0.1;
  OptimizerState opt(m.parameter_count(), lr, 0.0);
  const double loss = sgd_step(m, opt, x, y);
  EXPECT_NEAR(loss, testing::reference_loss(unflatten(w0, m.layer_sizes()), x, y), 1e-12);
  const Eigen::VectorXd implied = (w0.values - m.parameters().values) / lr;
  EXPECT_LT(max_relative_error(implied, fd), 1e-4);
}

TEST(SgdStep, MomentumRecursionOverTwoIdenticalGradients) {
  MlpModel m({2, 2});
  const ParamVector w0{0.1, -0.2, 0.3, 0.4, -0.5, 0.6};
  m.set_parameters(w0);
  const ParamVector g{1.0, -2.0, 0.5, 0.25, 3.0, -1.0};
  auto fixed = [&g](const ParamVector&, ParamVector& grad) { grad = g; };
  const double lr = 0.01;
  OptimizerState opt(m.parameter_count(), lr, 0.5);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(1, 2);
  const std::vector<int> y{1};
  sgd_step(m, opt, x, y, fixed);
  sgd_step(m, opt, x, y, fixed);
  const Eigen::VectorXd expected = w0.values - 2.5 * lr * g.values;
  EXPECT_LT((m.parameters().values - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SgdStep, ZeroLearningRateLeavesParameters) {
  Rng rng = derive_rng(24);
  MlpModel m = random_model({3, 4, 2}, rng);
  const ParamVector before = m.parameters();
  OptimizerState opt(m.parameter_count(), 0.0, 0.5);
  const Eigen::MatrixXd x = random_features(6, 3, rng);
  const std::vector<int> y{0, 1, 0, 1, 1, 0};
  for (int i = 0; i < 3; ++i) sgd_step(m, opt, x, y);
  EXPECT_EQ(m.parameters(), before);
}

TEST(SgdStep, LossDecreasesOnSeparableToySet) {
  Rng rng = derive_rng(25);
  MlpModel m = MlpModel::glorot({2, 8, 2}, rng);
  Eigen::MatrixXd x(40, 2);
  std::vector<int> y(40);
  for (Eigen::Index i = 0; i < 40; ++i) {
    const int label = static_cast<int>(i % 2);
    x(i, 0) = (label ? 1.0 : -1.0) + 0.3 * (uniform01(rng) - 0.5);
    x(i, 1) = uniform01(rng) - 0.5;
    y[static_cast<std::size_t>(i)] = label;
  }
  OptimizerState opt(m.parameter_count(), 0.01, 0.0);
  std::vector<double> losses;
  for (int step = 0; step < 100; ++step) losses.push_back(sgd_step(m, opt, x, y));
  int increases = 0;
  for (std::size_t i = 1; i < losses.size(); ++i) increases += losses[i] > losses[i - 1];
  EXPECT_LE(increases, 5);
  EXPECT_LT(losses.back(), losses.front());
}

TEST(SgdStep, DimensionMismatchThrows) {
  MlpModel m({3, 2});
  OptimizerState opt(m.parameter_count(), 0.1, 0.0);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 4);
  const std::vector<int> y{0, 1};
  EXPECT_THROW(sgd_step(m, opt, x, y), DimensionError);
  OptimizerState wrong(m.parameter_count() + 1, 0.1, 0.0);
  EXPECT_THROW(sgd_step(m, wrong, Eigen::MatrixXd::Zero(2, 3), y), DimensionError);
}

TEST(SgdStep, NonFiniteGradientNamesTheLayer) {
  MlpModel m({2, 3, 2});
  m.weights(1)(0, 0) = std::numeric_limits<double>::quiet_NaN();
  OptimizerState opt(m.parameter_count(), 0.1, 0.0);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 2);
  const std::vector<int> y{0, 1};
  try {
    sgd_step(m, opt, x, y);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("layer"), std::string::npos);
  }
}

TEST(OptimizerState, RejectsBadMomentum) {
  EXPECT_THROW(OptimizerState(3, 0.1, 1.0), InvalidArgument);
  EXPECT_THROW(OptimizerState(3, 0.1, -0.1), InvalidArgument);
}

Dataset one_hot_dataset(const std::vector<int>& labels) {
  Dataset d;
  d.num_classes = 2;
  d.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), 2);
  for (std::size_t i = 0; i < labels.size(); ++i) d.features(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  d.labels = labels;
  return d;
}

TEST(Evaluate, PerfectModelScoresOne) {
  MlpModel m({2, 2});
  m.weights(0) << 5, 0, 0, 5;
  EXPECT_EQ(evaluate(m, one_hot_dataset({0, 1, 1, 0, 1})), 1.0);
}

TEST(Evaluate, CountsCorrectPredictions) {
  MlpModel m({2, 2});
  m.weights(0) << 5, 0, 0, 5;
  Dataset d = one_hot_dataset({0, 1, 1, 0});
  d.labels[3] = 1;  // features say class 0
  EXPECT_EQ(evaluate(m, d), 0.75);
}

TEST(Evaluate, InvariantUnderPermutation) {
  Rng rng = derive_rng(26);
  const MlpModel m = MlpModel::glorot({4, 6, 3}, rng);
  Dataset d;
  d.num_classes = 3;
  d.features = random_features(50, 4, rng);
  for (int i = 0; i < 50; ++i) d.labels.push_back(static_cast<int>(rng() % 3));
  std::vector<std::size_t> perm(50);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  EXPECT_EQ(evaluate(m, d), evaluate(m, d.subset(perm)));
}

TEST(Evaluate, EmptyDatasetThrows) {
  MlpModel m({2, 2});
  Dataset d;
  d.num_classes = 2;
  d.features.resize(0, 2);
  EXPECT_THROW(evaluate(m, d), InvalidArgument);
}

}  // namespace
}  // namespace adafl
