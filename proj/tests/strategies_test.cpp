#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "adafl/data.hpp"
#include "adafl/strategies.hpp"

namespace adafl {
namespace {

struct Fixture {
  MlpModel global;
  Dataset data;
};

Fixture make_fixture(std::size_t n, std::uint64_t seed) {
  Rng rng = derive_rng(seed);
  const Dataset pool = generate_synthetic(std::max<std::size_t>(n, 3), 4, 3, 0.8, seed);
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return {MlpModel::glorot({4, 6, 3}, rng), pool.subset(rows)};
}

LocalTrainConfig config(std::size_t epochs, std::size_t batch, double lr, double momentum) {
  LocalTrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = batch;
  cfg.learning_rate = lr;
  cfg.momentum = momentum;
  return cfg;
}

TEST(FedAvg, StepCountIsEpochsTimesBatchesPerEpoch) {
  const auto f = make_fixture(23, 1);
  Rng rng = derive_rng(1);
  EXPECT_EQ(local_update_fedavg(f.global, f.data, config(3, 10, 0.01, 0.5), rng).steps, 9u);
  Rng rng2 = derive_rng(1);
  EXPECT_EQ(local_update_fedavg(f.global, f.data, config(5, 10, 0.01, 0.5), rng2).steps, 5u * 3u);
  Rng rng3 = derive_rng(1);
  EXPECT_EQ(local_update_fedavg(f.global, f.data, config(2, 50, 0.01, 0.5), rng3).steps, 2u);
}

TEST(FedAvg, ZeroLearningRateReturnsGlobal) {
  const auto f = make_fixture(30, 2);
  Rng rng = derive_rng(2);
  EXPECT_EQ(local_update_fedavg(f.global, f.data, config(2, 10, 0.0, 0.5), rng).model, f.global);
}

TEST(FedAvg, DeterministicForSeed) {
  const auto f = make_fixture(40, 3);
  Rng a = derive_rng(9, {1, 2});
  Rng b = derive_rng(9, {1, 2});
  const auto ra = local_update_fedavg(f.global, f.data, config(3, 7, 0.05, 0.5), a);
  const auto rb = local_update_fedavg(f.global, f.data, config(3, 7, 0.05, 0.5), b);
  EXPECT_EQ(ra.model, rb.model);
  EXPECT_FALSE(ra.model == f.global);
}

TEST(FedAvg, EmptyDatasetThrows) {
  const auto f = make_fixture(30, 4);
  Dataset empty;
  empty.num_classes = 3;
  empty.features.resize(0, 4);
  Rng rng = derive_rng(4);
  EXPECT_THROW(local_update_fedavg(f.global, empty, config(1, 10, 0.01, 0.5), rng), InvalidArgument);
}

TEST(FedProx, ZeroMuIsBitIdenticalToFedAvg) {
  const auto f = make_fixture(50, 5);
  auto cfg = config(2, 10, 0.05, 0.5);
  cfg.strategy = Strategy::kFedProx;
  cfg.prox_mu = 0.0;
  Rng a = derive_rng(5);
  Rng b = derive_rng(5);
  EXPECT_EQ(local_update_fedprox(f.global, f.data, cfg, a).model, local_update_fedavg(f.global, f.data, cfg, b).model);
}

TEST(FedProx, HandEvaluatedProximalGradient) {
  // One-weight-one-bias model, data gradient pinned to 1 on every coordinate.
  MlpModel m({1, 1});
  const ParamVector anchor{0.0, 0.0};
  m.set_parameters(anchor);
  const double lr = 0.1;
  const double mu = 2.0;
  const ProximalTerm prox{&anchor, mu};
  auto pinned_then_prox = [&prox](const ParamVector& w, ParamVector& g) {
    g.values.setOnes();
    prox(w, g);
  };
  OptimizerState opt(m.parameter_count(), lr, 0.0);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(1, 1);
  const std::vector<int> y{0};
  sgd_step(m, opt, x, y, pinned_then_prox);
  EXPECT_EQ(m.parameters(), (ParamVector{-lr, -lr}));  // prox term is zero at the anchor
  sgd_step(m, opt, x, y, pinned_then_prox);
  const double expected = -lr - lr * (1.0 + mu * (-lr));
  EXPECT_DOUBLE_EQ(m.parameters().values[0], expected);
  EXPECT_DOUBLE_EQ(m.parameters().values[1], expected);
}

TEST(FedProx, LargerMuKeepsLocalCloserToGlobal) {
  const auto f = make_fixture(60, 6);
  auto cfg = config(5, 10, 0.05, 0.5);
  cfg.strategy = Strategy::kFedProx;
  double previous = std::numeric_limits<double>::infinity();
  for (double mu : {0.0, 0.1, 1.0, 10.0}) {
    cfg.prox_mu = mu;
    Rng rng = derive_rng(6);
    const double dist =
        euclidean_distance(local_update_fedprox(f.global, f.data, cfg, rng).model.parameters(), f.global.parameters());
    EXPECT_LT(dist, previous) << "mu " << mu;
    previous = dist;
  }
}

TEST(Scaffold, ZeroVariatesMatchFedAvgWithoutMomentum) {
  const auto f = make_fixture(45, 7);
  const ControlVariates cv(4, f.global.parameter_count());
  auto cfg = config(3, 10, 0.05, 0.5);
  cfg.strategy = Strategy::kScaffold;
  Rng a = derive_rng(7);
  Rng b = derive_rng(7);
  const auto scaffold = local_update_scaffold(f.global, cv, 2, f.data, cfg, a);
  auto plain = cfg;
  plain.momentum = 0.0;
  EXPECT_EQ(scaffold.local.model, local_update_fedavg(f.global, f.data, plain, b).model);
}

TEST(Scaffold, SingleStepVariateIsTheGradient) {
  const auto f = make_fixture(1, 8);
  const ControlVariates cv(1, f.global.parameter_count());
  auto cfg = config(1, 10, 0.1, 0.0);
  Rng rng = derive_rng(8);
  const auto res = local_update_scaffold(f.global, cv, 0, f.data, cfg, rng);
  ASSERT_EQ(res.local.steps, 1u);
  const auto g = f.global.loss_and_gradient(f.data.features, f.data.labels).gradient;
  EXPECT_LT((res.new_client_variate.values - g.values).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(res.variate_delta, res.new_client_variate);
}

TEST(Scaffold, NonZeroVariatesCorrectTheGradient) {
  const auto f = make_fixture(1, 9);
  ControlVariates cv(2, f.global.parameter_count());
  cv.server.values.setConstant(0.3);
  cv.clients[1].values.setConstant(-0.2);
  auto cfg = config(1, 1, 0.1, 0.0);
  Rng rng = derive_rng(9);
  const auto res = local_update_scaffold(f.global, cv, 1, f.data, cfg, rng);
  const auto g = f.global.loss_and_gradient(f.data.features, f.data.labels).gradient;
  const Eigen::VectorXd expected = f.global.parameters().values - 0.1 * (g.values.array() + 0.5).matrix();
  EXPECT_LT((res.local.model.parameters().values - expected).cwiseAbs().maxCoeff(), 1e-15);
  // c_i⁺ = c_i − c + (g + c − c_i) = g
  EXPECT_LT((res.new_client_variate.values - g.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Scaffold, ServerUpdateAddsMeanDeltaScaledByParticipation) {
  ControlVariates cv(3, 4);
  const ParamVector v{1.0, -2.0, 0.5, 0.0};
  const std::vector<ParamVector> deltas(3, v);
  cv.apply_server_update(deltas);
  EXPECT_EQ(cv.server, v);

  ControlVariates partial(4, 2);
  const std::vector<ParamVector> two{ParamVector{1.0, 2.0}, ParamVector{3.0, 4.0}};
  partial.apply_server_update(two);
  EXPECT_EQ(partial.server, (ParamVector{1.0, 1.5}));
}

TEST(Strategy, ParseRoundTrip) {
  for (auto s : {Strategy::kFedAvg, Strategy::kFedProx, Strategy::kScaffold}) EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_THROW(parse_strategy("fedmix"), InvalidArgument);
}

TEST(LocalTrainConfig, RejectsInvalidValues) {
  EXPECT_THROW(config(0, 10, 0.01, 0.5).validate(), InvalidArgument);
  EXPECT_THROW(config(1, 0, 0.01, 0.5).validate(), InvalidArgument);
  EXPECT_THROW(config(1, 10, -1.0, 0.5).validate(), InvalidArgument);
  EXPECT_THROW(config(1, 10, 0.01, 1.0).validate(), InvalidArgument);
  auto cfg = config(1, 10, 0.01, 0.5);
  cfg.prox_mu = -1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

}  // namespace
}  // namespace adafl
