#pragma once

// Client-side training for one round: FedAvg (plain momentum SGD), FedProx
// (proximal gradient term) and SCAFFOLD (control-variate corrected SGD).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "adafl/dataset.hpp"
#include "adafl/error.hpp"
#include "adafl/model.hpp"
#include "adafl/random.hpp"

namespace adafl {

enum class Strategy { kFedAvg, kFedProx, kScaffold };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kFedAvg: return "fedavg";
    case Strategy::kFedProx: return "fedprox";
    case Strategy::kScaffold: return "scaffold";
  }
  return "unknown";
}

inline Strategy parse_strategy(std::string_view name) {
  if (name == "fedavg") return Strategy::kFedAvg;
  if (name == "fedprox") return Strategy::kFedProx;
  if (name == "scaffold") return Strategy::kScaffold;
  throw InvalidArgument("unknown strategy '" + std::string(name) + "' (expected fedavg, fedprox or scaffold)");
}

struct LocalTrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 10;
  double learning_rate = 0.01;
  double momentum = 0.5;
  Strategy strategy = Strategy::kFedAvg;
  double prox_mu = 0.0;

  void validate() const {
    detail::require(epochs >= 1, "local epochs must be >= 1");
    detail::require(batch_size >= 1, "local batch size must be >= 1");
    detail::require(learning_rate >= 0.0 && std::isfinite(learning_rate), "learning rate must be finite and >= 0");
    detail::require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
    detail::require(prox_mu >= 0.0 && std::isfinite(prox_mu), "prox_mu must be finite and >= 0");
  }
};

/// SCAFFOLD server variate c and one variate per client, all starting at zero.
struct ControlVariates {
  ParamVector server;
  std::vector<ParamVector> clients;

  ControlVariates() = default;
  ControlVariates(std::size_t num_clients, std::size_t parameter_count)
      : server(static_cast<Eigen::Index>(parameter_count)),
        clients(num_clients, ParamVector(static_cast<Eigen::Index>(parameter_count))) {}

  /// c ← c + (|S| / M)·mean_S(Δc_i) = c + Σ_S Δc_i / M.
  void apply_server_update(std::span<const ParamVector> deltas) {
    if (deltas.empty()) return;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(server.values.size());
    for (const auto& d : deltas) {
      if (d.size() != server.size()) throw DimensionError("control variate delta has the wrong length");
      sum += d.values;
    }
    const double selected = static_cast<double>(deltas.size());
    const double total = static_cast<double>(clients.size());
    server.values += (selected / total) * (sum / selected);
  }
};

/// Adds prox_mu·(w − anchor) to the batch gradient.
struct ProximalTerm {
  const ParamVector* anchor = nullptr;
  double mu = 0.0;

  void operator()(const ParamVector& w, ParamVector& g) const { g.values += mu * (w.values - anchor->values); }
};

struct LocalResult {
  MlpModel model;
  std::size_t steps = 0;
  double last_loss = 0.0;
};

struct ScaffoldResult {
  LocalResult local;
  ParamVector new_client_variate;
  ParamVector variate_delta;
};

namespace detail {

/// E epochs of shuffled mini-batch SGD from a copy of `global`. The final
/// partial batch of an epoch is used as-is.
template <typename Correction>
LocalResult run_local_sgd(const MlpModel& global, const Dataset& data, const LocalTrainConfig& cfg, double momentum,
                          Rng& rng, const Correction& correct) {
  cfg.validate();
  if (data.empty()) throw InvalidArgument("local update: client dataset is empty");
  LocalResult out{global, 0, 0.0};
  OptimizerState opt(global.parameter_count(), cfg.learning_rate, momentum);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::MatrixXd batch_x;
  std::vector<int> batch_y;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      batch_x.resize(static_cast<Eigen::Index>(len), data.features.cols());
      batch_y.resize(len);
      for (std::size_t i = 0; i < len; ++i) {
        batch_x.row(static_cast<Eigen::Index>(i)) = data.features.row(static_cast<Eigen::Index>(order[start + i]));
        batch_y[i] = data.labels[order[start + i]];
      }
      out.last_loss = sgd_step(out.model, opt, batch_x, batch_y, correct);
      ++out.steps;
    }
  }
  return out;
}

}  // namespace detail

/// Plain local SGD with momentum.
inline LocalResult local_update_fedavg(const MlpModel& global, const Dataset& data, const LocalTrainConfig& cfg,
                                       Rng& rng) {
  return detail::run_local_sgd(global, data, cfg, cfg.momentum, rng, NoCorrection{});
}

/// Local SGD whose gradient gains prox_mu·(w − w_global).
inline LocalResult local_update_fedprox(const MlpModel& global, const Dataset& data, const LocalTrainConfig& cfg,
                                        Rng& rng) {
  if (cfg.prox_mu == 0.0) return local_update_fedavg(global, data, cfg, rng);
  const ParamVector anchor = global.parameters();
  return detail::run_local_sgd(global, data, cfg, cfg.momentum, rng, ProximalTerm{&anchor, cfg.prox_mu});
}

/// Local SGD (momentum 0) on the corrected gradient g − c_i + c, followed by the
/// cheap variate refresh c_i⁺ = c_i − c + (w_global − w_local) / (τ·η).
inline ScaffoldResult local_update_scaffold(const MlpModel& global, const ControlVariates& variates,
                                            std::size_t client_id, const Dataset& data, const LocalTrainConfig& cfg,
                                            Rng& rng) {
  if (client_id >= variates.clients.size()) throw InvalidArgument("local_update_scaffold: client id out of range");
  const ParamVector& ci = variates.clients[client_id];
  const ParamVector& c = variates.server;
  if (ci.size() != global.parameter_count() || c.size() != global.parameter_count()) {
    throw DimensionError("local_update_scaffold: control variates do not match the model");
  }

  const Eigen::VectorXd shift = c.values - ci.values;
  LocalResult local = shift.isZero(0.0)
                          ? detail::run_local_sgd(global, data, cfg, 0.0, rng, NoCorrection{})
                          : detail::run_local_sgd(global, data, cfg, 0.0, rng,
                                                  [&shift](const ParamVector&, ParamVector& g) { g.values += shift; });

  const double scale = static_cast<double>(local.steps) * cfg.learning_rate;
  ParamVector updated(ci.values - c.values);
  // η = 0 leaves the model where it started; there is no gradient estimate to record.
  if (scale > 0.0) updated.values += (global.parameters().values - local.model.parameters().values) / scale;
  ParamVector delta(updated.values - ci.values);
  return {std::move(local), std::move(updated), std::move(delta)};
}

}  // namespace adafl
