#pragma once

// Server loop: select a cohort from the attention distribution, train it
// locally, aggregate by sample count, then move attention toward the clients
// whose models moved furthest from the new global model.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "adafl/data.hpp"
#include "adafl/error.hpp"
#include "adafl/model.hpp"
#include "adafl/random.hpp"
#include "adafl/selection.hpp"
#include "adafl/strategies.hpp"

namespace adafl {

struct FederationConfig {
  std::size_t num_clients = 100;  // M
  std::size_t rounds = 100;       // T
  double gamma_start = 0.1;
  double gamma_end = 0.1;
  std::size_t num_fractions = 1;  // F
  double alpha = 0.9;
  bool attention = true;
  LocalTrainConfig local;
  double lr_decay = 1.0;
  std::vector<std::size_t> hidden_layers{200, 200};
  std::uint64_t seed = 0;
  std::size_t eval_every = 1;
  std::size_t threads = 1;

  void validate() const {
    detail::require(num_clients >= 1, "num_clients must be >= 1");
    detail::require(rounds >= 1, "rounds must be >= 1");
    detail::require(alpha >= 0.0 && alpha < 1.0, "alpha must lie in [0, 1)");
    detail::require(lr_decay > 0.0 && lr_decay <= 1.0, "lr_decay must lie in (0, 1]");
    detail::require(eval_every >= 1, "eval_every must be >= 1");
    detail::require(threads >= 1, "threads must be >= 1");
    for (std::size_t h : hidden_layers) detail::require(h >= 1, "hidden layer sizes must be >= 1");
    local.validate();
    (void)schedule();
  }

  FractionSchedule schedule() const { return build_schedule(gamma_start, gamma_end, num_fractions, rounds); }
};

/// Client partition plus the held-out evaluation set.
struct Workload {
  ClientPartition clients;
  Dataset test;
};

struct GlobalState {
  MlpModel model;
  AttentionState attention;
  ControlVariates variates;  // empty unless the strategy is SCAFFOLD
  std::size_t round = 1;
  double learning_rate = 0.0;
  std::size_t cumulative_cost = 0;
};

struct RoundRecord {
  std::size_t round = 0;
  double gamma = 0.0;
  std::size_t cohort = 0;  // K
  std::vector<std::size_t> selected;
  std::vector<double> distances;  // aligned with `selected`
  std::size_t cost_round = 0;
  std::size_t cost_cumulative = 0;
  std::optional<double> test_accuracy;
  double learning_rate = 0.0;
  std::vector<double> attention;  // a^(t+1), after this round's update
  double wall_seconds = 0.0;
};

/// W = Σ_k (n_k / n_S)·W_k, accumulated in the order given.
inline MlpModel aggregate(std::span<const MlpModel> models, std::span<const std::size_t> sizes) {
  if (models.empty()) throw InvalidArgument("aggregate: no local models");
  if (models.size() != sizes.size()) throw DimensionError("aggregate: one sample count per model is required");
  double total = 0.0;
  for (std::size_t k = 0; k < models.size(); ++k) {
    if (models[k].layer_sizes() != models.front().layer_sizes()) {
      throw DimensionError("aggregate: local models have different architectures");
    }
    total += static_cast<double>(sizes[k]);
  }
  if (!(total > 0.0)) throw InvalidArgument("aggregate: total sample count is zero");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(models.front().parameter_count()));
  for (std::size_t k = 0; k < models.size(); ++k) {
    sum += (static_cast<double>(sizes[k]) / total) * models[k].parameters().values;
  }
  MlpModel out(models.front().layer_sizes());
  out.set_parameters(ParamVector(std::move(sum)));
  return out;
}

inline std::vector<std::size_t> model_layer_sizes(const FederationConfig& config, const Workload& workload) {
  std::vector<std::size_t> sizes{workload.test.num_features()};
  sizes.insert(sizes.end(), config.hidden_layers.begin(), config.hidden_layers.end());
  sizes.push_back(static_cast<std::size_t>(workload.test.num_classes));
  return sizes;
}

inline GlobalState init_state(const FederationConfig& config, const Workload& workload) {
  config.validate();
  if (workload.clients.num_clients() != config.num_clients) {
    throw DimensionError("workload has " + std::to_string(workload.clients.num_clients()) + " clients, config expects " +
                         std::to_string(config.num_clients));
  }
  if (workload.test.empty()) throw InvalidArgument("workload test set is empty");
  for (const auto& c : workload.clients.clients) {
    if (c.num_features() != workload.test.num_features()) {
      throw DimensionError("client and test feature dimensions differ");
    }
  }
  Rng init_rng = derive_rng(config.seed, {stream::kInit});
  GlobalState state{MlpModel::glorot(model_layer_sizes(config, workload), init_rng),
                    init_attention(workload.clients.sizes()),
                    {},
                    1,
                    config.local.learning_rate,
                    0};
  if (config.local.strategy == Strategy::kScaffold) {
    state.variates = ControlVariates(config.num_clients, state.model.parameter_count());
  }
  return state;
}

namespace detail {

/// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Executes round `state.round` and advances the state to the next round.
inline RoundRecord run_round(GlobalState& state, const FederationConfig& config, const Workload& workload) {
  const auto started = std::chrono::steady_clock::now();
  const FractionSchedule schedule = config.schedule();
  const std::size_t t = state.round;
  if (t > config.rounds) throw InvalidArgument("run_round: all " + std::to_string(config.rounds) + " rounds are done");

  RoundRecord rec;
  rec.round = t;
  rec.gamma = fraction_at(schedule, t);
  rec.cohort = cohort_size(rec.gamma, config.num_clients);
  rec.learning_rate = state.learning_rate;

  Rng selection_rng = derive_rng(config.seed, {stream::kSelection, t});
  rec.selected = sample_clients(state.attention, rec.cohort, selection_rng).selected;

  LocalTrainConfig local_cfg = config.local;
  local_cfg.learning_rate = state.learning_rate;

  const std::size_t k = rec.selected.size();
  std::vector<std::optional<MlpModel>> locals(k);
  std::vector<ParamVector> new_variates(config.local.strategy == Strategy::kScaffold ? k : 0);
  std::vector<ParamVector> variate_deltas(new_variates.size());
  detail::parallel_for(k, config.threads, [&](std::size_t s) {
    const std::size_t client = rec.selected[s];
    const Dataset& data = workload.clients.clients[client];
    Rng rng = derive_rng(config.seed, {stream::kLocal, t, client});
    switch (config.local.strategy) {
      case Strategy::kFedAvg:
        locals[s] = local_update_fedavg(state.model, data, local_cfg, rng).model;
        break;
      case Strategy::kFedProx:
        locals[s] = local_update_fedprox(state.model, data, local_cfg, rng).model;
        break;
      case Strategy::kScaffold: {
        auto res = local_update_scaffold(state.model, state.variates, client, data, local_cfg, rng);
        locals[s] = std::move(res.local.model);
        new_variates[s] = std::move(res.new_client_variate);
        variate_deltas[s] = std::move(res.variate_delta);
        break;
      }
    }
  });

  std::vector<MlpModel> models;
  std::vector<std::size_t> sizes;
  models.reserve(k);
  sizes.reserve(k);
  for (std::size_t s = 0; s < k; ++s) {
    models.push_back(std::move(*locals[s]));
    sizes.push_back(workload.clients.clients[rec.selected[s]].size());
  }
  state.model = aggregate(models, sizes);

  // Divergence is measured against the freshly aggregated model.
  rec.distances.reserve(k);
  for (const auto& m : models) rec.distances.push_back(euclidean_distance(state.model.parameters(), m.parameters()));

  if (config.attention) {
    state.attention = update_attention(state.attention, rec.selected, rec.distances, config.alpha);
  } else {
    ++state.attention.round;
  }

  if (config.local.strategy == Strategy::kScaffold) {
    for (std::size_t s = 0; s < k; ++s) state.variates.clients[rec.selected[s]] = std::move(new_variates[s]);
    state.variates.apply_server_update(variate_deltas);
  }

  if (t % config.eval_every == 0 || t == config.rounds) rec.test_accuracy = evaluate(state.model, workload.test);

  rec.cost_round = rec.cohort;
  state.cumulative_cost += rec.cost_round;
  rec.cost_cumulative = state.cumulative_cost;
  rec.attention = state.attention.scores;

  ++state.round;
  state.learning_rate *= config.lr_decay;
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

struct FederationRun {
  std::vector<RoundRecord> records;
  GlobalState final_state;
};

/// Runs all T rounds from a fresh state. `on_round` (optional) sees each record as it completes.
template <typename OnRound>
FederationRun run_federation(const FederationConfig& config, const Workload& workload, OnRound&& on_round) {
  GlobalState state = init_state(config, workload);
  std::vector<RoundRecord> records;
  records.reserve(config.rounds);
  for (std::size_t t = 1; t <= config.rounds; ++t) {
    records.push_back(run_round(state, config, workload));
    on_round(records.back());
  }
  return {std::move(records), std::move(state)};
}

inline FederationRun run_federation(const FederationConfig& config, const Workload& workload) {
  return run_federation(config, workload, [](const RoundRecord&) {});
}

}  // namespace adafl
