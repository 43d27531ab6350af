#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "adafl/data.hpp"
#include "adafl/federation.hpp"
#include "adafl/harness/config.hpp"
#include "adafl/harness/metrics.hpp"
#include "adafl/harness/trace.hpp"

namespace adafl {

struct TargetOutcome {
  double target = 0.0;
  std::optional<std::size_t> stopping_round;
  std::optional<std::size_t> cost;
};

struct ExperimentResult {
  RunConfig config;
  std::vector<RoundRecord> records;
  std::optional<SummaryMetrics> summary;  // absent when fewer evaluations than the metric window
  std::vector<TargetOutcome> targets;

  /// Test accuracies of the evaluated rounds, in round order.
  std::vector<double> accuracies() const {
    std::vector<double> out;
    for (const auto& r : records) {
      if (r.test_accuracy) out.push_back(*r.test_accuracy);
    }
    return out;
  }
};

/// Loads or generates the training data, splits it among clients and returns
/// it with the test set.
inline Workload build_workload(const RunConfig& cfg) {
  const auto& d = cfg.data;
  const std::uint64_t seed = cfg.data_seed();
  Dataset train;
  Dataset test;
  if (d.source == DataSource::kSynthetic) {
    const Dataset all = generate_synthetic(d.samples + d.test_samples, d.features, d.classes, d.spread, seed);
    auto split = split_train_test(all, d.test_samples, seed);
    train = std::move(split.train);
    test = std::move(split.test);
  } else {
    train = load_idx(d.train_images, d.train_labels);
    test = load_idx(d.test_images, d.test_labels);
    test.num_classes = train.num_classes = std::max(train.num_classes, test.num_classes);
  }
  Workload w;
  w.clients = d.partition == PartitionKind::kShards
                  ? partition_noniid_shards(train, cfg.federation.num_clients, d.shards_per_client, seed)
                  : partition_iid(train, cfg.federation.num_clients, seed);
  w.test = std::move(test);
  return w;
}

/// Post-hoc metrics for a finished trace.
inline void summarize(ExperimentResult& result) {
  const auto& cfg = result.config;
  std::vector<double> acc;
  std::vector<std::size_t> acc_round;
  for (const auto& r : result.records) {
    if (r.test_accuracy) {
      acc.push_back(*r.test_accuracy);
      acc_round.push_back(r.round);
    }
  }
  result.summary.reset();
  if (acc.size() >= cfg.average_window) result.summary = summary_metrics(acc, cfg.average_window);
  result.targets.clear();
  for (double target : cfg.targets) {
    TargetOutcome out{target, std::nullopt, std::nullopt};
    if (auto idx = stopping_round(acc, target, cfg.stopping_window)) {
      const std::size_t round = acc_round[*idx - 1];
      out.stopping_round = round;
      out.cost = result.records[round - 1].cost_cumulative;
    }
    result.targets.push_back(out);
  }
}

template <typename OnRound>
ExperimentResult run_experiment(const RunConfig& cfg, OnRound&& on_round) {
  cfg.validate();
  const Workload workload = build_workload(cfg);
  ExperimentResult result;
  result.config = cfg;
  result.records = run_federation(cfg.federation, workload, std::forward<OnRound>(on_round)).records;
  summarize(result);
  return result;
}

inline ExperimentResult run_experiment(const RunConfig& cfg) {
  return run_experiment(cfg, [](const RoundRecord&) {});
}

inline nlohmann::json summary_json(const ExperimentResult& result) {
  nlohmann::json j;
  nlohmann::json echo = nlohmann::json::object();
  for (const auto& [key, value] : result.config.echo) echo[key] = value;
  j["config"] = echo;
  j["seed"] = result.config.federation.seed;
  j["rounds"] = result.records.size();
  j["total_cost"] = result.records.empty() ? 0 : result.records.back().cost_cumulative;
  j["average_window"] = result.config.average_window;
  j["stopping_window"] = result.config.stopping_window;
  if (result.summary) {
    j["average_last"] = result.summary->average_last;
    j["best_accuracy"] = result.summary->best;
  } else {
    j["average_last"] = nullptr;
    j["best_accuracy"] = nullptr;
  }
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& t : result.targets) {
    nlohmann::json entry;
    entry["target"] = t.target;
    entry["stopping_round"] = t.stopping_round ? nlohmann::json(*t.stopping_round) : nlohmann::json(nullptr);
    entry["cost"] = t.cost ? nlohmann::json(*t.cost) : nlohmann::json(nullptr);
    targets.push_back(entry);
  }
  j["targets"] = targets;
  return j;
}

struct OutputPaths {
  std::filesystem::path trace;
  std::filesystem::path summary;
};

/// Writes trace.csv and summary.json into `dir`, creating it if needed.
inline OutputPaths write_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  OutputPaths paths{dir / "trace.csv", dir / "summary.json"};
  std::ofstream trace(paths.trace, std::ios::binary);
  if (!trace) throw Error("cannot write " + paths.trace.string());
  write_trace_csv(trace, result.records);
  std::ofstream summary(paths.summary, std::ios::binary);
  if (!summary) throw Error("cannot write " + paths.summary.string());
  summary << summary_json(result).dump(2) << '\n';
  return paths;
}

}  // namespace adafl
