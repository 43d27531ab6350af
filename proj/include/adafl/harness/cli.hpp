#pragma once

// Command-line front end:
//   adafl run <config> [--seed N] [--out DIR] [--override section.key=value]...
//   adafl schedule <config> [--override ...]
//   adafl validate <config> [--override ...]

#include <cstdint>
#include <exception>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "adafl/harness/config.hpp"
#include "adafl/harness/experiment.hpp"
#include "adafl/harness/metrics.hpp"

namespace adafl {

inline void print_schedule(std::ostream& out, const RunConfig& cfg) {
  const auto schedule = cfg.federation.schedule();
  const std::size_t m = cfg.federation.num_clients;
  out << fmt::format("{:>5} {:>8} {:>8} {:>8} {:>6} {:>8} {:>10}\n", "block", "first", "last", "gamma", "K", "rounds",
                     "cost");
  for (std::size_t b = 1; b <= schedule.num_fractions; ++b) {
    const std::size_t first = schedule.block_first_round(b);
    const std::size_t last = schedule.block_last_round(b);
    const double gamma = schedule.block_fraction(b);
    const std::size_t k = cohort_size(gamma, m);
    out << fmt::format("{:>5} {:>8} {:>8} {:>8} {:>6} {:>8} {:>10}\n", b, first, last, gamma, k, last - first + 1,
                       k * (last - first + 1));
  }
  out << fmt::format("projected max cost: {} units over {} rounds with {} clients\n",
                     communication_cost(schedule, schedule.total_rounds, m), schedule.total_rounds, m);
}

/// Runs the CLI with `args` (args[0] is the program name). Returns the exit status.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Federated learning simulator with attention-based client selection and dynamic fractions", "adafl"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool quiet = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "Run configuration file")->required();
    sub->add_option("--override", overrides, "Override a config key (section.key=value); repeatable");
  };
  auto* run = app.add_subcommand("run", "Execute an experiment and write trace.csv and summary.json");
  add_common(run);
  run->add_option("--seed", seed, "Experiment seed (overrides experiment.seed)");
  run->add_option("--out", out_dir, "Output directory (overrides experiment.output_dir)");
  run->add_flag("--quiet", quiet, "Suppress per-round progress");
  auto* schedule = app.add_subcommand("schedule", "Print the client-fraction schedule and its projected cost");
  add_common(schedule);
  auto* validate = app.add_subcommand("validate", "Parse and validate a configuration");
  add_common(validate);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (seed) overrides.push_back("experiment.seed=" + std::to_string(*seed));
    if (out_dir) overrides.push_back("experiment.output_dir=" + *out_dir);
    const RunConfig cfg = load_config(config_path, overrides);

    if (validate->parsed()) {
      out << "config OK: " << cfg.federation.rounds << " rounds, " << cfg.federation.num_clients << " clients, strategy "
          << to_string(cfg.federation.local.strategy) << (cfg.federation.attention ? ", attention on" : ", attention off")
          << '\n';
      return 0;
    }
    if (schedule->parsed()) {
      print_schedule(out, cfg);
      return 0;
    }

    const auto result = run_experiment(cfg, [&](const RoundRecord& r) {
      if (quiet) return;
      out << fmt::format("round {:>5}  gamma {:<4}  K {:>3}  cost {:>7}  acc {}\n", r.round, r.gamma, r.cohort,
                         r.cost_cumulative, r.test_accuracy ? fmt::format("{:.4f}", *r.test_accuracy) : "-");
    });
    const auto paths = write_outputs(result, cfg.output_dir);
    if (result.summary) {
      out << fmt::format("average of last {}: {:.4f}  best: {:.4f}\n", cfg.average_window,
                         result.summary->average_last, result.summary->best);
    }
    for (const auto& t : result.targets) {
      out << fmt::format("target {}: ", t.target)
          << (t.stopping_round ? fmt::format("T* = {} (cost {})", *t.stopping_round, *t.cost) : "not reached") << '\n';
    }
    out << "wrote " << paths.trace.string() << " and " << paths.summary.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "adafl: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace adafl
