#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>

#include "adafl/error.hpp"
#include "adafl/selection.hpp"

namespace adafl {

/// Total upload units over rounds 1..T*: Σ_t K_t with K_t = cohort_size(γ^(t), M).
inline std::size_t communication_cost(const FractionSchedule& schedule, std::size_t t_star, std::size_t num_clients) {
  if (t_star < 1 || t_star > schedule.total_rounds) {
    throw InvalidArgument("communication_cost: T* = " + std::to_string(t_star) + " outside [1, " +
                          std::to_string(schedule.total_rounds) + "]");
  }
  std::size_t total = 0;
  for (std::size_t t = 1; t <= t_star; ++t) total += cohort_size(fraction_at(schedule, t), num_clients);
  return total;
}

/// First 1-based t >= window whose trailing window mean is strictly above `target`.
inline std::optional<std::size_t> stopping_round(std::span<const double> accuracy, double target,
                                                 std::size_t window = 5) {
  if (window < 1) throw InvalidArgument("stopping_round: window must be >= 1");
  // Each window is summed afresh so results never depend on running-sum drift.
  for (std::size_t t = window; t <= accuracy.size(); ++t) {
    const auto w = accuracy.subspan(t - window, window);
    if (std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(window) > target) return t;
  }
  return std::nullopt;
}

struct SummaryMetrics {
  double average_last = 0.0;
  double best = 0.0;
};

/// Mean of the final `window` accuracies and the best accuracy anywhere in the trace.
inline SummaryMetrics summary_metrics(std::span<const double> accuracy, std::size_t window = 10) {
  if (window < 1) throw InvalidArgument("summary_metrics: window must be >= 1");
  if (accuracy.size() < window) {
    throw InvalidArgument("summary_metrics: trace has " + std::to_string(accuracy.size()) + " entries, window needs " +
                          std::to_string(window));
  }
  const auto tail = accuracy.last(window);
  SummaryMetrics out;
  out.average_last = std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(window);
  out.best = *std::max_element(accuracy.begin(), accuracy.end());
  return out;
}

}  // namespace adafl
