#pragma once

// Attention-weighted client selection and the stepwise client-fraction schedule.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "adafl/error.hpp"
#include "adafl/random.hpp"

namespace adafl {

/// Per-client attention scores; also the selection distribution for the round.
struct AttentionState {
  std::vector<double> scores;
  std::size_t round = 1;

  std::size_t num_clients() const { return scores.size(); }
};

/// a_k = n_k / Σ n_j.
inline AttentionState init_attention(std::span<const std::size_t> sizes) {
  if (sizes.empty()) throw InvalidArgument("init_attention: no clients");
  double total = 0.0;
  for (std::size_t n : sizes) {
    if (n == 0) throw InvalidArgument("init_attention: every client needs at least one sample");
    total += static_cast<double>(n);
  }
  AttentionState state;
  state.scores.reserve(sizes.size());
  for (std::size_t n : sizes) state.scores.push_back(static_cast<double>(n) / total);
  return state;
}

/// Moves attention mass among the selected clients in proportion to their
/// model distances; unselected scores are copied unchanged:
///
///   a_i ← α·a_i + (1 − α)·(d_i / Σ_S d)·Σ_S a       for i ∈ S
///
/// All-zero distances carry no ranking signal and leave the scores as they are.
inline AttentionState update_attention(const AttentionState& state, std::span<const std::size_t> selected,
                                       std::span<const double> distances, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw InvalidArgument("update_attention: alpha must lie in [0, 1)");
  if (selected.size() != distances.size()) {
    throw DimensionError("update_attention: " + std::to_string(selected.size()) + " selected clients but " +
                         std::to_string(distances.size()) + " distances");
  }
  double distance_sum = 0.0;
  double selected_mass = 0.0;
  for (std::size_t s = 0; s < selected.size(); ++s) {
    if (selected[s] >= state.num_clients()) throw InvalidArgument("update_attention: client index out of range");
    if (!(distances[s] >= 0.0) || !std::isfinite(distances[s])) {
      throw InvalidArgument("update_attention: distances must be finite and nonnegative");
    }
    distance_sum += distances[s];
    selected_mass += state.scores[selected[s]];
  }

  AttentionState next{state.scores, state.round + 1};
  if (distance_sum == 0.0) return next;
  for (std::size_t s = 0; s < selected.size(); ++s) {
    const std::size_t i = selected[s];
    next.scores[i] = alpha * state.scores[i] + (1.0 - alpha) * (distances[s] / distance_sum) * selected_mass;
  }
  return next;
}

/// Cohort drawn for one round, ascending client order.
struct SelectionOutcome {
  std::vector<std::size_t> selected;

  std::size_t size() const { return selected.size(); }
};

/// K distinct clients by successive weighted draws, each draw taken from the
/// remaining clients in proportion to their scores. If the remaining mass is
/// zero the draw is uniform over the remaining clients.
inline SelectionOutcome sample_clients(const AttentionState& state, std::size_t k, Rng& rng) {
  const std::size_t m = state.num_clients();
  if (k < 1 || k > m) {
    throw InvalidArgument("sample_clients: cohort size " + std::to_string(k) + " outside [1, " + std::to_string(m) +
                          "]");
  }
  SelectionOutcome out;
  if (k == m) {
    out.selected.resize(m);
    std::iota(out.selected.begin(), out.selected.end(), std::size_t{0});
    return out;
  }

  std::vector<std::size_t> remaining(m);
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  out.selected.reserve(k);
  for (std::size_t draw = 0; draw < k; ++draw) {
    double mass = 0.0;
    for (std::size_t i : remaining) mass += state.scores[i];
    std::size_t pick = remaining.size() - 1;
    const double u = uniform01(rng);
    if (mass > 0.0) {
      const double target = u * mass;
      double acc = 0.0;
      for (std::size_t r = 0; r < remaining.size(); ++r) {
        acc += state.scores[remaining[r]];
        if (target < acc) {
          pick = r;
          break;
        }
      }
      // Rounding can leave target >= acc; fall back to the last positive-score client.
      if (pick == remaining.size() - 1) {
        while (pick > 0 && state.scores[remaining[pick]] <= 0.0) --pick;
      }
    } else {
      pick = std::min(static_cast<std::size_t>(u * static_cast<double>(remaining.size())), remaining.size() - 1);
    }
    out.selected.push_back(remaining[pick]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  std::sort(out.selected.begin(), out.selected.end());
  return out;
}

/// Step schedule γ^(t): F equal blocks of ⌊T/F⌋ rounds (the last block also
/// takes the remainder), rising by a fixed increment from γ^(1) to γ^(T).
struct FractionSchedule {
  double gamma_start = 0.1;
  double gamma_end = 0.1;
  std::size_t num_fractions = 1;
  std::size_t total_rounds = 1;
  std::size_t block_length = 1;  // Δ_T
  double gamma_step = 0.0;       // Δγ

  /// 1-based block containing round t: ⌈t / Δ_T⌉ capped at F.
  std::size_t block_of(std::size_t t) const {
    return std::min((t + block_length - 1) / block_length, num_fractions);
  }

  /// Fraction used by block b (1-based).
  double block_fraction(std::size_t b) const {
    if (b <= 1) return gamma_start;
    if (b >= num_fractions) return gamma_end;
    // Interpolating from both ends keeps round decimals exact (0.1, 0.2, 0.3, ...).
    const double f = static_cast<double>(num_fractions - 1);
    return (static_cast<double>(num_fractions - b) * gamma_start + static_cast<double>(b - 1) * gamma_end) / f;
  }

  std::size_t block_first_round(std::size_t b) const { return (b - 1) * block_length + 1; }
  std::size_t block_last_round(std::size_t b) const {
    return b == num_fractions ? total_rounds : b * block_length;
  }
};

inline FractionSchedule build_schedule(double gamma_start, double gamma_end, std::size_t num_fractions,
                                       std::size_t total_rounds) {
  if (!(gamma_start > 0.0 && gamma_end < 1.0)) {
    throw InvalidArgument("build_schedule: fractions must lie in (0, 1)");
  }
  if (gamma_end < gamma_start) {
    throw InvalidArgument("build_schedule: decreasing schedules are not supported (gamma_end < gamma_start)");
  }
  if (num_fractions < 1) throw InvalidArgument("build_schedule: need at least one fraction");
  if (total_rounds < num_fractions) throw InvalidArgument("build_schedule: total rounds must be >= fraction count");
  if (num_fractions == 1 && gamma_start != gamma_end) {
    throw InvalidArgument("build_schedule: a single-fraction schedule needs gamma_start == gamma_end");
  }
  FractionSchedule s;
  s.gamma_start = gamma_start;
  s.gamma_end = gamma_end;
  s.num_fractions = num_fractions;
  s.total_rounds = total_rounds;
  s.block_length = total_rounds / num_fractions;
  s.gamma_step = num_fractions > 1 ? (gamma_end - gamma_start) / static_cast<double>(num_fractions - 1) : 0.0;
  return s;
}

inline double fraction_at(const FractionSchedule& schedule, std::size_t t) {
  if (t < 1 || t > schedule.total_rounds) {
    throw InvalidArgument("fraction_at: round " + std::to_string(t) + " outside [1, " +
                          std::to_string(schedule.total_rounds) + "]");
  }
  return schedule.block_fraction(schedule.block_of(t));
}

/// K = round(γ·M), clamped to [1, M].
inline std::size_t cohort_size(double gamma, std::size_t num_clients) {
  const double k = std::round(gamma * static_cast<double>(num_clients));
  if (!(k >= 1.0)) return 1;
  return std::min(static_cast<std::size_t>(k), num_clients);
}

}  // namespace adafl
