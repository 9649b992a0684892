#pragma once

// Transient solution of a CTMC over one interval with constant rates:
//
//   p(t + dt) = sum_n Poisson(n; L dt) * P^n p(t),   P = I + Q / L
//
// where L is a uniformization rate no smaller than any exit rate. The caller
// supplies one step of the stochastic matrix P. Absorbing masses (failure,
// truncated tails) live inside the vector, so every power P^n p conserves
// total mass and the weighted sum does too.

#include <cmath>
#include <cstddef>
#include <vector>

namespace fleetsize {

// Larger chunks underflow exp(-x) relative to the terms near the mode.
inline constexpr double kMaxPoissonChunk = 32.0;

/// Advances `state` by P^n weighted with Poisson(rate_times_dt) probabilities.
/// `step(cur, next)` must overwrite `next` with P * cur.
template <class StepFn>
void uniformized_advance(std::vector<double>& state, double rate_times_dt, StepFn&& step) {
  if (!(rate_times_dt > 0.0)) return;
  const auto chunks = static_cast<std::size_t>(std::ceil(rate_times_dt / kMaxPoissonChunk));
  const double x = rate_times_dt / static_cast<double>(chunks);

  std::vector<double> cur(state.size());
  std::vector<double> next(state.size());
  std::vector<double> acc(state.size());
  for (std::size_t chunk = 0; chunk < chunks; ++chunk) {
    cur = state;
    double weight = std::exp(-x);
    double weight_sum = weight;
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] = weight * cur[j];

    for (std::size_t n = 1;; ++n) {
      step(cur, next);
      cur.swap(next);
      weight *= x / static_cast<double>(n);
      weight_sum += weight;
      for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += weight * cur[j];
      // Past the mode the remaining tail is bounded by a geometric series.
      const double ratio = x / static_cast<double>(n + 1);
      if (ratio < 0.5 && weight * ratio / (1.0 - ratio) < 1e-17 * weight_sum) break;
    }
    for (std::size_t j = 0; j < acc.size(); ++j) state[j] = acc[j] / weight_sum;
  }
}

}  // namespace fleetsize
