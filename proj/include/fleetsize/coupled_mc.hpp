#pragma once

// Event-driven Monte Carlo of the coupled system. A run stops at its first
// failure, matching the absorbing failure state of the analytic model.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <tuple>
#include <vector>

#include "fleetsize/errors.hpp"
#include "fleetsize/model.hpp"
#include "fleetsize/parallel.hpp"
#include "fleetsize/random.hpp"

namespace fleetsize {

/// Event times of a nonhomogeneous Poisson process on [0, T], by thinning
/// against the maximum rate.
inline std::vector<double> sample_poisson_process(const PiecewiseConstantIntensity& rate, double T,
                                                  SplitMix64& rng) {
  std::vector<double> times;
  const double envelope = rate.max_value();
  if (envelope <= 0.0) return times;
  double t = 0.0;
  for (;;) {
    t += rng.exponential(envelope);
    if (t > T) break;
    const double r = rate(t);
    if (r == envelope || rng.uniform() * envelope < r) times.push_back(t);
  }
  return times;
}

enum class FailureKind : std::uint8_t { none, availability, capacity };

struct SimulationRun {
  std::uint64_t seed = 0;
  std::optional<double> failed_at;
  FailureKind failure = FailureKind::none;
  std::vector<std::vector<long>> snapshots;  // stocks at sample times before failure
};

struct EstimateWithCI {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;

  static EstimateWithCI from_count(std::size_t hits, std::size_t n) {
    EstimateWithCI e;
    e.n = n;
    if (n == 0) return e;
    e.mean = static_cast<double>(hits) / static_cast<double>(n);
    e.std_error = std::sqrt(e.mean * (1.0 - e.mean) / static_cast<double>(n));
    return e;
  }
};

struct CurvePoint {
  double t = 0.0;
  EstimateWithCI estimate;
};

namespace detail {

struct Departure {
  double time;
  std::uint32_t o, d;
  bool rebalance;
};

struct Arrival {
  double time;
  std::uint32_t o, d;
  std::uint64_t seq;
  bool operator>(const Arrival& b) const {
    return std::tie(time, d, o, seq) > std::tie(b.time, b.d, b.o, b.seq);
  }
};

inline void check_simulation_inputs(const DemandModel& model, const RebalancingPlan& plan,
                                    const SystemDesign& design, double T) {
  design.validate(model.k());
  plan.check_against(model);
  if (T < 0.0 || T > model.horizon()) throw InputError("T outside the model horizon");
}

/// Core run loop. on_sample(index, stocks) fires for each sample time that
/// precedes the first failure.
template <class OnSample>
SimulationRun run_coupled(const DemandModel& model, const RebalancingPlan& plan,
                          const SystemDesign& design, double T, std::uint64_t seed,
                          bool with_delay, std::span<const double> sample_times,
                          OnSample&& on_sample) {
  const std::size_t k = model.k();
  std::vector<Departure> departures;
  for (std::size_t o = 0; o < k; ++o)
    for (std::size_t d = 0; d < k; ++d) {
      if (o == d) continue;
      const auto& rate = model.lambda(o, d);
      if (!rate.is_zero()) {
        SplitMix64 rng(seed, o * k + d);
        for (double t : sample_poisson_process(rate, T, rng))
          departures.push_back({t, static_cast<std::uint32_t>(o), static_cast<std::uint32_t>(d), false});
      }
      for (double t : plan.departures(o, d))
        if (t <= T)
          departures.push_back({t, static_cast<std::uint32_t>(o), static_cast<std::uint32_t>(d), true});
    }
  // Relocations precede rentals at an identical (time, o, d).
  std::sort(departures.begin(), departures.end(), [](const Departure& a, const Departure& b) {
    return std::tie(a.time, a.o, a.d, b.rebalance) < std::tie(b.time, b.o, b.d, a.rebalance);
  });

  SimulationRun run;
  run.seed = seed;
  std::vector<long> stock = design.v;
  std::priority_queue<Arrival, std::vector<Arrival>, std::greater<>> in_transit;
  std::uint64_t seq = 0;
  std::size_t next_sample = 0;

  auto flush_samples_before = [&](double t) {
    while (next_sample < sample_times.size() && sample_times[next_sample] < t)
      on_sample(next_sample++, stock);
  };
  auto fail = [&](double t, FailureKind kind) {
    run.failed_at = t;
    run.failure = kind;
  };
  auto process_arrivals_until = [&](double t) {
    while (!in_transit.empty() && in_transit.top().time <= t) {
      const Arrival a = in_transit.top();
      in_transit.pop();
      flush_samples_before(a.time);
      if (stock[a.d] == design.c[a.d]) {
        fail(a.time, FailureKind::capacity);
        return false;
      }
      ++stock[a.d];
    }
    return true;
  };

  for (const auto& e : departures) {
    if (!process_arrivals_until(e.time)) return run;
    flush_samples_before(e.time);
    if (stock[e.o] == 0) {
      fail(e.time, FailureKind::availability);
      return run;
    }
    if (!with_delay) {
      if (stock[e.d] == design.c[e.d]) {
        fail(e.time, FailureKind::capacity);
        return run;
      }
      --stock[e.o];
      ++stock[e.d];
      continue;
    }
    --stock[e.o];
    const double arrival = e.time + model.eta(e.o, e.d);
    if (arrival <= T) in_transit.push({arrival, e.o, e.d, seq++});
  }
  if (!process_arrivals_until(T)) return run;
  flush_samples_before(std::nextafter(T, T + 1.0));
  return run;
}

}  // namespace detail

/// One realization. Identical inputs and seed give a bit-identical run.
inline SimulationRun simulate_run(const DemandModel& model, const RebalancingPlan& plan,
                                  const SystemDesign& design, double T, std::uint64_t seed,
                                  bool with_delay, std::span<const double> sample_times = {}) {
  detail::check_simulation_inputs(model, plan, design, T);
  SimulationRun snapshots_holder;
  auto run = detail::run_coupled(model, plan, design, T, seed, with_delay, sample_times,
                                 [&](std::size_t, const std::vector<long>& stock) {
                                   snapshots_holder.snapshots.push_back(stock);
                                 });
  run.snapshots = std::move(snapshots_holder.snapshots);
  return run;
}

/// First-failure times of runs seed0 .. seed0 + n_runs - 1 (infinity when a run survives).
inline std::vector<double> simulate_failure_times(const DemandModel& model,
                                                  const RebalancingPlan& plan,
                                                  const SystemDesign& design, double T,
                                                  std::size_t n_runs, bool with_delay,
                                                  std::uint64_t seed0) {
  detail::check_simulation_inputs(model, plan, design, T);
  std::vector<double> failed_at(n_runs, std::numeric_limits<double>::infinity());
  parallel_for(n_runs, [&](std::size_t r) {
    const auto run = detail::run_coupled(model, plan, design, T, seed0 + r, with_delay, {},
                                         [](std::size_t, const std::vector<long>&) {});
    if (run.failed_at) failed_at[r] = *run.failed_at;
  });
  return failed_at;
}

/// Fraction of runs failed by each sample time. Non-decreasing in t by construction.
inline std::vector<CurvePoint> estimate_failure_curve(const DemandModel& model,
                                                      const RebalancingPlan& plan,
                                                      const SystemDesign& design, double T,
                                                      std::size_t n_runs,
                                                      std::span<const double> sample_times,
                                                      bool with_delay, std::uint64_t seed0 = 0) {
  if (n_runs == 0) throw InputError("need at least one run");
  auto failed_at = simulate_failure_times(model, plan, design, T, n_runs, with_delay, seed0);
  std::sort(failed_at.begin(), failed_at.end());
  std::vector<CurvePoint> curve;
  curve.reserve(sample_times.size());
  for (double t : sample_times) {
    const auto hits = static_cast<std::size_t>(
        std::upper_bound(failed_at.begin(), failed_at.end(), t) - failed_at.begin());
    curve.push_back({t, EstimateWithCI::from_count(hits, n_runs)});
  }
  return curve;
}

/// Occupancy marginals P(V_i(t) = j) for the requested stations, indexed
/// [station][sample][stock]. Failed runs land in no stock state.
inline std::vector<std::vector<std::vector<EstimateWithCI>>> estimate_marginals(
    const DemandModel& model, const RebalancingPlan& plan, const SystemDesign& design, double T,
    std::size_t n_runs, std::span<const std::size_t> stations,
    std::span<const double> sample_times, bool with_delay, std::uint64_t seed0 = 0) {
  detail::check_simulation_inputs(model, plan, design, T);
  if (n_runs == 0) throw InputError("need at least one run");
  for (auto i : stations)
    if (i >= model.k()) throw InputError("invalid station");

  using Counts = std::vector<std::vector<std::vector<std::size_t>>>;
  auto empty_counts = [&] {
    Counts c(stations.size());
    for (std::size_t s = 0; s < stations.size(); ++s)
      c[s].assign(sample_times.size(),
                  std::vector<std::size_t>(static_cast<std::size_t>(design.c[stations[s]]) + 1, 0));
    return c;
  };
  const std::size_t blocks = std::min(worker_count(), n_runs);
  std::vector<Counts> partial(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    partial[b] = empty_counts();
    const std::size_t begin = n_runs * b / blocks, end = n_runs * (b + 1) / blocks;
    for (std::size_t r = begin; r < end; ++r)
      detail::run_coupled(model, plan, design, T, seed0 + r, with_delay, sample_times,
                          [&](std::size_t sample, const std::vector<long>& stock) {
                            for (std::size_t s = 0; s < stations.size(); ++s)
                              ++partial[b][s][sample][static_cast<std::size_t>(stock[stations[s]])];
                          });
  });

  std::vector<std::vector<std::vector<EstimateWithCI>>> out(stations.size());
  for (std::size_t s = 0; s < stations.size(); ++s) {
    out[s].resize(sample_times.size());
    for (std::size_t t = 0; t < sample_times.size(); ++t) {
      const std::size_t states = static_cast<std::size_t>(design.c[stations[s]]) + 1;
      for (std::size_t j = 0; j < states; ++j) {
        std::size_t hits = 0;
        for (const auto& p : partial) hits += p[s][t][j];
        out[s][t].push_back(EstimateWithCI::from_count(hits, n_runs));
      }
    }
  }
  return out;
}

}  // namespace fleetsize
