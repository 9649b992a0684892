#pragma once

// Per-station decoupled birth-death model. Arrivals and departures at a
// station are independent Poisson streams; rebalancing shows up as
// deterministic shifts of the occupancy distribution. The failure mass of
// each station, summed over stations, upper-bounds the failure probability
// of the coupled system.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fleetsize/errors.hpp"
#include "fleetsize/model.hpp"
#include "fleetsize/parallel.hpp"
#include "fleetsize/uniformization.hpp"

namespace fleetsize {

inline constexpr double kStationMassTolerance = 1e-9;

class Capacity {
 public:
  static Capacity bounded(long c) {
    if (c < 0) throw InputError("capacity must be >= 0");
    return Capacity(c);
  }
  static Capacity unbounded() { return Capacity(-1); }

  bool is_bounded() const { return value_ >= 0; }
  long value() const { return value_; }

 private:
  explicit Capacity(long v) : value_(v) {}
  long value_;
};

/// Occupancy distribution of one station. q[j] is the probability of holding
/// j vehicles with no failure so far; qF the absorbed failure mass.
///
/// In truncated mode (unbounded capacity) the vector ends at a working
/// capacity, capacity failures are disabled, and mass pushed past the top
/// state is parked in `tail` instead of being counted as failure.
struct StationDistribution {
  std::vector<double> q;
  double qF = 0.0;
  double tail = 0.0;
  double t = 0.0;
  bool truncated = false;

  static StationDistribution point_mass(long v, long top_state, bool truncated = false) {
    if (v < 0 || v > top_state) throw InputError("initial stock outside 0..capacity");
    StationDistribution d;
    d.q.assign(static_cast<std::size_t>(top_state) + 1, 0.0);
    d.q[static_cast<std::size_t>(v)] = 1.0;
    d.truncated = truncated;
    return d;
  }

  long top_state() const { return static_cast<long>(q.size()) - 1; }

  double total_mass() const {
    double s = qF + tail;
    for (double x : q) s += x;
    return s;
  }
};

namespace detail {

inline void check_station_mass(const StationDistribution& d) {
  const double drift = std::abs(d.total_mass() - 1.0);
  if (drift > kStationMassTolerance)
    throw InvariantError("station mass drifted by " + std::to_string(drift) + " at t=" +
                         std::to_string(d.t));
}

}  // namespace detail

/// Advances under constant rates to t1. Rates must be constant on [dist.t, t1).
inline StationDistribution step_smooth(StationDistribution dist, double arrival_rate,
                                       double departure_rate, double t1) {
  if (!(arrival_rate >= 0.0) || !(departure_rate >= 0.0)) throw InputError("negative rate");
  if (t1 < dist.t) throw InputError("cannot integrate backwards in time");
  const double dt = t1 - dist.t;
  const double total = arrival_rate + departure_rate;
  dist.t = t1;
  if (total == 0.0 || dt == 0.0) return dist;

  const std::size_t top = dist.q.size() - 1;
  const std::size_t f_slot = top + 1;
  const std::size_t tail_slot = top + 2;
  const double up = arrival_rate / total;
  const double down = departure_rate / total;
  const bool truncated = dist.truncated;

  std::vector<double> state(dist.q);
  state.push_back(dist.qF);
  state.push_back(dist.tail);

  uniformized_advance(state, total * dt, [&](const std::vector<double>& cur,
                                             std::vector<double>& next) {
    for (std::size_t j = 0; j <= top; ++j) {
      const double from_below = j > 0 ? up * cur[j - 1] : 0.0;
      const double from_above = j < top ? down * cur[j + 1] : 0.0;
      next[j] = from_below + from_above;
    }
    next[f_slot] = cur[f_slot] + down * cur[0];
    next[tail_slot] = cur[tail_slot];
    if (truncated)
      next[tail_slot] += up * cur[top];
    else
      next[f_slot] += up * cur[top];
  });

  std::copy(state.begin(), state.begin() + static_cast<std::ptrdiff_t>(top + 1), dist.q.begin());
  dist.qF = state[f_slot];
  dist.tail = state[tail_slot];
  for (double& x : dist.q)
    if (x < 0.0 && x > -1e-12) x = 0.0;
  detail::check_station_mass(dist);
  return dist;
}

/// Profile-driven variant: rejects intervals that straddle a breakpoint or a jump.
inline StationDistribution step_smooth(const StationDistribution& dist,
                                       const StationFlowProfile& profile, double t1) {
  const double t0 = dist.t;
  for (const auto& e : merged_event_timeline(profile))
    if (e.time > t0 && e.time < t1)
      throw InputError("smooth step crosses an event at t=" + std::to_string(e.time));
  return step_smooth(dist, profile.lambda_a(t0), profile.lambda_d(t0), t1);
}

/// Deterministic one-vehicle shift: arrival moves mass up, departure down.
inline StationDistribution apply_jump(StationDistribution dist, EventKind kind) {
  auto& q = dist.q;
  if (kind == EventKind::arrival) {
    const double overflow = q.back();
    std::rotate(q.rbegin(), q.rbegin() + 1, q.rend());
    q.front() = 0.0;
    (dist.truncated ? dist.tail : dist.qF) += overflow;
  } else if (kind == EventKind::departure) {
    const double empty = q.front();
    std::rotate(q.begin(), q.begin() + 1, q.end());
    q.back() = 0.0;
    dist.qF += empty;
  }
  return dist;
}

struct StationTrajectory {
  StationDistribution final;
  std::vector<StationDistribution> samples;  // one per requested sample time
};

/// Integrates one station from a point mass at v over [0, T], alternating
/// smooth pieces and jumps along the merged timeline. Samples taken at a
/// jump instant include that jump.
inline StationTrajectory evolve_station(const StationFlowProfile& profile, long v, long top_state,
                                        bool truncated, double T,
                                        std::span<const double> sample_times = {}) {
  if (T > profile.horizon() || T < 0.0) throw InputError("T outside the model horizon");
  if (!std::is_sorted(sample_times.begin(), sample_times.end()))
    throw InputError("sample times must be sorted");
  if (!sample_times.empty() && (sample_times.front() < 0.0 || sample_times.back() > T))
    throw InputError("sample times must lie in [0, T]");

  StationTrajectory out;
  auto dist = StationDistribution::point_mass(v, top_state, truncated);
  std::size_t next_sample = 0;

  auto advance_to = [&](double t) {
    if (t > dist.t) dist = step_smooth(std::move(dist), profile.lambda_a(dist.t),
                                       profile.lambda_d(dist.t), t);
  };
  auto flush_samples_before = [&](double t) {
    while (next_sample < sample_times.size() && sample_times[next_sample] < t) {
      advance_to(sample_times[next_sample]);
      out.samples.push_back(dist);
      ++next_sample;
    }
  };

  for (const auto& e : merged_event_timeline(profile)) {
    if (e.time > T) break;
    flush_samples_before(e.time);
    advance_to(e.time);
    if (e.kind != EventKind::breakpoint) dist = apply_jump(std::move(dist), e.kind);
  }
  flush_samples_before(std::nextafter(T, T + 1.0));
  advance_to(T);
  detail::check_station_mass(dist);
  out.final = std::move(dist);
  return out;
}

/// Initial working capacity for unbounded stations: stock plus expected
/// arrivals plus ten standard deviations.
inline long initial_working_capacity(const StationFlowProfile& profile, long v, double T) {
  const double arrivals = profile.lambda_a.integral(0.0, T) +
                          static_cast<double>(profile.rho_a.size());
  const double base = static_cast<double>(v) + arrivals;
  return v + static_cast<long>(std::ceil(arrivals)) +
         static_cast<long>(std::ceil(10.0 * std::sqrt(base))) + 1;
}

/// Failure probability qF(T; v, c). For unbounded capacity the working
/// capacity doubles until the truncated tail mass is below `tail_tolerance`.
inline double station_failure_probability(const StationFlowProfile& profile, long v,
                                          Capacity capacity, double T,
                                          double tail_tolerance = 1e-10) {
  if (v < 0) throw InputError("initial stock must be >= 0");
  if (capacity.is_bounded()) {
    if (v > capacity.value()) throw InputError("initial stock exceeds capacity");
    return evolve_station(profile, v, capacity.value(), false, T).final.qF;
  }
  long working = initial_working_capacity(profile, v, T);
  for (;;) {
    const auto traj = evolve_station(profile, v, working, true, T);
    if (traj.final.tail < tail_tolerance) return traj.final.qF;
    if (working > (1L << 40)) throw InvariantError("working capacity diverged");
    working *= 2;
  }
}

inline std::vector<StationFlowProfile> all_station_profiles(const DemandModel& model,
                                                            const RebalancingPlan& plan,
                                                            bool with_delay) {
  std::vector<StationFlowProfile> profiles(model.k());
  parallel_for(model.k(), [&](std::size_t i) {
    profiles[i] = aggregate_station_flows(model, plan, StationId{i}, with_delay);
  });
  return profiles;
}

/// Per-station failure masses qF_i(T).
inline std::vector<double> station_failure_probabilities(const DemandModel& model,
                                                         const RebalancingPlan& plan,
                                                         const SystemDesign& design, double T,
                                                         bool with_delay) {
  design.validate(model.k());
  const auto profiles = all_station_profiles(model, plan, with_delay);
  std::vector<double> qf(model.k());
  parallel_for(model.k(), [&](std::size_t i) {
    qf[i] = station_failure_probability(profiles[i], design.v[i], Capacity::bounded(design.c[i]), T);
  });
  return qf;
}

/// Sum of station failure masses; a bound, so it is never clamped to 1.
inline double system_failure_upper_bound(const DemandModel& model, const RebalancingPlan& plan,
                                         const SystemDesign& design, double T, bool with_delay) {
  double bound = 0.0;
  for (double x : station_failure_probabilities(model, plan, design, T, with_delay)) bound += x;
  return bound;
}

/// qF_i at each sample time, indexed [station][sample].
inline std::vector<std::vector<double>> station_failure_trajectories(
    const DemandModel& model, const RebalancingPlan& plan, const SystemDesign& design,
    std::span<const double> sample_times, bool with_delay) {
  design.validate(model.k());
  const double T = sample_times.empty() ? 0.0 : sample_times.back();
  const auto profiles = all_station_profiles(model, plan, with_delay);
  std::vector<std::vector<double>> out(model.k());
  parallel_for(model.k(), [&](std::size_t i) {
    const auto traj = evolve_station(profiles[i], design.v[i], design.c[i], false, T, sample_times);
    out[i].reserve(traj.samples.size());
    for (const auto& s : traj.samples) out[i].push_back(s.qF);
  });
  return out;
}

}  // namespace fleetsize
