#pragma once

// Exact transient integration of the coupled model over the joint occupancy
// of all stations. Vehicles are conserved, so only the slice of states whose
// stocks sum to the fleet size is ever reachable; that slice is the storage.
// Travel delays are not represented: relocations are instantaneous.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "fleetsize/errors.hpp"
#include "fleetsize/model.hpp"
#include "fleetsize/uniformization.hpp"

namespace fleetsize {

inline constexpr std::size_t kDefaultCoupledStateCap = 2'000'000;
inline constexpr double kCoupledMassTolerance = 1e-8;

using StateTuple = std::vector<long>;

/// Moves one vehicle from o to d, ignoring capacity and availability.
inline StateTuple apply_relocation(StateTuple m, StationId o, StationId d) {
  if (o == d) return m;
  m.at(o.index) -= 1;
  m.at(d.index) += 1;
  return m;
}

inline StateTuple apply_relocation_inverse(StateTuple m, StationId o, StationId d) {
  return apply_relocation(std::move(m), d, o);
}

class CoupledStateSpace {
 public:
  CoupledStateSpace(std::vector<long> capacities, long fleet,
                    std::size_t size_cap = kDefaultCoupledStateCap)
      : capacities_(std::move(capacities)), fleet_(fleet) {
    const std::size_t k = capacities_.size();
    if (k == 0) throw InputError("state space needs at least one station");
    strides_.resize(k);
    std::size_t product = 1;
    for (std::size_t i = 0; i < k; ++i) {
      if (capacities_[i] < 0) throw InputError("capacity must be >= 0");
      strides_[i] = product;
      const auto radix = static_cast<std::size_t>(capacities_[i]) + 1;
      if (product > size_cap / radix)
        throw StateSpaceTooLarge("coupled state space exceeds the cap of " +
                                 std::to_string(size_cap) + " states");
      product *= radix;
    }
    lookup_.assign(product, -1);
    StateTuple m(k, 0);
    enumerate(0, fleet_, m);
  }

  std::size_t k() const { return capacities_.size(); }
  std::size_t size() const { return full_index_.size(); }
  long fleet() const { return fleet_; }
  const std::vector<long>& capacities() const { return capacities_; }

  std::span<const long> state(std::size_t s) const {
    return {states_.data() + s * k(), k()};
  }

  /// Slice index of a tuple, or -1 when it is outside the capacities or the slice.
  std::int64_t index_of(std::span<const long> m) const {
    if (m.size() != k()) return -1;
    std::size_t full = 0;
    for (std::size_t i = 0; i < k(); ++i) {
      if (m[i] < 0 || m[i] > capacities_[i]) return -1;
      full += static_cast<std::size_t>(m[i]) * strides_[i];
    }
    return lookup_[full];
  }

  /// Target of relocating o -> d from state s, or -1 when that relocation fails.
  std::int64_t relocation_target(std::size_t s, std::size_t o, std::size_t d) const {
    const long* m = states_.data() + s * k();
    if (m[o] == 0 || m[d] == capacities_[d]) return -1;
    return lookup_[full_index_[s] - strides_[o] + strides_[d]];
  }

 private:
  void enumerate(std::size_t i, long remaining, StateTuple& m) {
    if (i + 1 == k()) {
      if (remaining > capacities_[i]) return;
      m[i] = remaining;
      std::size_t full = 0;
      for (std::size_t j = 0; j < k(); ++j) full += static_cast<std::size_t>(m[j]) * strides_[j];
      lookup_[full] = static_cast<std::int64_t>(full_index_.size());
      full_index_.push_back(full);
      states_.insert(states_.end(), m.begin(), m.end());
      return;
    }
    for (long x = 0; x <= std::min(remaining, capacities_[i]); ++x) {
      m[i] = x;
      enumerate(i + 1, remaining - x, m);
    }
  }

  std::vector<long> capacities_;
  long fleet_;
  std::vector<std::size_t> strides_;
  std::vector<std::int64_t> lookup_;
  std::vector<std::size_t> full_index_;
  std::vector<long> states_;
};

struct CoupledDistribution {
  std::vector<double> p;  // over CoupledStateSpace slice indices
  double pF = 0.0;
  double t = 0.0;

  double total_mass() const {
    double s = pF;
    for (double x : p) s += x;
    return s;
  }
};

namespace detail {

inline void check_coupled_mass(const CoupledDistribution& d) {
  const double drift = std::abs(d.total_mass() - 1.0);
  if (drift > kCoupledMassTolerance)
    throw InvariantError("coupled mass drifted by " + std::to_string(drift) + " at t=" +
                         std::to_string(d.t));
}

}  // namespace detail

inline CoupledDistribution coupled_point_mass(const CoupledStateSpace& space,
                                              std::span<const long> v) {
  const auto s = space.index_of(v);
  if (s < 0) throw InputError("initial stock outside the coupled state space");
  CoupledDistribution d;
  d.p.assign(space.size(), 0.0);
  d.p[static_cast<std::size_t>(s)] = 1.0;
  return d;
}

/// Advances to t1; every demand rate must be constant on [dist.t, t1).
inline CoupledDistribution coupled_step_smooth(CoupledDistribution dist,
                                               const CoupledStateSpace& space,
                                               const DemandModel& model, double t1) {
  if (t1 < dist.t) throw InputError("cannot integrate backwards in time");
  const std::size_t k = space.k();
  if (model.k() != k) throw InputError("model and state space disagree on station count");

  struct Flow {
    std::size_t o, d;
    double share;
  };
  std::vector<Flow> flows;
  double total = 0.0;
  for (std::size_t o = 0; o < k; ++o)
    for (std::size_t d = 0; d < k; ++d) {
      if (o == d) continue;
      const double rate = model.lambda(o, d)(dist.t);
      if (rate > 0.0) {
        flows.push_back({o, d, rate});
        total += rate;
      }
    }
  const double dt = t1 - dist.t;
  dist.t = t1;
  if (total == 0.0 || dt == 0.0) return dist;
  for (auto& f : flows) f.share /= total;

  const std::size_t n = space.size();
  std::vector<std::int64_t> targets(n * flows.size());
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t f = 0; f < flows.size(); ++f)
      targets[s * flows.size() + f] = space.relocation_target(s, flows[f].o, flows[f].d);

  std::vector<double> state(std::move(dist.p));
  state.push_back(dist.pF);
  uniformized_advance(state, total * dt, [&](const std::vector<double>& cur,
                                             std::vector<double>& next) {
    std::fill(next.begin(), next.end() - 1, 0.0);
    double failed = cur[n];
    for (std::size_t s = 0; s < n; ++s) {
      const double mass = cur[s];
      if (mass == 0.0) continue;
      const std::int64_t* row = targets.data() + s * flows.size();
      for (std::size_t f = 0; f < flows.size(); ++f) {
        const double moved = flows[f].share * mass;
        if (row[f] < 0)
          failed += moved;
        else
          next[static_cast<std::size_t>(row[f])] += moved;
      }
    }
    next[n] = failed;
  });
  dist.pF = state[n];
  state.pop_back();
  dist.p = std::move(state);
  detail::check_coupled_mass(dist);
  return dist;
}

/// One deterministic relocation o -> d; mass that cannot move becomes failure.
inline CoupledDistribution coupled_apply_rebalance(CoupledDistribution dist,
                                                   const CoupledStateSpace& space, StationId o,
                                                   StationId d) {
  if (o == d) throw InputError("rebalancing needs distinct stations");
  std::vector<double> next(dist.p.size(), 0.0);
  for (std::size_t s = 0; s < dist.p.size(); ++s) {
    if (dist.p[s] == 0.0) continue;
    const auto target = space.relocation_target(s, o.index, d.index);
    if (target < 0)
      dist.pF += dist.p[s];
    else
      next[static_cast<std::size_t>(target)] += dist.p[s];
  }
  dist.p = std::move(next);
  return dist;
}

/// P(V_i = j) for every station i and stock j.
inline std::vector<std::vector<double>> coupled_marginals(const CoupledDistribution& dist,
                                                          const CoupledStateSpace& space) {
  std::vector<std::vector<double>> out(space.k());
  for (std::size_t i = 0; i < space.k(); ++i)
    out[i].assign(static_cast<std::size_t>(space.capacities()[i]) + 1, 0.0);
  for (std::size_t s = 0; s < space.size(); ++s) {
    const auto m = space.state(s);
    for (std::size_t i = 0; i < space.k(); ++i)
      out[i][static_cast<std::size_t>(m[i])] += dist.p[s];
  }
  return out;
}

struct CoupledSample {
  double t = 0.0;
  double pF = 0.0;
  std::vector<std::vector<double>> marginals;  // [station][stock]
};

struct CoupledTrajectory {
  CoupledDistribution final;
  std::vector<CoupledSample> samples;
  double max_mass_drift = 0.0;  // over every piece boundary and jump
};

struct CoupledOptions {
  std::size_t size_cap = kDefaultCoupledStateCap;
};

inline CoupledTrajectory coupled_trajectory(const DemandModel& model, const RebalancingPlan& plan,
                                            const SystemDesign& design, double T,
                                            std::span<const double> sample_times = {},
                                            CoupledOptions options = {}) {
  const std::size_t k = model.k();
  design.validate(k);
  plan.check_against(model);
  if (T < 0.0 || T > model.horizon()) throw InputError("T outside the model horizon");
  if (!std::is_sorted(sample_times.begin(), sample_times.end()) ||
      (!sample_times.empty() && (sample_times.front() < 0.0 || sample_times.back() > T)))
    throw InputError("sample times must be sorted within [0, T]");

  const CoupledStateSpace space(design.c, design.total_fleet(), options.size_cap);

  // Breakpoints first, then relocations ordered by (time, origin, destination).
  struct Jump {
    double time;
    std::size_t o, d;
  };
  std::vector<double> breakpoints;
  std::vector<Jump> jumps;
  for (std::size_t o = 0; o < k; ++o)
    for (std::size_t d = 0; d < k; ++d) {
      for (double b : model.lambda(o, d).breakpoints())
        if (b > 0.0 && b <= T) breakpoints.push_back(b);
      for (double t : plan.departures(o, d))
        if (t <= T) jumps.push_back({t, o, d});
    }
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
  std::stable_sort(jumps.begin(), jumps.end(), [](const Jump& a, const Jump& b) {
    return std::tie(a.time, a.o, a.d) < std::tie(b.time, b.o, b.d);
  });

  CoupledTrajectory out;
  auto dist = coupled_point_mass(space, design.v);
  auto note_drift = [&] {
    out.max_mass_drift = std::max(out.max_mass_drift, std::abs(dist.total_mass() - 1.0));
  };
  auto advance_to = [&](double t) {
    if (t > dist.t) dist = coupled_step_smooth(std::move(dist), space, model, t);
    note_drift();
  };
  std::size_t next_sample = 0;
  auto flush_samples_before = [&](double t) {
    while (next_sample < sample_times.size() && sample_times[next_sample] < t) {
      advance_to(sample_times[next_sample]);
      out.samples.push_back({dist.t, dist.pF, coupled_marginals(dist, space)});
      ++next_sample;
    }
  };

  std::size_t bi = 0, ji = 0;
  while (bi < breakpoints.size() || ji < jumps.size()) {
    const bool take_breakpoint =
        ji == jumps.size() || (bi < breakpoints.size() && breakpoints[bi] <= jumps[ji].time);
    const double t = take_breakpoint ? breakpoints[bi] : jumps[ji].time;
    flush_samples_before(t);
    advance_to(t);
    if (take_breakpoint) {
      ++bi;
    } else {
      const auto& j = jumps[ji++];
      dist = coupled_apply_rebalance(std::move(dist), space, StationId{j.o}, StationId{j.d});
      note_drift();
    }
  }
  flush_samples_before(std::nextafter(T, T + 1.0));
  advance_to(T);
  detail::check_coupled_mass(dist);
  out.final = std::move(dist);
  return out;
}

/// Exact pF(T) of the coupled model.
inline double coupled_failure_probability(const DemandModel& model, const RebalancingPlan& plan,
                                          const SystemDesign& design, double T,
                                          CoupledOptions options = {}) {
  return coupled_trajectory(model, plan, design, T, {}, options).final.pF;
}

}  // namespace fleetsize
