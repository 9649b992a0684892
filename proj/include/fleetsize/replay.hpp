#pragma once

// Deterministic replay of recorded (or synthetic) days against a design.
// Unlike the coupled simulation, a day keeps running after a failure: every
// failure is counted and the day is flagged.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "fleetsize/errors.hpp"
#include "fleetsize/ingest.hpp"
#include "fleetsize/model.hpp"
#include "fleetsize/parallel.hpp"

namespace fleetsize {

enum class OverflowPolicy {
  dock,     // the vehicle docks above capacity
  discard,  // the vehicle leaves the system
};

struct ReplayOptions {
  OverflowPolicy overflow = OverflowPolicy::dock;
  double horizon = kDefaultHorizonHours;
};

struct ReplayOutcome {
  std::string day;
  std::size_t availability_failures = 0;
  std::size_t capacity_failures = 0;
  bool day_failed = false;
  std::vector<long> final_stocks;
  long in_transit = 0;  // vehicles still travelling at the end of the day
};

/// Replays one day. Relocations take travel times from `eta` (k * k, row-major).
inline ReplayOutcome replay_day(const DaySequence& seq, const RebalancingPlan& plan,
                                const SystemDesign& design, const std::vector<double>& eta,
                                const ReplayOptions& options = {}) {
  const std::size_t k = design.k();
  design.validate(k);
  if (plan.k() != k && !(plan.k() == 0 && plan.empty()))
    throw InputError("plan and design disagree on station count");
  if (!plan.empty() && eta.size() != k * k) throw InputError("travel times needed for the plan");

  struct Departure {
    double time;
    std::size_t o, d;
    bool rebalance;
    double travel;
    std::size_t order;
  };
  std::vector<Departure> departures;
  for (std::size_t n = 0; n < seq.events.size(); ++n) {
    const auto& e = seq.events[n];
    if (e.o >= k || e.d >= k) throw InputError("day sequence references an unknown station");
    if (e.time <= options.horizon) departures.push_back({e.time, e.o, e.d, false, e.eta, n});
  }
  if (!plan.empty())
    for (std::size_t o = 0; o < k; ++o)
      for (std::size_t d = 0; d < k; ++d)
        for (double t : plan.departures(o, d))
          if (t <= options.horizon) departures.push_back({t, o, d, true, eta[o * k + d], 0});
  std::stable_sort(departures.begin(), departures.end(),
                   [](const Departure& a, const Departure& b) {
                     return std::tie(a.time, a.o, a.d, b.rebalance, a.order) <
                            std::tie(b.time, b.o, b.d, a.rebalance, b.order);
                   });

  struct Arrival {
    double time;
    std::size_t o, d;
    std::uint64_t seq;
    bool operator>(const Arrival& b) const {
      return std::tie(time, d, o, seq) > std::tie(b.time, b.d, b.o, b.seq);
    }
  };
  std::priority_queue<Arrival, std::vector<Arrival>, std::greater<>> in_transit;
  std::uint64_t next_seq = 0;

  ReplayOutcome out;
  out.day = seq.date;
  std::vector<long> stock = design.v;
  auto arrive_until = [&](double t) {
    while (!in_transit.empty() && in_transit.top().time <= t) {
      const auto a = in_transit.top();
      in_transit.pop();
      if (stock[a.d] >= design.c[a.d]) {
        ++out.capacity_failures;
        if (options.overflow == OverflowPolicy::discard) continue;
      }
      ++stock[a.d];
    }
  };
  for (const auto& e : departures) {
    arrive_until(e.time);
    if (stock[e.o] == 0) {
      ++out.availability_failures;
      continue;
    }
    --stock[e.o];
    in_transit.push({e.time + e.travel, e.o, e.d, next_seq++});
  }
  arrive_until(options.horizon);

  out.in_transit = static_cast<long>(in_transit.size());
  out.final_stocks = std::move(stock);
  out.day_failed = out.availability_failures + out.capacity_failures > 0;
  return out;
}

inline std::vector<ReplayOutcome> replay_days(const std::vector<DaySequence>& days,
                                              const RebalancingPlan& plan,
                                              const SystemDesign& design,
                                              const std::vector<double>& eta,
                                              const ReplayOptions& options = {}) {
  std::vector<ReplayOutcome> out(days.size());
  parallel_for(days.size(), [&](std::size_t i) { out[i] = replay_day(days[i], plan, design, eta, options); });
  return out;
}

inline double failure_rate(const std::vector<ReplayOutcome>& outcomes) {
  if (outcomes.empty()) throw InputError("no replay outcomes");
  const auto failed = std::count_if(outcomes.begin(), outcomes.end(),
                                    [](const ReplayOutcome& o) { return o.day_failed; });
  return static_cast<double>(failed) / static_cast<double>(outcomes.size());
}

/// Equal capacity everywhere, half of it (rounded down) filled.
inline SystemDesign baseline_design(std::size_t station_count, long capacity) {
  if (capacity < 0) throw InputError("capacity must be >= 0");
  return SystemDesign{std::vector<long>(station_count, capacity / 2),
                      std::vector<long>(station_count, capacity)};
}

struct SweepRow {
  std::string label;
  long total_fleet = 0;
  long total_capacity = 0;
  double failure_rate = 0.0;
};

inline std::vector<SweepRow> sweep(const std::vector<std::pair<std::string, SystemDesign>>& designs,
                                   const std::vector<DaySequence>& days,
                                   const RebalancingPlan& plan, const std::vector<double>& eta,
                                   const ReplayOptions& options = {}) {
  std::vector<SweepRow> rows;
  rows.reserve(designs.size());
  for (const auto& [label, design] : designs)
    rows.push_back({label, design.total_fleet(), design.total_capacity(),
                    failure_rate(replay_days(days, plan, design, eta, options))});
  return rows;
}

}  // namespace fleetsize
