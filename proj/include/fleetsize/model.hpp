#pragma once

// Domain types shared by every evaluator: demand intensities, rebalancing
// plans, system designs and the per-station flow aggregation.
//
// Time is measured in hours. Stations are stored 0-based; every file and
// every user-facing label is 1-based.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "fleetsize/errors.hpp"

namespace fleetsize {

inline constexpr double kDefaultHorizonHours = 24.0;

struct StationId {
  std::size_t index = 0;  // 0-based

  static StationId from_label(long label, std::size_t k) {
    if (label < 1 || static_cast<std::size_t>(label) > k)
      throw InputError("station label " + std::to_string(label) + " outside 1.." +
                       std::to_string(k));
    return StationId{static_cast<std::size_t>(label - 1)};
  }
  long label() const { return static_cast<long>(index) + 1; }

  friend bool operator==(StationId, StationId) = default;
  friend auto operator<=>(StationId, StationId) = default;
};

/// Rate function that is constant on right-open intervals [b_j, b_{j+1}).
/// The first breakpoint is always 0 and the last interval ends at the horizon.
class PiecewiseConstantIntensity {
 public:
  PiecewiseConstantIntensity() : breakpoints_{0.0}, values_{0.0}, horizon_{kDefaultHorizonHours} {}

  PiecewiseConstantIntensity(std::vector<double> breakpoints, std::vector<double> values,
                             double horizon)
      : breakpoints_(std::move(breakpoints)), values_(std::move(values)), horizon_(horizon) {
    validate();
  }

  static PiecewiseConstantIntensity constant(double rate, double horizon) {
    return PiecewiseConstantIntensity({0.0}, {rate}, horizon);
  }
  static PiecewiseConstantIntensity zero(double horizon) { return constant(0.0, horizon); }

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }
  double horizon() const { return horizon_; }
  std::size_t pieces() const { return values_.size(); }

  double operator()(double t) const {
    if (!(t >= 0.0) || t > horizon_)
      throw InputError("intensity evaluated outside [0, " + std::to_string(horizon_) + "]");
    return values_[piece_index(t)];
  }

  /// Index of the interval containing t (t == horizon maps to the last interval).
  std::size_t piece_index(double t) const {
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    return static_cast<std::size_t>(std::distance(breakpoints_.begin(), it)) - 1;
  }

  double piece_end(std::size_t j) const {
    return j + 1 < breakpoints_.size() ? breakpoints_[j + 1] : horizon_;
  }

  double integral(double a, double b) const {
    a = std::max(a, 0.0);
    b = std::min(b, horizon_);
    if (b <= a) return 0.0;
    double total = 0.0;
    for (std::size_t j = piece_index(a); j < values_.size(); ++j) {
      const double lo = std::max(a, breakpoints_[j]);
      const double hi = std::min(b, piece_end(j));
      if (hi > lo) total += values_[j] * (hi - lo);
      if (piece_end(j) >= b) break;
    }
    return total;
  }

  double integral() const { return integral(0.0, horizon_); }

  double max_value() const { return *std::max_element(values_.begin(), values_.end()); }

  bool is_zero() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
  }

  /// t -> rate(t - delay), zero before the delay elapses, truncated at the horizon.
  PiecewiseConstantIntensity shifted(double delay) const {
    if (!(delay >= 0.0) || !std::isfinite(delay)) throw InputError("delay must be finite and >= 0");
    if (delay == 0.0) return *this;
    if (delay >= horizon_) return zero(horizon_);
    std::vector<double> bp{0.0};
    std::vector<double> vals{0.0};
    for (std::size_t j = 0; j < values_.size(); ++j) {
      const double start = breakpoints_[j] + delay;
      if (start >= horizon_) break;
      bp.push_back(start);
      vals.push_back(values_[j]);
    }
    return PiecewiseConstantIntensity(std::move(bp), std::move(vals), horizon_).compacted();
  }

  /// Drops breakpoints that separate equal values.
  PiecewiseConstantIntensity compacted() const {
    std::vector<double> bp{breakpoints_.front()};
    std::vector<double> vals{values_.front()};
    for (std::size_t j = 1; j < values_.size(); ++j) {
      if (values_[j] == vals.back()) continue;
      bp.push_back(breakpoints_[j]);
      vals.push_back(values_[j]);
    }
    PiecewiseConstantIntensity out;
    out.breakpoints_ = std::move(bp);
    out.values_ = std::move(vals);
    out.horizon_ = horizon_;
    return out;
  }

  friend PiecewiseConstantIntensity operator+(const PiecewiseConstantIntensity& a,
                                              const PiecewiseConstantIntensity& b) {
    if (a.horizon_ != b.horizon_) throw InputError("intensities have inconsistent horizons");
    std::vector<double> bp;
    std::set_union(a.breakpoints_.begin(), a.breakpoints_.end(), b.breakpoints_.begin(),
                   b.breakpoints_.end(), std::back_inserter(bp));
    std::vector<double> vals(bp.size());
    for (std::size_t j = 0; j < bp.size(); ++j)
      vals[j] = a.values_[a.piece_index(bp[j])] + b.values_[b.piece_index(bp[j])];
    PiecewiseConstantIntensity out;
    out.breakpoints_ = std::move(bp);
    out.values_ = std::move(vals);
    out.horizon_ = a.horizon_;
    return out.compacted();
  }

  friend bool operator==(const PiecewiseConstantIntensity&,
                         const PiecewiseConstantIntensity&) = default;

 private:
  void validate() const {
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) throw InputError("horizon must be positive");
    if (breakpoints_.empty() || breakpoints_.size() != values_.size())
      throw InputError("intensity needs one value per breakpoint");
    if (breakpoints_.front() != 0.0) throw InputError("first breakpoint must be 0");
    for (std::size_t j = 1; j < breakpoints_.size(); ++j)
      if (!(breakpoints_[j] > breakpoints_[j - 1]))
        throw InputError("breakpoints must be strictly increasing");
    if (!(breakpoints_.back() < horizon_)) throw InputError("breakpoints must lie before the horizon");
    for (double v : values_)
      if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("rates must be finite and >= 0");
  }

  std::vector<double> breakpoints_;
  std::vector<double> values_;
  double horizon_;
};

/// Origin-destination demand intensities and travel times for k stations.
class DemandModel {
 public:
  DemandModel() = default;

  DemandModel(std::size_t k, double horizon)
      : k_(k),
        horizon_(horizon),
        lambda_(k * k, PiecewiseConstantIntensity::zero(horizon)),
        eta_(k * k, 0.0) {
    if (k == 0) throw InputError("model needs at least one station");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InputError("horizon must be positive");
  }

  std::size_t k() const { return k_; }
  double horizon() const { return horizon_; }

  const PiecewiseConstantIntensity& lambda(std::size_t o, std::size_t d) const {
    return lambda_[o * k_ + d];
  }
  double eta(std::size_t o, std::size_t d) const { return eta_[o * k_ + d]; }

  void set_lambda(std::size_t o, std::size_t d, PiecewiseConstantIntensity rate) {
    check_pair(o, d);
    if (rate.horizon() != horizon_) throw InputError("intensity horizon differs from model horizon");
    if (o == d && !rate.is_zero()) throw InputError("diagonal intensity must be zero");
    lambda_[o * k_ + d] = std::move(rate);
  }

  void set_eta(std::size_t o, std::size_t d, double hours) {
    check_pair(o, d);
    if (!(hours >= 0.0) || !std::isfinite(hours)) throw InputError("travel time must be finite and >= 0");
    if (o == d && hours != 0.0) throw InputError("diagonal travel time must be zero");
    eta_[o * k_ + d] = hours;
  }

  friend bool operator==(const DemandModel&, const DemandModel&) = default;

 private:
  void check_pair(std::size_t o, std::size_t d) const {
    if (o >= k_ || d >= k_) throw InputError("station index out of range");
  }

  std::size_t k_ = 0;
  double horizon_ = kDefaultHorizonHours;
  std::vector<PiecewiseConstantIntensity> lambda_;
  std::vector<double> eta_;
};

/// Deterministic relocation departures per origin-destination pair.
class RebalancingPlan {
 public:
  RebalancingPlan() = default;
  explicit RebalancingPlan(std::size_t k) : k_(k), rho_(k * k) {}

  std::size_t k() const { return k_; }
  const std::vector<double>& departures(std::size_t o, std::size_t d) const {
    return rho_[o * k_ + d];
  }

  void set_departures(std::size_t o, std::size_t d, std::vector<double> times) {
    if (o >= k_ || d >= k_) throw InputError("station index out of range");
    if (o == d && !times.empty()) throw InputError("a station cannot rebalance to itself");
    if (!std::is_sorted(times.begin(), times.end()))
      throw InputError("rebalancing instants must be sorted ascending");
    for (double t : times)
      if (!(t >= 0.0) || !std::isfinite(t)) throw InputError("rebalancing instants must be >= 0");
    rho_[o * k_ + d] = std::move(times);
  }

  bool empty() const {
    return std::all_of(rho_.begin(), rho_.end(), [](const auto& r) { return r.empty(); });
  }

  std::size_t total_relocations() const {
    std::size_t n = 0;
    for (const auto& r : rho_) n += r.size();
    return n;
  }

  void check_against(const DemandModel& model) const {
    if (k_ != model.k()) throw InputError("plan and model disagree on station count");
    for (const auto& r : rho_)
      if (!r.empty() && r.back() > model.horizon())
        throw InputError("rebalancing instant beyond the horizon");
  }

  friend bool operator==(const RebalancingPlan&, const RebalancingPlan&) = default;

 private:
  std::size_t k_ = 0;
  std::vector<std::vector<double>> rho_;
};

struct SystemDesign {
  std::vector<long> v;  // initial stock
  std::vector<long> c;  // capacity

  std::size_t k() const { return v.size(); }

  void validate(std::size_t k) const {
    if (v.size() != k || c.size() != k)
      throw InputError("design covers " + std::to_string(v.size()) + " stations, expected " +
                       std::to_string(k));
    for (std::size_t i = 0; i < k; ++i) {
      if (v[i] < 0 || c[i] < 0) throw InputError("stock and capacity must be >= 0");
      if (v[i] > c[i])
        throw InputError("station " + std::to_string(i + 1) + " starts above its capacity");
    }
  }

  long total_fleet() const { return std::accumulate(v.begin(), v.end(), 0L); }
  long total_capacity() const { return std::accumulate(c.begin(), c.end(), 0L); }

  friend bool operator==(const SystemDesign&, const SystemDesign&) = default;
};

/// A rebalancing jump seen from one station; `peer` is the other end of the relocation.
struct JumpInstant {
  double time = 0.0;
  std::size_t peer = 0;

  friend bool operator==(const JumpInstant&, const JumpInstant&) = default;
  friend auto operator<=>(const JumpInstant& a, const JumpInstant& b) {
    return std::tie(a.time, a.peer) <=> std::tie(b.time, b.peer);
  }
};

struct StationFlowProfile {
  PiecewiseConstantIntensity lambda_a;  // total arrival rate
  PiecewiseConstantIntensity lambda_d;  // total departure rate
  std::vector<JumpInstant> rho_a;       // rebalancing arrivals
  std::vector<JumpInstant> rho_d;       // rebalancing departures

  double horizon() const { return lambda_d.horizon(); }
};

inline StationFlowProfile aggregate_station_flows(const DemandModel& model,
                                                  const RebalancingPlan& plan, StationId station,
                                                  bool with_delay) {
  const std::size_t k = model.k();
  if (station.index >= k) throw InputError("invalid station");
  plan.check_against(model);
  const std::size_t i = station.index;
  const double horizon = model.horizon();

  StationFlowProfile profile;
  profile.lambda_a = PiecewiseConstantIntensity::zero(horizon);
  profile.lambda_d = PiecewiseConstantIntensity::zero(horizon);
  for (std::size_t other = 0; other < k; ++other) {
    if (other == i) continue;
    profile.lambda_d = profile.lambda_d + model.lambda(i, other);
    const auto& inbound = model.lambda(other, i);
    if (!inbound.is_zero())
      profile.lambda_a =
          profile.lambda_a + (with_delay ? inbound.shifted(model.eta(other, i)) : inbound);

    for (double t : plan.departures(i, other)) profile.rho_d.push_back({t, other});
    const double shift = with_delay ? model.eta(other, i) : 0.0;
    for (double t : plan.departures(other, i))
      if (t + shift <= horizon) profile.rho_a.push_back({t + shift, other});
  }
  std::sort(profile.rho_a.begin(), profile.rho_a.end());
  std::sort(profile.rho_d.begin(), profile.rho_d.end());
  return profile;
}

// Simultaneous events: breakpoints, then arrival jumps, then departure jumps.
enum class EventKind : std::uint8_t { breakpoint = 0, arrival = 1, departure = 2 };

struct TimelineEvent {
  double time = 0.0;
  EventKind kind = EventKind::breakpoint;
  std::size_t peer = 0;

  friend bool operator==(const TimelineEvent&, const TimelineEvent&) = default;
};

inline bool timeline_before(const TimelineEvent& a, const TimelineEvent& b) {
  return std::tie(a.time, a.kind, a.peer) < std::tie(b.time, b.kind, b.peer);
}

/// Interior intensity breakpoints and all jump instants in processing order.
/// The breakpoint at t = 0 is not an event.
inline std::vector<TimelineEvent> merged_event_timeline(const StationFlowProfile& profile) {
  std::vector<TimelineEvent> events;
  std::vector<double> bps;
  std::set_union(profile.lambda_a.breakpoints().begin(), profile.lambda_a.breakpoints().end(),
                 profile.lambda_d.breakpoints().begin(), profile.lambda_d.breakpoints().end(),
                 std::back_inserter(bps));
  for (double t : bps)
    if (t > 0.0) events.push_back({t, EventKind::breakpoint, 0});
  for (const auto& j : profile.rho_a) events.push_back({j.time, EventKind::arrival, j.peer});
  for (const auto& j : profile.rho_d) events.push_back({j.time, EventKind::departure, j.peer});
  std::stable_sort(events.begin(), events.end(), timeline_before);
  return events;
}

}  // namespace fleetsize
