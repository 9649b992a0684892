#pragma once

// Station sizing against a system failure budget z. The budget is split
// across stations (uniformly by default). Each station then gets the
// smallest stock whose unbounded-capacity failure mass fits half its share,
// followed by the smallest capacity that keeps its total failure mass within
// the full share. Both searches are bisections over monotone functions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "fleetsize/decoupled.hpp"
#include "fleetsize/errors.hpp"
#include "fleetsize/model.hpp"
#include "fleetsize/parallel.hpp"

namespace fleetsize {

inline constexpr long kSizingHardCap = 1'000'000;
// Unbounded-capacity truncation error allowed, relative to the budget in play.
inline constexpr double kTailBudgetFraction = 1e-3;

enum class SizingMethod { coordinate, joint };

struct SizingOptions {
  SizingMethod method = SizingMethod::coordinate;
  long hard_cap = kSizingHardCap;
};

struct SizingRequest {
  double z = 0.01;
  double T = kDefaultHorizonHours;
  std::vector<double> partition;  // per-station budgets; empty means z / k each

  std::vector<double> budgets(std::size_t k) const {
    if (!(z > 0.0 && z < 1.0)) throw InputError("failure budget z must lie in (0, 1)");
    if (partition.empty()) return std::vector<double>(k, z / static_cast<double>(k));
    if (partition.size() != k) throw InputError("budget partition does not match station count");
    for (double zi : partition)
      if (!(zi > 0.0)) throw InputError("every station budget must be positive");
    const double total = std::accumulate(partition.begin(), partition.end(), 0.0);
    if (std::abs(total - z) > 1e-12) throw InputError("station budgets must sum to z");
    return partition;
  }
};

struct StationSizing {
  long v = 0;
  long c = 0;
  double qf = 0.0;  // qF(T; v, c)
};

struct SizingResult {
  double z = 0.0;
  std::vector<StationSizing> stations;
  double bound = 0.0;

  SystemDesign design() const {
    SystemDesign d;
    for (const auto& s : stations) {
      d.v.push_back(s.v);
      d.c.push_back(s.c);
    }
    return d;
  }
};

namespace detail {

/// Smallest x in [lo, cap] with f(x) <= budget for a non-increasing f.
/// The upper bracket grows as lo + first_step * 2^n.
inline long bisect_min_feasible(const std::function<double(long)>& f, long lo, long first_step,
                                double budget, long cap, const std::string& what) {
  const double f_lo = f(lo);
  if (f_lo <= budget) return lo;
  long step = std::max(1L, first_step);
  long hi = lo + step;
  double f_hi = f(hi);
  long infeasible = lo;
  double f_infeasible = f_lo;
  while (f_hi > budget) {
    if (f_hi > f_infeasible + 1e-12)
      throw InvariantError(what + ": failure probability increased from " + std::to_string(infeasible) +
                           " to " + std::to_string(hi));
    if (hi >= cap)
      throw InfeasibleError(what + ": budget " + std::to_string(budget) + " unreachable below " +
                            std::to_string(cap));
    infeasible = hi;
    f_infeasible = f_hi;
    step *= 2;
    hi = std::min(cap, lo + step);
    f_hi = f(hi);
  }
  // f(infeasible) > budget >= f(hi)
  while (hi - infeasible > 1) {
    const long mid = infeasible + (hi - infeasible) / 2;
    const double f_mid = f(mid);
    if (f_mid > f_infeasible + 1e-12 || f_mid < f_hi - 1e-12)
      throw InvariantError(what + ": failure probability is not monotone around " +
                           std::to_string(mid));
    if (f_mid <= budget) {
      hi = mid;
      f_hi = f_mid;
    } else {
      infeasible = mid;
      f_infeasible = f_mid;
    }
  }
  return hi;
}

}  // namespace detail

/// Minimal v with qF(T; v, unbounded) <= budget_half.
inline long size_station_stock(const StationFlowProfile& profile, double T, double budget_half,
                               long cap = kSizingHardCap) {
  if (!(budget_half > 0.0)) throw InputError("stock budget must be positive");
  const double tail_tolerance = kTailBudgetFraction * budget_half;
  const auto f = [&](long v) {
    return station_failure_probability(profile, v, Capacity::unbounded(), T, tail_tolerance);
  };
  const auto first = static_cast<long>(std::ceil(profile.lambda_d.integral(0.0, T)));
  return detail::bisect_min_feasible(f, 0, first, budget_half, cap, "stock search");
}

/// Minimal c >= v with qF(T; v, c) <= budget.
inline long size_station_capacity(const StationFlowProfile& profile, double T, long v,
                                  double budget, long cap = kSizingHardCap) {
  if (!(budget > 0.0)) throw InputError("capacity budget must be positive");
  if (v < 0) throw InputError("stock must be >= 0");
  const auto f = [&](long c) {
    return station_failure_probability(profile, v, Capacity::bounded(c), T);
  };
  const auto first = static_cast<long>(std::ceil(profile.lambda_a.integral(0.0, T)));
  return detail::bisect_min_feasible(f, v, first, budget, cap, "capacity search");
}

/// Exhaustive per-station search for the smallest v + c; ties go to the smaller v.
inline StationSizing size_station_joint(const StationFlowProfile& profile, double T,
                                        double budget, long cap = kSizingHardCap) {
  const long v_min = size_station_stock(profile, T, budget, cap);
  std::optional<StationSizing> best;
  for (long v = v_min; !best || 2 * v < best->v + best->c; ++v) {
    try {
      const long c = size_station_capacity(profile, T, v, budget, cap);
      if (!best || v + c < best->v + best->c) best = StationSizing{v, c, 0.0};
    } catch (const InfeasibleError&) {
    }
    if (v >= cap) break;
  }
  if (!best) throw InfeasibleError("joint search found no feasible stock and capacity");
  best->qf = station_failure_probability(profile, best->v, Capacity::bounded(best->c), T);
  return *best;
}

inline StationSizing size_station(const StationFlowProfile& profile, double T, double budget,
                                  const SizingOptions& options = {}) {
  if (options.method == SizingMethod::joint)
    return size_station_joint(profile, T, budget, options.hard_cap);
  StationSizing s;
  s.v = size_station_stock(profile, T, budget / 2.0, options.hard_cap);
  s.c = size_station_capacity(profile, T, s.v, budget, options.hard_cap);
  s.qf = station_failure_probability(profile, s.v, Capacity::bounded(s.c), T);
  return s;
}

inline SizingResult size_system(const DemandModel& model, const RebalancingPlan& plan,
                                const SizingRequest& request, bool with_delay,
                                const SizingOptions& options = {}) {
  if (request.T < 0.0 || request.T > model.horizon()) throw InputError("T outside the model horizon");
  const auto budgets = request.budgets(model.k());
  const auto profiles = all_station_profiles(model, plan, with_delay);

  SizingResult result;
  result.z = request.z;
  result.stations.resize(model.k());
  parallel_for(model.k(), [&](std::size_t i) {
    try {
      result.stations[i] = size_station(profiles[i], request.T, budgets[i], options);
    } catch (const InfeasibleError& e) {
      throw InfeasibleError("station " + std::to_string(i + 1) + ": " + e.what());
    } catch (const InvariantError& e) {
      throw InvariantError("station " + std::to_string(i + 1) + ": " + e.what());
    }
  });
  for (std::size_t i = 0; i < model.k(); ++i) {
    if (result.stations[i].qf > budgets[i])
      throw InfeasibleError("station " + std::to_string(i + 1) + " exceeds its failure budget");
    result.bound += result.stations[i].qf;
  }
  if (result.bound > request.z * (1.0 + 1e-12))
    throw InvariantError("summed station failure mass exceeds z");
  return result;
}

}  // namespace fleetsize
