#pragma once

// A-priori rebalancing: per time bin, ship the expected surplus of each
// station to stations with an expected shortage at minimum total travel
// time, then turn the fractional per-bin rates into departure instants.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "fleetsize/errors.hpp"
#include "fleetsize/model.hpp"

namespace fleetsize {

inline constexpr double kFlowEpsilon = 1e-12;

/// Successive-shortest-path min-cost flow with real capacities and
/// non-negative costs. Sized for transportation problems over a few hundred
/// stations, so Dijkstra runs on a dense O(V^2) scan.
class MinCostFlow {
 public:
  explicit MinCostFlow(std::size_t nodes) : adjacency_(nodes) {}

  std::size_t add_edge(std::size_t from, std::size_t to, double capacity, double cost) {
    if (cost < 0.0) throw InputError("edge costs must be non-negative");
    adjacency_[from].push_back(edges_.size());
    edges_.push_back({to, capacity, cost, 0.0});
    adjacency_[to].push_back(edges_.size());
    edges_.push_back({from, 0.0, -cost, 0.0});
    return edges_.size() - 2;
  }

  double flow_on(std::size_t edge) const { return edges_[edge].flow; }

  /// Pushes up to `amount` from source to sink; returns the flow achieved.
  double solve(std::size_t source, std::size_t sink, double amount) {
    const std::size_t n = adjacency_.size();
    std::vector<double> potential(n, 0.0);
    double pushed = 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    while (amount - pushed > kFlowEpsilon) {
      std::vector<double> dist(n, inf);
      std::vector<std::size_t> via(n, npos);
      std::vector<bool> done(n, false);
      dist[source] = 0.0;
      for (;;) {
        std::size_t u = npos;
        for (std::size_t x = 0; x < n; ++x)
          if (!done[x] && dist[x] < inf && (u == npos || dist[x] < dist[u])) u = x;
        if (u == npos) break;
        done[u] = true;
        for (std::size_t e : adjacency_[u]) {
          const auto& edge = edges_[e];
          if (residual(e) <= kFlowEpsilon) continue;
          const double reduced = edge.cost + potential[u] - potential[edge.to];
          const double candidate = dist[u] + std::max(reduced, 0.0);
          if (candidate < dist[edge.to]) {
            dist[edge.to] = candidate;
            via[edge.to] = e;
          }
        }
      }
      if (dist[sink] == inf) break;
      for (std::size_t x = 0; x < n; ++x)
        if (dist[x] < inf) potential[x] += dist[x];

      double bottleneck = amount - pushed;
      for (std::size_t x = sink; x != source; x = edges_[via[x] ^ 1].to)
        bottleneck = std::min(bottleneck, residual(via[x]));
      for (std::size_t x = sink; x != source; x = edges_[via[x] ^ 1].to) {
        edges_[via[x]].flow += bottleneck;
        edges_[via[x] ^ 1].flow -= bottleneck;
      }
      pushed += bottleneck;
    }
    return pushed;
  }

 private:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  struct Edge {
    std::size_t to;
    double capacity;
    double cost;
    double flow;
  };

  double residual(std::size_t e) const { return edges_[e].capacity - edges_[e].flow; }

  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<Edge> edges_;
};

/// Net expected accumulation per bin and station; positive means surplus.
struct ImbalanceProfile {
  std::vector<double> edges;               // bin boundaries, edges.front() == 0
  std::vector<std::vector<double>> delta;  // [bin][station]

  std::size_t bins() const { return delta.size(); }
};

inline std::vector<double> uniform_bins(double horizon, double bin_hours) {
  if (!(bin_hours > 0.0)) throw InputError("bin length must be positive");
  std::vector<double> edges{0.0};
  while (edges.back() + bin_hours < horizon - 1e-9) edges.push_back(edges.back() + bin_hours);
  edges.push_back(horizon);
  return edges;
}

inline ImbalanceProfile compute_imbalance(const DemandModel& model, std::vector<double> edges) {
  if (edges.size() < 2 || edges.front() != 0.0 || edges.back() != model.horizon() ||
      !std::is_sorted(edges.begin(), edges.end()))
    throw InputError("bins must partition [0, T]");
  const std::size_t k = model.k();
  ImbalanceProfile out;
  out.delta.assign(edges.size() - 1, std::vector<double>(k, 0.0));
  for (std::size_t b = 0; b + 1 < edges.size(); ++b)
    for (std::size_t o = 0; o < k; ++o)
      for (std::size_t d = 0; d < k; ++d) {
        if (o == d) continue;
        const double expected = model.lambda(o, d).integral(edges[b], edges[b + 1]);
        out.delta[b][o] -= expected;
        out.delta[b][d] += expected;
      }
  out.edges = std::move(edges);
  return out;
}

/// Relocation counts per bin, vehicles per bin for each ordered pair.
struct RebalancingRates {
  std::size_t k = 0;
  double horizon = kDefaultHorizonHours;
  std::vector<double> edges;
  std::vector<std::vector<double>> rates;  // [bin][o * k + d]

  double rate(std::size_t bin, std::size_t o, std::size_t d) const { return rates[bin][o * k + d]; }
};

enum class ResidualPolicy { project, reject };

inline std::vector<double> travel_time_matrix(const DemandModel& model) {
  std::vector<double> eta(model.k() * model.k());
  for (std::size_t o = 0; o < model.k(); ++o)
    for (std::size_t d = 0; d < model.k(); ++d) eta[o * model.k() + d] = model.eta(o, d);
  return eta;
}

/// Min-cost transportation from surplus to deficit stations in every bin,
/// with cost sum(r_od * eta_od). A non-zero bin total is either projected out
/// (subtracting the mean from every station) or rejected.
inline RebalancingRates balance_flows(const ImbalanceProfile& imbalance,
                                      const std::vector<double>& eta,
                                      ResidualPolicy policy = ResidualPolicy::project) {
  const std::size_t k = imbalance.delta.empty() ? 0 : imbalance.delta.front().size();
  if (eta.size() != k * k) throw InputError("travel-time matrix does not match station count");
  RebalancingRates out;
  out.k = k;
  out.edges = imbalance.edges;
  out.horizon = imbalance.edges.back();
  out.rates.assign(imbalance.bins(), std::vector<double>(k * k, 0.0));

  for (std::size_t b = 0; b < imbalance.bins(); ++b) {
    std::vector<double> delta = imbalance.delta[b];
    const double total = std::accumulate(delta.begin(), delta.end(), 0.0);
    if (std::abs(total) > 1e-9) {
      if (policy == ResidualPolicy::reject)
        throw InfeasibleError("bin " + std::to_string(b) + " imbalance does not sum to zero");
    }
    const double mean = total / static_cast<double>(k);
    for (double& x : delta) x -= mean;

    std::vector<std::size_t> sources, sinks;
    double supply = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (delta[i] > kFlowEpsilon) {
        sources.push_back(i);
        supply += delta[i];
      } else if (delta[i] < -kFlowEpsilon) {
        sinks.push_back(i);
      }
    }
    if (sources.empty() || sinks.empty()) continue;

    // Nodes: 0 source, 1..S surplus stations, S+1..S+D deficit stations, S+D+1 sink.
    const std::size_t S = sources.size(), D = sinks.size();
    const std::size_t source = 0, sink = S + D + 1;
    MinCostFlow network(S + D + 2);
    for (std::size_t a = 0; a < S; ++a) network.add_edge(source, 1 + a, delta[sources[a]], 0.0);
    for (std::size_t c = 0; c < D; ++c) network.add_edge(1 + S + c, sink, -delta[sinks[c]], 0.0);
    std::vector<std::size_t> transport(S * D);
    for (std::size_t a = 0; a < S; ++a)
      for (std::size_t c = 0; c < D; ++c)
        transport[a * D + c] = network.add_edge(1 + a, 1 + S + c, supply,
                                                eta[sources[a] * k + sinks[c]]);
    network.solve(source, sink, supply);
    for (std::size_t a = 0; a < S; ++a)
      for (std::size_t c = 0; c < D; ++c) {
        const double f = network.flow_on(transport[a * D + c]);
        if (f > kFlowEpsilon) out.rates[b][sources[a] * k + sinks[c]] = f;
      }
  }
  return out;
}

/// Rounds half up with a small allowance for accumulated summation error.
inline long round_count(double x) { return static_cast<long>(std::floor(x + 0.5 + 1e-9)); }

/// Departure instants per pair: n relocations in a bin of length L sit at
/// bin_start + (j - 1/2) L / n. Fractions carry over between bins so the
/// count emitted through bin b equals round(cumulative rate through b).
inline RebalancingPlan discretize_plan(const RebalancingRates& rates) {
  RebalancingPlan plan(rates.k);
  for (std::size_t o = 0; o < rates.k; ++o)
    for (std::size_t d = 0; d < rates.k; ++d) {
      if (o == d) continue;
      std::vector<double> times;
      double cumulative = 0.0;
      long emitted = 0;
      for (std::size_t b = 0; b < rates.rates.size(); ++b) {
        const double r = rates.rate(b, o, d);
        if (r < 0.0) throw InputError("negative rebalancing rate");
        cumulative += r;
        const long n = round_count(cumulative) - emitted;
        if (n <= 0) continue;
        emitted += n;
        const double start = rates.edges[b];
        const double length = rates.edges[b + 1] - start;
        for (long j = 1; j <= n; ++j)
          times.push_back(start + (static_cast<double>(j) - 0.5) * length / static_cast<double>(n));
      }
      plan.set_departures(o, d, std::move(times));
    }
  return plan;
}

/// The full pipeline: imbalance, transportation per bin, discretization.
inline RebalancingPlan plan_rebalancing(const DemandModel& model, double bin_hours = 1.0) {
  const auto imbalance = compute_imbalance(model, uniform_bins(model.horizon(), bin_hours));
  return discretize_plan(balance_flows(imbalance, travel_time_matrix(model)));
}

}  // namespace fleetsize
