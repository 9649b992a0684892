#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fleetsize/rebalance.hpp"
#include "oracles.hpp"

using namespace fleetsize;

namespace {

ImbalanceProfile single_bin(std::vector<double> delta) {
  return ImbalanceProfile{{0.0, 1.0}, {std::move(delta)}};
}

RebalancingRates single_pair_rates(std::vector<double> per_bin, std::vector<double> edges) {
  RebalancingRates r;
  r.k = 2;
  r.edges = std::move(edges);
  r.horizon = r.edges.back();
  for (double x : per_bin) r.rates.push_back({0.0, x, 0.0, 0.0});
  return r;
}

}  // namespace

TEST(Imbalance, Examples) {
  DemandModel model(2, 1.0);
  model.set_lambda(0, 1, PiecewiseConstantIntensity::constant(2.0, 1.0));
  model.set_lambda(1, 0, PiecewiseConstantIntensity::constant(1.0, 1.0));
  const auto imb = compute_imbalance(model, {0.0, 1.0});
  EXPECT_EQ(imb.delta[0], (std::vector<double>{-1.0, 1.0}));

  DemandModel symmetric(2, 24.0);
  symmetric.set_lambda(0, 1, PiecewiseConstantIntensity::constant(1.5, 24.0));
  symmetric.set_lambda(1, 0, PiecewiseConstantIntensity::constant(1.5, 24.0));
  for (const auto& bin : compute_imbalance(symmetric, uniform_bins(24.0, 1.0)).delta)
    for (double x : bin) EXPECT_EQ(x, 0.0);

  DemandModel cycle(3, 24.0);
  for (std::size_t i = 0; i < 3; ++i)
    cycle.set_lambda(i, (i + 1) % 3, PiecewiseConstantIntensity::constant(0.7, 24.0));
  for (const auto& bin : compute_imbalance(cycle, uniform_bins(24.0, 2.0)).delta)
    for (double x : bin) EXPECT_NEAR(x, 0.0, 1e-15);

  EXPECT_THROW(compute_imbalance(cycle, {0.0, 12.0}), InputError);
  EXPECT_EQ(uniform_bins(24.0, 5.0), (std::vector<double>{0, 5, 10, 15, 20, 24}));
}

TEST(BalanceFlows, Examples) {
  const auto two = balance_flows(single_bin({-1.0, 1.0}), {0, 1, 1, 0});
  EXPECT_EQ(two.rate(0, 1, 0), 1.0);
  EXPECT_EQ(two.rate(0, 0, 1), 0.0);

  const auto none = balance_flows(single_bin({0.0, 0.0, 0.0}), std::vector<double>(9, 1.0));
  for (double x : none.rates[0]) EXPECT_EQ(x, 0.0);

  std::vector<double> eta(9, 0.5);
  const auto three = balance_flows(single_bin({-2.0, 1.0, 1.0}), eta);
  EXPECT_EQ(three.rate(0, 1, 0), 1.0);
  EXPECT_EQ(three.rate(0, 2, 0), 1.0);
  double shipped = 0.0;
  for (double x : three.rates[0]) shipped += x;
  EXPECT_EQ(shipped, 2.0);
}

TEST(BalanceFlows, ResidualProjectedOrRejected) {
  const std::vector<double> eta{0, 1, 1, 0};
  const auto projected = balance_flows(single_bin({-1.0, 2.0}), eta);
  EXPECT_NEAR(projected.rate(0, 1, 0), 1.5, 1e-12);
  EXPECT_THROW(balance_flows(single_bin({-1.0, 2.0}), eta, ResidualPolicy::reject), InfeasibleError);
  EXPECT_THROW(balance_flows(single_bin({-1.0, 1.0}), {0, 1, 1}), InputError);
}

TEST(BalanceFlows, MatchesBruteForceOnSmallIntegralInstances) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<long> amount(-3, 3);
  std::uniform_real_distribution<double> travel(0.1, 2.0);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + trial % 3;
    std::vector<long> surplus(k);
    long sum = 0;
    for (std::size_t i = 0; i + 1 < k; ++i) sum += surplus[i] = amount(rng);
    surplus[k - 1] = -sum;
    if (std::abs(surplus[k - 1]) > 4) continue;
    std::vector<double> eta(k * k, 0.0);
    for (std::size_t o = 0; o < k; ++o)
      for (std::size_t d = 0; d < k; ++d)
        if (o != d) eta[o * k + d] = travel(rng);
    const double best = oracle::brute_force_transport(surplus, eta);

    const auto rates = balance_flows(single_bin(std::vector<double>(surplus.begin(), surplus.end())), eta,
                                     ResidualPolicy::reject);
    double cost = 0.0;
    std::vector<double> net(k, 0.0);
    for (std::size_t o = 0; o < k; ++o)
      for (std::size_t d = 0; d < k; ++d) {
        const double r = rates.rate(0, o, d);
        EXPECT_GE(r, 0.0);
        cost += r * eta[o * k + d];
        net[o] += r;
        net[d] -= r;
      }
    for (std::size_t i = 0; i < k; ++i) EXPECT_NEAR(net[i], static_cast<double>(surplus[i]), 1e-9);
    EXPECT_NEAR(cost, best, 1e-9);
    ++compared;
  }
  EXPECT_GT(compared, 100);
}

TEST(Discretize, MidpointSpacing) {
  const auto plan = discretize_plan(single_pair_rates({0.0, 3.0}, {0.0, 8.0, 9.0}));
  const auto& t = plan.departures(0, 1);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_NEAR(t[0], 8.1667, 1e-4);
  EXPECT_NEAR(t[1], 8.5, 1e-12);
  EXPECT_NEAR(t[2], 8.8333, 1e-4);
  EXPECT_TRUE(plan.departures(1, 0).empty());

  const auto zero = discretize_plan(single_pair_rates({0.0}, {0.0, 1.0}));
  EXPECT_TRUE(zero.empty());
}

TEST(Discretize, ResidualCarriesAcrossBins) {
  const auto plan = discretize_plan(single_pair_rates({0.4, 0.4, 0.4}, {0.0, 1.0, 2.0, 3.0}));
  const auto& t = plan.departures(0, 1);
  ASSERT_EQ(t.size(), 1u);  // cumulative 0.8 reaches one half in the second bin
  EXPECT_DOUBLE_EQ(t[0], 1.5);
}

TEST(Discretize, CountsMatchRoundedTotalsAndStayInsideBins) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> rate(0.0, 2.5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> per_bin(24);
    for (double& x : per_bin) x = rate(rng);
    const auto rates = single_pair_rates(per_bin, uniform_bins(24.0, 1.0));
    const auto plan = discretize_plan(rates);
    const auto& t = plan.departures(0, 1);
    double total = 0.0;
    for (double x : per_bin) total += x;
    EXPECT_EQ(static_cast<long>(t.size()), round_count(total));
    for (std::size_t i = 1; i < t.size(); ++i) EXPECT_LT(t[i - 1], t[i]);
    // Count emitted through each bin tracks the rounded cumulative rate.
    double cumulative = 0.0;
    for (std::size_t b = 0; b < 24; ++b) {
      cumulative += per_bin[b];
      const auto through = std::upper_bound(t.begin(), t.end(), static_cast<double>(b + 1)) - t.begin();
      EXPECT_EQ(through, round_count(cumulative));
    }
  }
}

TEST(Plan, BalancesEachBinWithinOneVehicle) {
  // Integral per-bin imbalances so that each pair emits whole vehicles.
  DemandModel model(4, 24.0);
  model.set_lambda(0, 1, PiecewiseConstantIntensity({0.0, 7.0, 10.0}, {1.0, 4.0, 1.0}, 24.0));
  model.set_lambda(2, 3, PiecewiseConstantIntensity({0.0, 16.0, 19.0}, {2.0, 5.0, 2.0}, 24.0));
  model.set_lambda(3, 0, PiecewiseConstantIntensity::constant(1.0, 24.0));
  for (std::size_t o = 0; o < 4; ++o)
    for (std::size_t d = 0; d < 4; ++d)
      if (o != d) model.set_eta(o, d, 0.1 * static_cast<double>(1 + (o + d) % 3));
  const auto plan = plan_rebalancing(model, 1.0);
  EXPECT_FALSE(plan.empty());
  const auto imbalance = compute_imbalance(model, uniform_bins(24.0, 1.0));
  for (std::size_t b = 0; b < 24; ++b) {
    std::vector<double> net = imbalance.delta[b];
    for (std::size_t o = 0; o < 4; ++o)
      for (std::size_t d = 0; d < 4; ++d)
        for (double t : plan.departures(o, d))
          if (t >= static_cast<double>(b) && t < static_cast<double>(b + 1)) {
            net[o] -= 1.0;
            net[d] += 1.0;
          }
    for (double x : net) EXPECT_LE(std::abs(x), 1.0 + 1e-9) << "bin " << b;
  }
}

TEST(MinCostFlow, PrefersCheaperPath) {
  MinCostFlow f(4);
  const auto cheap = f.add_edge(0, 1, 2.0, 1.0);
  const auto costly = f.add_edge(0, 2, 5.0, 3.0);
  f.add_edge(1, 3, 2.0, 0.0);
  f.add_edge(2, 3, 5.0, 0.0);
  EXPECT_DOUBLE_EQ(f.solve(0, 3, 3.0), 3.0);
  EXPECT_DOUBLE_EQ(f.flow_on(cheap), 2.0);
  EXPECT_DOUBLE_EQ(f.flow_on(costly), 1.0);
  MinCostFlow limited(2);
  limited.add_edge(0, 1, 1.5, 1.0);
  EXPECT_DOUBLE_EQ(limited.solve(0, 1, 4.0), 1.5);
  EXPECT_THROW(limited.add_edge(0, 1, 1.0, -1.0), InputError);
}
