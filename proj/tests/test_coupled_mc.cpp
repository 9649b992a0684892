#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fleetsize/coupled_exact.hpp"
#include "fleetsize/coupled_mc.hpp"
#include "oracles.hpp"

using namespace fleetsize;

namespace {

DemandModel one_way(double rate) {
  DemandModel m(2, 24.0);
  m.set_lambda(0, 1, PiecewiseConstantIntensity::constant(rate, 24.0));
  return m;
}

DemandModel random_model(std::mt19937_64& rng, std::size_t k, double horizon, double max_rate) {
  DemandModel m(k, horizon);
  for (std::size_t o = 0; o < k; ++o)
    for (std::size_t d = 0; d < k; ++d)
      if (o != d) m.set_lambda(o, d, oracle::random_intensity(rng, horizon, max_rate, 4));
  return m;
}

}  // namespace

TEST(SimulateRun, ZeroDemandNeverFails) {
  const DemandModel model(3, 24.0);
  const SystemDesign design{{1, 2, 3}, {3, 3, 3}};
  const std::vector<double> samples{0.0, 12.0, 24.0};
  const auto run = simulate_run(model, RebalancingPlan(3), design, 24.0, 5, false, samples);
  EXPECT_FALSE(run.failed_at.has_value());
  ASSERT_EQ(run.snapshots.size(), 3u);
  for (const auto& s : run.snapshots) EXPECT_EQ(s, design.v);
}

TEST(SimulateRun, TwoStateChainFailsAtSecondRequest) {
  const auto model = one_way(1.0);
  const SystemDesign design{{1, 0}, {1, 1}};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    SplitMix64 rng(seed, 0 * 2 + 1);
    const auto requests = sample_poisson_process(model.lambda(0, 1), 3.0, rng);
    const auto run = simulate_run(model, RebalancingPlan(2), design, 3.0, seed, false);
    if (requests.size() >= 2) {
      ASSERT_TRUE(run.failed_at.has_value());
      EXPECT_EQ(*run.failed_at, requests[1]);
      EXPECT_EQ(run.failure, FailureKind::availability);
    } else {
      EXPECT_FALSE(run.failed_at.has_value());
    }
  }
}

TEST(SimulateRun, DeterministicForIdenticalSeed) {
  std::mt19937_64 rng(3);
  const auto model = random_model(rng, 4, 24.0, 1.5);
  const SystemDesign design{{2, 3, 1, 4}, {5, 5, 5, 5}};
  RebalancingPlan plan(4);
  plan.set_departures(1, 2, {4.0, 9.0});
  std::vector<double> samples;
  for (int s = 0; s <= 24; ++s) samples.push_back(s);
  for (bool delay : {false, true}) {
    const auto a = simulate_run(model, plan, design, 24.0, 77, delay, samples);
    const auto b = simulate_run(model, plan, design, 24.0, 77, delay, samples);
    EXPECT_EQ(a.failed_at, b.failed_at);
    EXPECT_EQ(a.snapshots, b.snapshots);
  }
  const auto c1 = estimate_failure_curve(model, plan, design, 24.0, 500, samples, false, 9);
  const auto c2 = estimate_failure_curve(model, plan, design, 24.0, 500, samples, false, 9);
  for (std::size_t i = 0; i < c1.size(); ++i) EXPECT_EQ(c1[i].estimate.mean, c2[i].estimate.mean);
}

TEST(SimulateRun, ZeroDelayConservesVehicles) {
  std::mt19937_64 rng(8);
  const auto model = random_model(rng, 5, 24.0, 0.6);
  const SystemDesign design{{4, 4, 4, 4, 4}, {9, 9, 9, 9, 9}};
  std::vector<double> samples;
  for (int s = 0; s <= 96; ++s) samples.push_back(0.25 * s);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto run = simulate_run(model, RebalancingPlan(5), design, 24.0, seed, false, samples);
    for (const auto& snap : run.snapshots) {
      long total = 0;
      for (std::size_t i = 0; i < snap.size(); ++i) {
        EXPECT_GE(snap[i], 0);
        EXPECT_LE(snap[i], design.c[i]);
        total += snap[i];
      }
      EXPECT_EQ(total, design.total_fleet());
    }
    if (run.failed_at) {
      EXPECT_LE(*run.failed_at, 24.0);
    }
  }
}

TEST(FailureCurve, AgreesWithExactTwoStateChain) {
  const auto model = one_way(1.0);
  const SystemDesign design{{1, 0}, {1, 1}};
  const std::vector<double> samples{1.0};
  const auto curve = estimate_failure_curve(model, RebalancingPlan(2), design, 1.0, 100000, samples, false, 1);
  const double exact = coupled_failure_probability(model, RebalancingPlan(2), design, 1.0);
  EXPECT_NEAR(curve[0].estimate.mean, exact, 3.0 * curve[0].estimate.std_error);
  EXPECT_EQ(curve[0].estimate.n, 100000u);
}

TEST(FailureCurve, AgreesWithExactOnRandomInstances) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const auto model = random_model(rng, 3, 10.0, 0.6);
    const SystemDesign design{{1, 2, 1}, {3, 3, 2}};
    RebalancingPlan plan(3);
    plan.set_departures(2, 0, {2.5, 7.0});
    const double exact = coupled_failure_probability(model, plan, design, 10.0);
    const std::vector<double> samples{10.0};
    const auto curve = estimate_failure_curve(model, plan, design, 10.0, 40000, samples, false,
                                              1000u * static_cast<unsigned>(trial));
    // Four standard errors keeps the family-wise false alarm rate small.
    EXPECT_NEAR(curve[0].estimate.mean, exact, 4.0 * curve[0].estimate.std_error + 1e-12);
  }
}

TEST(FailureCurve, SingleRunIsStepFunction) {
  const auto model = one_way(5.0);
  const SystemDesign design{{1, 0}, {1, 1}};
  const auto run = simulate_run(model, RebalancingPlan(2), design, 24.0, 0, false);
  ASSERT_TRUE(run.failed_at.has_value());
  const double f = *run.failed_at;
  const std::vector<double> samples{0.0, std::nextafter(f, 0.0), f, 24.0};
  const auto curve = estimate_failure_curve(model, RebalancingPlan(2), design, 24.0, 1, samples, false, 0);
  EXPECT_EQ(curve[0].estimate.mean, 0.0);
  EXPECT_EQ(curve[1].estimate.mean, 0.0);
  EXPECT_EQ(curve[2].estimate.mean, 1.0);
  EXPECT_EQ(curve[3].estimate.mean, 1.0);
  EXPECT_THROW(estimate_failure_curve(model, RebalancingPlan(2), design, 24.0, 0, samples, false, 0),
               InputError);
}

TEST(FailureCurve, StandardErrorHalvesWhenRunsQuadruple) {
  // Doubling n shrinks stderr by sqrt(2); four times n halves it.
  const auto model = one_way(1.0);
  const SystemDesign design{{1, 0}, {1, 1}};
  const std::vector<double> samples{1.0};
  const auto a = estimate_failure_curve(model, RebalancingPlan(2), design, 1.0, 10000, samples, false, 0);
  const auto b = estimate_failure_curve(model, RebalancingPlan(2), design, 1.0, 20000, samples, false, 0);
  const auto c = estimate_failure_curve(model, RebalancingPlan(2), design, 1.0, 40000, samples, false, 0);
  EXPECT_NEAR(a[0].estimate.std_error / b[0].estimate.std_error, std::sqrt(2.0), 0.1 * std::sqrt(2.0));
  EXPECT_NEAR(a[0].estimate.std_error / c[0].estimate.std_error, 2.0, 0.2);
}

TEST(FailureCurve, NonDecreasingInTime) {
  std::mt19937_64 rng(4);
  const auto model = random_model(rng, 4, 24.0, 1.0);
  const SystemDesign design{{2, 2, 2, 2}, {4, 4, 4, 4}};
  std::vector<double> samples;
  for (int s = 0; s < 200; ++s) samples.push_back(24.0 * s / 199.0);
  for (bool delay : {false, true}) {
    const auto curve = estimate_failure_curve(model, RebalancingPlan(4), design, 24.0, 2000, samples, delay, 3);
    for (std::size_t i = 1; i < curve.size(); ++i)
      EXPECT_GE(curve[i].estimate.mean, curve[i - 1].estimate.mean);
  }
}

TEST(Thinning, InterEventTimesPassKolmogorovSmirnov) {
  const double lambda = 2.5;
  // A piecewise representation of a constant rate exercises the envelope path.
  // Long horizons keep the censoring of the last gap negligible.
  const PiecewiseConstantIntensity rate({0.0, 300.0, 700.0}, {lambda, lambda, lambda}, 1000.0);
  std::vector<double> gaps;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    SplitMix64 rng(seed, 3);
    const auto times = sample_poisson_process(rate, 1000.0, rng);
    double previous = 0.0;
    for (double t : times) {
      gaps.push_back(t - previous);
      previous = t;
    }
  }
  std::sort(gaps.begin(), gaps.end());
  const double n = static_cast<double>(gaps.size());
  double d = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const double cdf = 1.0 - std::exp(-lambda * gaps[i]);
    d = std::max({d, cdf - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - cdf});
  }
  EXPECT_LT(d, 1.628 / std::sqrt(n)) << "n=" << n;
}

TEST(Thinning, PiecewiseCountsMatchIntegral) {
  const PiecewiseConstantIntensity rate({0.0, 2.0, 5.0}, {0.5, 4.0, 1.0}, 8.0);
  double count = 0, in_peak = 0;
  const int runs = 20000;
  for (int r = 0; r < runs; ++r) {
    SplitMix64 rng(static_cast<std::uint64_t>(r), 1);
    for (double t : sample_poisson_process(rate, 8.0, rng)) {
      ++count;
      if (t >= 2.0 && t < 5.0) ++in_peak;
    }
  }
  const double mean = rate.integral();  // variance equals the mean
  EXPECT_NEAR(count / runs, mean, 4.0 * std::sqrt(mean / runs));
  EXPECT_NEAR(in_peak / runs, 12.0, 4.0 * std::sqrt(12.0 / runs));
}

TEST(Marginals, ZeroDemandIsPointMass) {
  const DemandModel model(2, 24.0);
  const SystemDesign design{{1, 2}, {3, 3}};
  const std::vector<std::size_t> stations{0, 1};
  const std::vector<double> samples{5.0};
  const auto m = estimate_marginals(model, RebalancingPlan(2), design, 24.0, 50, stations, samples, false, 0);
  EXPECT_EQ(m[0][0][1].mean, 1.0);
  EXPECT_EQ(m[1][0][2].mean, 1.0);
}

TEST(Marginals, AgreeWithExactAndPartitionSurvivors) {
  DemandModel model(2, 24.0);
  model.set_lambda(0, 1, PiecewiseConstantIntensity::constant(0.8, 24.0));
  model.set_lambda(1, 0, PiecewiseConstantIntensity::constant(0.5, 24.0));
  const SystemDesign design{{2, 1}, {3, 3}};
  const std::vector<double> samples{1.0, 2.0};
  const std::vector<std::size_t> stations{0, 1};
  const std::size_t runs = 50000;
  const auto mc = estimate_marginals(model, RebalancingPlan(2), design, 2.0, runs, stations, samples, false, 4);
  const auto exact = coupled_trajectory(model, RebalancingPlan(2), design, 2.0, samples);
  const auto curve = estimate_failure_curve(model, RebalancingPlan(2), design, 2.0, runs, samples, false, 4);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t n = 0; n < samples.size(); ++n) {
      double survivors = 0.0;
      for (std::size_t j = 0; j < mc[i][n].size(); ++j) {
        const auto& e = mc[i][n][j];
        EXPECT_NEAR(e.mean, exact.samples[n].marginals[i][j], 4.0 * e.std_error + 1e-12);
        survivors += e.mean;
      }
      EXPECT_NEAR(survivors, 1.0 - curve[n].estimate.mean, 1e-12);
    }
}
