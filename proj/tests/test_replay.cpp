#include <gtest/gtest.h>

#include <random>

#include "fleetsize/replay.hpp"
#include "oracles.hpp"

using namespace fleetsize;

namespace {

DaySequence day_of(std::vector<RentalEvent> events) { return {"2016-05-02", std::move(events)}; }

// Random day with departures all before the end of the horizon.
DaySequence random_day(std::mt19937_64& rng, std::size_t k, std::size_t n) {
  std::uniform_real_distribution<double> time(0.0, 24.0), travel(0.05, 1.5);
  std::uniform_int_distribution<std::size_t> station(0, k - 1);
  DaySequence day{"d", {}};
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t o = station(rng), d = station(rng);
    if (o == d) d = (d + 1) % k;
    day.events.push_back({time(rng), o, d, travel(rng)});
  }
  std::stable_sort(day.events.begin(), day.events.end(),
                   [](const auto& a, const auto& b) { return a.time < b.time; });
  return day;
}

}  // namespace

TEST(ReplayDay, EmptyDayKeepsInitialStocks) {
  const SystemDesign design{{2, 3}, {4, 4}};
  const auto out = replay_day(day_of({}), RebalancingPlan(2), design, {});
  EXPECT_FALSE(out.day_failed);
  EXPECT_EQ(out.final_stocks, design.v);
}

TEST(ReplayDay, RentalFromEmptyStationFails) {
  const SystemDesign design{{0, 1}, {2, 2}};
  const auto out = replay_day(day_of({{1.0, 0, 1, 0.2}}), RebalancingPlan(2), design, {});
  EXPECT_TRUE(out.day_failed);
  EXPECT_EQ(out.availability_failures, 1u);
  EXPECT_EQ(out.final_stocks, (std::vector<long>{0, 1}));  // the trip was skipped
}

TEST(ReplayDay, RentalIntoFullStationFails) {
  const SystemDesign design{{1, 2}, {2, 2}};
  const auto docked = replay_day(day_of({{1.0, 0, 1, 0.2}}), RebalancingPlan(2), design, {});
  EXPECT_TRUE(docked.day_failed);
  EXPECT_EQ(docked.capacity_failures, 1u);
  EXPECT_EQ(docked.final_stocks, (std::vector<long>{0, 3}));

  ReplayOptions discard;
  discard.overflow = OverflowPolicy::discard;
  const auto dropped = replay_day(day_of({{1.0, 0, 1, 0.2}}), RebalancingPlan(2), design, {}, discard);
  EXPECT_EQ(dropped.final_stocks, (std::vector<long>{0, 2}));
}

TEST(ReplayDay, ContinuesAfterFailureAndCountsEach) {
  const SystemDesign design{{0, 1}, {1, 1}};
  const auto out = replay_day(day_of({{1.0, 0, 1, 0.1}, {2.0, 1, 0, 0.1}, {3.0, 0, 1, 0.1},
                                      {4.0, 0, 1, 0.1}}),
                              RebalancingPlan(2), design, {});
  // 1.0 fails (empty), 2.0 moves the vehicle, 3.0 moves it back, 4.0 fails again.
  EXPECT_EQ(out.availability_failures, 2u);
  EXPECT_EQ(out.capacity_failures, 0u);
  EXPECT_EQ(out.final_stocks, (std::vector<long>{0, 1}));
}

TEST(ReplayDay, RelocationsUseTravelTimesAndCountFailures) {
  const SystemDesign design{{1, 0}, {1, 1}};
  RebalancingPlan plan(2);
  plan.set_departures(0, 1, {5.0, 6.0});
  const std::vector<double> eta{0.0, 0.5, 0.5, 0.0};
  const auto out = replay_day(day_of({}), plan, design, eta);
  EXPECT_EQ(out.availability_failures, 1u);  // second relocation finds station 1 empty
  EXPECT_EQ(out.final_stocks, (std::vector<long>{0, 1}));
  EXPECT_THROW(replay_day(day_of({}), plan, design, {}), InputError);
}

TEST(ReplayDay, VehicleConservationAndOverflowAccounting) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 5;
    const SystemDesign design{{2, 1, 3, 0, 2}, {3, 2, 4, 2, 3}};
    const auto day = random_day(rng, k, 40);
    const auto out = replay_day(day, RebalancingPlan(k), design, {});
    long total = out.in_transit;
    long above = 0;
    for (std::size_t i = 0; i < k; ++i) {
      EXPECT_GE(out.final_stocks[i], 0);
      total += out.final_stocks[i];
      above += std::max(0L, out.final_stocks[i] - design.c[i]);
    }
    EXPECT_EQ(total, design.total_fleet());
    EXPECT_LE(above, static_cast<long>(out.capacity_failures));
    EXPECT_EQ(out.day_failed, out.availability_failures + out.capacity_failures > 0);
  }
}

TEST(ReplayDays, FailureRateAndDeterminism) {
  std::mt19937_64 rng(2);
  std::vector<DaySequence> days;
  for (int i = 0; i < 22; ++i) days.push_back(random_day(rng, 4, 30));
  const SystemDesign design{{3, 3, 3, 3}, {6, 6, 6, 6}};
  const auto a = replay_days(days, RebalancingPlan(4), design, {});
  const auto b = replay_days(days, RebalancingPlan(4), design, {});
  ASSERT_EQ(a.size(), 22u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].final_stocks, b[i].final_stocks);
    EXPECT_EQ(a[i].availability_failures, b[i].availability_failures);
  }
  std::vector<ReplayOutcome> outcomes(22);
  EXPECT_EQ(failure_rate(outcomes), 0.0);
  for (int i = 0; i < 11; ++i) outcomes[static_cast<std::size_t>(i)].day_failed = true;
  EXPECT_EQ(failure_rate(outcomes), 0.5);
  for (auto& o : outcomes) o.day_failed = true;
  EXPECT_EQ(failure_rate(outcomes), 1.0);
  EXPECT_THROW(failure_rate({}), InputError);
}

TEST(Baseline, Examples) {
  const auto ten = baseline_design(3, 10);
  EXPECT_EQ(ten.v, (std::vector<long>{5, 5, 5}));
  EXPECT_EQ(ten.c, (std::vector<long>{10, 10, 10}));
  const auto zero = baseline_design(2, 0);
  EXPECT_EQ(zero.v, (std::vector<long>{0, 0}));
  EXPECT_EQ(baseline_design(4, 7).v.front(), 3);
  EXPECT_THROW(baseline_design(2, -1), InputError);
}

TEST(Sweep, BaselineFailureRateFallsWithCapacity) {
  std::mt19937_64 rng(10);
  std::vector<DaySequence> days;
  for (int i = 0; i < 22; ++i) days.push_back(random_day(rng, 6, 60));
  std::vector<std::pair<std::string, SystemDesign>> designs;
  for (long C = 2; C <= 30; C += 2) designs.push_back({"baseline-" + std::to_string(C), baseline_design(6, C)});
  const auto rows = sweep(designs, days, RebalancingPlan(6), {});
  ASSERT_EQ(rows.size(), designs.size());
  std::vector<double> capacity, rate;
  for (const auto& r : rows) {
    capacity.push_back(static_cast<double>(r.total_capacity));
    rate.push_back(r.failure_rate);
  }
  EXPECT_EQ(rows.front().total_fleet, 6);
  EXPECT_EQ(rows.front().total_capacity, 12);
  EXPECT_LE(oracle::spearman(capacity, rate), 0.0);
}
