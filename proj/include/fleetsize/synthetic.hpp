#pragma once

// Synthetic commuter city: residential and business stations with skewed
// popularity, a morning flow toward business stations and an evening flow
// back. Used for demos and for tests that need realistic imbalance without a
// trip-record dataset.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "fleetsize/coupled_mc.hpp"
#include "fleetsize/ingest.hpp"
#include "fleetsize/model.hpp"
#include "fleetsize/random.hpp"

namespace fleetsize {

struct SyntheticCityOptions {
  std::size_t stations = 40;
  double daily_trips = 1500.0;     // expected working-day volume
  double residential_share = 0.6;
  double popularity_sigma = 0.9;   // log-normal spread of station popularity
  double area_km = 6.0;
  double speed_kmh = 12.0;
  double weekend_factor = 0.5;
  std::uint64_t seed = 1;
};

struct SyntheticCity {
  DemandModel model;  // hourly working-day intensities with true travel times
  std::vector<long> station_ids;
  std::vector<bool> residential;
};

namespace detail {

inline double standard_normal(SplitMix64& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double bump(double hour, double centre, double width) {
  const double x = (hour + 0.5 - centre) / width;
  return std::exp(-0.5 * x * x);
}

// Relative hourly shape of trips from a station of one type to another.
inline double commute_shape(bool from_residential, bool to_residential, int hour) {
  const double morning = bump(hour, 8.0, 1.2);
  const double evening = bump(hour, 17.5, 1.5);
  const double midday = hour >= 10 && hour < 20 ? 0.25 : (hour >= 6 && hour < 23 ? 0.08 : 0.01);
  if (from_residential && !to_residential) return 1.6 * morning + 0.15 * evening + midday;
  if (!from_residential && to_residential) return 0.15 * morning + 1.6 * evening + midday;
  return 0.2 * (morning + evening) + midday;
}

}  // namespace detail

inline SyntheticCity synthetic_city(const SyntheticCityOptions& options) {
  const std::size_t k = options.stations;
  if (k < 2) throw InputError("a synthetic city needs at least two stations");
  SplitMix64 rng(options.seed, 0xC1A7);
  SyntheticCity city;
  city.model = DemandModel(k, kDefaultHorizonHours);
  std::vector<double> weight(k), x(k), y(k);
  for (std::size_t i = 0; i < k; ++i) {
    city.station_ids.push_back(static_cast<long>(100 + 3 * i));
    city.residential.push_back(static_cast<double>(i) < options.residential_share * static_cast<double>(k));
    weight[i] = std::exp(options.popularity_sigma * detail::standard_normal(rng));
    x[i] = options.area_km * rng.uniform();
    y[i] = options.area_km * rng.uniform();
  }

  double total_shape = 0.0;
  for (std::size_t o = 0; o < k; ++o)
    for (std::size_t d = 0; d < k; ++d)
      if (o != d)
        for (int h = 0; h < 24; ++h)
          total_shape += weight[o] * weight[d] *
                         detail::commute_shape(city.residential[o], city.residential[d], h);
  const double scale = options.daily_trips / total_shape;

  std::vector<double> breakpoints(24);
  for (int h = 0; h < 24; ++h) breakpoints[static_cast<std::size_t>(h)] = h;
  for (std::size_t o = 0; o < k; ++o)
    for (std::size_t d = 0; d < k; ++d) {
      if (o == d) continue;
      std::vector<double> values(24);
      for (int h = 0; h < 24; ++h)
        values[static_cast<std::size_t>(h)] =
            scale * weight[o] * weight[d] *
            detail::commute_shape(city.residential[o], city.residential[d], h);
      city.model.set_lambda(o, d, PiecewiseConstantIntensity(breakpoints, values, kDefaultHorizonHours));
      const double km = 1.3 * std::hypot(x[o] - x[d], y[o] - y[d]);
      city.model.set_eta(o, d, 0.05 + km / options.speed_kmh);
    }
  return city;
}

/// Trip records for every day of `month`; weekends run at a reduced volume.
/// Durations scatter log-normally (about 15%) around the model travel time.
inline std::vector<TripRecord> synthetic_trips(const SyntheticCity& city,
                                               std::chrono::year_month month,
                                               const SyntheticCityOptions& options) {
  using namespace std::chrono;
  std::vector<TripRecord> trips;
  const std::size_t k = city.model.k();
  const sys_days first{month / 1};
  const sys_days last{month / std::chrono::last};
  for (sys_days day = first; day <= last; day += days{1}) {
    const weekday wd{day};
    const bool weekend = wd == Saturday || wd == Sunday;
    const auto day_seed = static_cast<std::uint64_t>(day.time_since_epoch().count());
    for (std::size_t o = 0; o < k; ++o)
      for (std::size_t d = 0; d < k; ++d) {
        if (o == d) continue;
        SplitMix64 rng(options.seed ^ mix64(day_seed), o * k + d);
        auto rate = city.model.lambda(o, d);
        if (weekend) {
          auto values = rate.values();
          for (double& v : values) v *= options.weekend_factor;
          rate = PiecewiseConstantIntensity(rate.breakpoints(), values, rate.horizon());
        }
        for (double t : sample_poisson_process(rate, kDefaultHorizonHours, rng)) {
          const double hours_travel = city.model.eta(o, d) * std::exp(0.15 * detail::standard_normal(rng));
          const auto start = day + seconds{static_cast<long>(std::floor(t * 3600.0))};
          const auto end = start + seconds{static_cast<long>(std::round(hours_travel * 3600.0))};
          trips.push_back({start, end, city.station_ids[o], city.station_ids[d]});
        }
      }
  }
  std::stable_sort(trips.begin(), trips.end(), [](const TripRecord& a, const TripRecord& b) {
    return a.start_time < b.start_time;
  });
  return trips;
}

}  // namespace fleetsize
