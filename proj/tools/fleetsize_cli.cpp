// fleetsize: command-line pipeline for vehicle-sharing fleet sizing.
//
//   synth     generate a synthetic month of trip records (demo data)
//   ingest    trip CSV -> demand model JSON + day-sequence JSON
//   plan      demand model -> rebalancing plan JSON
//   size      demand model (+ plan) -> per-station stock and capacity
//   bound     decoupled failure bound of a design (diagnostic, never fails on z)
//   simulate  exact (--exact) or Monte Carlo (--mc) coupled failure curve
//   replay    replay recorded days against a design
//   sweep     baseline and proposed design families -> failure-rate table
//
// Exit codes: 0 ok, 1 input error, 2 infeasible, 3 invariant violation.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fleetsize/fleetsize.hpp"

namespace fs = fleetsize;

namespace {

enum ExitCode { kOk = 0, kInputError = 1, kInfeasible = 2, kInvariant = 3 };

void emit(const std::optional<std::string>& path, const std::string& text) {
  if (path && !path->empty() && *path != "-")
    fs::write_text_file(*path, text);
  else
    std::cout << text;
}

fs::DemandModel load_model(const std::string& path) { return fs::model_from_json(fs::read_json_file(path)); }

fs::RebalancingPlan load_plan(const std::optional<std::string>& path, const fs::DemandModel& model) {
  if (!path) return fs::RebalancingPlan(model.k());
  auto plan = fs::plan_from_json(fs::read_json_file(*path));
  plan.check_against(model);
  return plan;
}

fs::SystemDesign load_design(const std::string& path, std::size_t k) {
  auto design = fs::design_from_json(fs::read_json_file(path));
  if (design.k() != k) throw fs::InputError("design has " + std::to_string(design.k()) +
                                            " stations, model has " + std::to_string(k));
  return design;
}

/// n uniform sample times over [0, T], endpoints included.
std::vector<double> uniform_samples(double T, std::size_t n) {
  if (n == 0) throw fs::InputError("need at least one sample time");
  if (n == 1) return {T};
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = T * static_cast<double>(i) / static_cast<double>(n - 1);
  t.back() = T;
  return t;
}

fs::json days_document(const std::vector<fs::DaySequence>& days, const fs::StationSet& stations) {
  return {{"k", stations.size()}, {"station_ids", stations.ids()}, {"days", fs::days_to_json(days)}};
}

std::vector<fs::DaySequence> load_days(const std::string& path, std::size_t k) {
  const auto doc = fs::read_json_file(path);
  if (!doc.contains("days")) throw fs::InputError(path + ": missing 'days'");
  if (doc.contains("k") && doc.at("k").get<std::size_t>() != k)
    throw fs::InputError(path + ": day sequences were built for a different station count");
  return fs::days_from_json(doc.at("days"), k);
}

fs::DaySelection day_selection(const std::string& days, const std::optional<std::string>& month) {
  fs::DaySelection sel;
  if (days == "working") sel.days = fs::DayFilter::working;
  else if (days == "all") sel.days = fs::DayFilter::all;
  else throw fs::InputError("--days must be 'working' or 'all'");
  if (month) {
    sel.month = fs::parse_month(*month);
    if (!sel.month) throw fs::InputError("--month must look like YYYY-MM");
  }
  return sel;
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw fs::InputError("bad number '" + item + "' in list");
    }
  }
  return out;
}

/// "lo:hi:step" inclusive integer range.
std::vector<long> parse_range(const std::string& text) {
  long lo = 0, hi = 0, step = 0;
  char extra = 0;
  if (std::sscanf(text.c_str(), "%ld:%ld:%ld%c", &lo, &hi, &step, &extra) != 3 || step <= 0 || lo < 0 ||
      hi < lo)
    throw fs::InputError("capacity grid must look like lo:hi:step");
  std::vector<long> out;
  for (long c = lo; c <= hi; c += step) out.push_back(c);
  return out;
}

std::string csv_row(std::initializer_list<std::string> fields) {
  std::string row;
  for (const auto& f : fields) {
    if (!row.empty()) row += ',';
    row += f;
  }
  return row + '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fleet sizing for station-based vehicle sharing"};
  app.require_subcommand(1);

  // Shared option storage; each subcommand binds what it needs.
  std::string model_path, design_path, trips_path, days_path;
  std::optional<std::string> plan_path, out_path, trace_path, month, days_out_path;
  double z = 0.01, T = fs::kDefaultHorizonHours, bin_hours = 1.0;
  std::size_t runs = 20000, samples = 200;
  std::uint64_t seed = 1;
  long hard_cap = fs::kSizingHardCap;
  bool with_delay = false, joint = false, exact = false, mc = false, strict = false;
  std::string days_filter = "working", overflow = "dock", rebalance = "both";
  std::string capacity_grid = "2:40:2", z_grid = "0.5,0.2,0.1,0.05,0.01";
  fs::SyntheticCityOptions synth_options;
  std::string synth_month = "2016-05";

  auto* synth = app.add_subcommand("synth", "Generate a synthetic month of trip records");
  synth->add_option("--stations", synth_options.stations, "Station count")->check(CLI::Range(2, 100000));
  synth->add_option("--daily-trips", synth_options.daily_trips, "Expected working-day trips");
  synth->add_option("--month", synth_month, "Month to generate (YYYY-MM)");
  synth->add_option("--seed", synth_options.seed, "Random seed");
  synth->add_option("--out", out_path, "Output CSV (default stdout)");
  synth->add_option("--model-out", days_out_path, "Also write the generating demand model JSON");

  auto* ingest = app.add_subcommand("ingest", "Estimate demand and extract day sequences from trips");
  ingest->add_option("--trips", trips_path, "Trip CSV")->required();
  ingest->add_option("--bin-hours", bin_hours, "Intensity bin length in hours");
  ingest->add_option("--days", days_filter, "Day filter: working or all");
  ingest->add_option("--month", month, "Restrict to one month (YYYY-MM)");
  ingest->add_option("--out", out_path, "Demand model JSON (default stdout)");
  ingest->add_option("--days-out", days_out_path, "Day-sequence JSON");
  ingest->add_flag("--strict", strict, "Fail on any malformed row");

  auto* plan = app.add_subcommand("plan", "Build a rebalancing plan from a demand model");
  plan->add_option("--model", model_path, "Demand model JSON")->required();
  plan->add_option("--bin-hours", bin_hours, "Balancing bin length in hours");
  plan->add_option("--out", out_path, "Plan JSON (default stdout)");

  auto* size = app.add_subcommand("size", "Size per-station stock and capacity");
  size->add_option("--model", model_path, "Demand model JSON")->required();
  size->add_option("--plan", plan_path, "Rebalancing plan JSON");
  size->add_option("--z", z, "System failure budget in (0, 1)");
  size->add_option("--T", T, "Horizon in hours");
  size->add_flag("--with-delay", with_delay, "Shift arrivals by travel times");
  size->add_flag("--joint", joint, "Exhaustive per-station (v, c) search");
  size->add_option("--hard-cap", hard_cap, "Largest stock or capacity tried per station")
      ->check(CLI::PositiveNumber);
  size->add_option("--out", out_path, "Sizing JSON (default stdout)");

  auto* bound = app.add_subcommand("bound", "Decoupled failure bound of a design");
  bound->add_option("--model", model_path, "Demand model JSON")->required();
  bound->add_option("--plan", plan_path, "Rebalancing plan JSON");
  bound->add_option("--design", design_path, "Design JSON")->required();
  bound->add_option("--z", z, "Budget to compare against");
  bound->add_option("--T", T, "Horizon in hours");
  bound->add_option("--samples", samples, "Trace sample count");
  bound->add_flag("--with-delay", with_delay, "Shift arrivals by travel times");
  bound->add_option("--trace", trace_path, "CSV trace t,station,qF");
  bound->add_option("--out", out_path, "Report JSON (default stdout)");

  auto* simulate = app.add_subcommand("simulate", "Coupled failure curve, exact or Monte Carlo");
  simulate->add_option("--model", model_path, "Demand model JSON")->required();
  simulate->add_option("--plan", plan_path, "Rebalancing plan JSON");
  simulate->add_option("--design", design_path, "Design JSON")->required();
  auto* exact_flag = simulate->add_flag("--exact", exact, "Exact coupled integration (small instances)");
  auto* mc_flag = simulate->add_flag("--mc", mc, "Monte Carlo");
  exact_flag->excludes(mc_flag);
  simulate->add_option("--T", T, "Horizon in hours");
  simulate->add_option("--runs", runs, "Monte Carlo runs")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", seed, "Seed of run 0");
  simulate->add_option("--samples", samples, "Uniform sample times over [0, T]");
  simulate->add_flag("--with-delay", with_delay, "Monte Carlo with travel delays");
  simulate->add_option("--out", out_path, "CSV (default stdout)");

  auto* replay = app.add_subcommand("replay", "Replay day sequences against a design");
  replay->add_option("--model", model_path, "Demand model JSON (station count, travel times)")->required();
  replay->add_option("--days-file", days_path, "Day-sequence JSON")->required();
  replay->add_option("--design", design_path, "Design JSON")->required();
  replay->add_option("--plan", plan_path, "Rebalancing plan JSON");
  replay->add_option("--overflow", overflow, "Capacity failure handling: dock or discard");
  replay->add_option("--out", out_path, "Per-day CSV (default stdout)");

  auto* sweep = app.add_subcommand("sweep", "Baseline and proposed designs against replayed days");
  sweep->add_option("--model", model_path, "Demand model JSON")->required();
  sweep->add_option("--days-file", days_path, "Day-sequence JSON")->required();
  sweep->add_option("--capacities", capacity_grid, "Baseline capacity grid lo:hi:step");
  sweep->add_option("--z-grid", z_grid, "Comma-separated budgets for proposed designs");
  sweep->add_option("--rebalance", rebalance, "on, off or both");
  sweep->add_option("--bin-hours", bin_hours, "Rebalancing bin length in hours");
  sweep->add_option("--T", T, "Sizing horizon in hours");
  sweep->add_flag("--with-delay", with_delay, "Size with delay-shifted arrivals");
  sweep->add_option("--overflow", overflow, "Capacity failure handling: dock or discard");
  sweep->add_option("--out", out_path, "CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    fs::ReplayOptions replay_options;
    if (overflow == "dock") replay_options.overflow = fs::OverflowPolicy::dock;
    else if (overflow == "discard") replay_options.overflow = fs::OverflowPolicy::discard;
    else throw fs::InputError("--overflow must be 'dock' or 'discard'");

    if (*synth) {
      const auto ym = fs::parse_month(synth_month);
      if (!ym) throw fs::InputError("--month must look like YYYY-MM");
      const auto city = fs::synthetic_city(synth_options);
      std::ostringstream csv;
      fs::write_trips_csv(csv, fs::synthetic_trips(city, *ym, synth_options));
      emit(out_path, csv.str());
      if (days_out_path)
        fs::write_text_file(*days_out_path, fs::model_to_json(city.model, city.station_ids).dump(1) + "\n");
      return kOk;
    }

    if (*ingest) {
      std::ifstream in(trips_path);
      if (!in) throw fs::InputError("cannot open " + trips_path);
      const auto report = fs::parse_trips(in);
      for (const auto& d : report.diagnostics) std::cerr << "ingest: " << d << '\n';
      std::cerr << "ingest: " << report.rows << " rows, " << report.trips.size() << " accepted, "
                << report.malformed << " malformed\n";
      if (strict && report.malformed + report.unknown_station > 0)
        throw fs::InputError("malformed rows present (--strict)");
      const auto stations = fs::StationSet::from_trips(report.trips);
      const auto selection = day_selection(days_filter, month);
      const auto est = fs::estimate_demand(report.trips, stations, bin_hours, selection);
      std::cerr << "ingest: " << est.stations.size() << " stations, " << est.days << " days, "
                << est.trips_used << " trips used, " << est.round_trips_dropped
                << " round trips dropped\n";
      emit(out_path, fs::model_to_json(est.model, stations.ids()).dump(1) + "\n");
      if (days_out_path) {
        const auto days = fs::extract_day_sequences(report.trips, stations, selection);
        fs::write_text_file(*days_out_path, days_document(days, stations).dump(1) + "\n");
      }
      return kOk;
    }

    const auto model = load_model(model_path);

    if (*plan) {
      emit(out_path, fs::plan_to_json(fs::plan_rebalancing(model, bin_hours), model.horizon()).dump(1) + "\n");
      return kOk;
    }

    if (*size) {
      fs::SizingOptions options;
      if (joint) options.method = fs::SizingMethod::joint;
      options.hard_cap = hard_cap;
      const auto result =
          fs::size_system(model, load_plan(plan_path, model), fs::SizingRequest{z, T, {}}, with_delay, options);
      emit(out_path, fs::sizing_to_json(result).dump(1) + "\n");
      return kOk;
    }

    if (*bound) {
      const auto rebal = load_plan(plan_path, model);
      const auto design = load_design(design_path, model.k());
      if (T < 0.0 || T > model.horizon()) throw fs::InputError("T outside the model horizon");
      const auto qf = fs::station_failure_probabilities(model, rebal, design, T, with_delay);
      double total = 0.0;
      fs::json stations = fs::json::array();
      for (std::size_t i = 0; i < qf.size(); ++i) {
        total += qf[i];
        stations.push_back({{"id", i + 1}, {"qf", qf[i]}});
      }
      const bool infeasible = total > z;
      emit(out_path, fs::json{{"z", z}, {"T", T}, {"bound", total}, {"infeasible", infeasible},
                              {"stations", std::move(stations)}}
                         .dump(1) +
                         "\n");
      if (infeasible) std::cerr << "bound: " << fs::format_number(total) << " exceeds z (infeasible)\n";
      if (trace_path) {
        const auto times = uniform_samples(T, samples);
        const auto traj = fs::station_failure_trajectories(model, rebal, design, times, with_delay);
        std::string csv = "t,station,qF\n";
        for (std::size_t n = 0; n < times.size(); ++n)
          for (std::size_t i = 0; i < traj.size(); ++i)
            csv += csv_row({fs::format_number(times[n]), std::to_string(i + 1), fs::format_number(traj[i][n])});
        fs::write_text_file(*trace_path, csv);
      }
      return kOk;
    }

    if (*simulate) {
      const auto rebal = load_plan(plan_path, model);
      const auto design = load_design(design_path, model.k());
      const auto times = uniform_samples(T, samples);
      if (exact && with_delay) throw fs::InputError("the exact coupled model has no travel delay");
      if (exact) {
        try {
          const auto traj = fs::coupled_trajectory(model, rebal, design, T, times);
          std::string csv = "t,p_F\n";
          for (const auto& s : traj.samples) csv += csv_row({fs::format_number(s.t), fs::format_number(s.pF)});
          emit(out_path, csv);
          return kOk;
        } catch (const fs::StateSpaceTooLarge& e) {
          std::cerr << "simulate: " << e.what() << "; using Monte Carlo\n";
        }
      }
      const auto curve = fs::estimate_failure_curve(model, rebal, design, T, runs, times, with_delay, seed);
      std::string csv = "t,p_hat,stderr,n\n";
      for (const auto& p : curve)
        csv += csv_row({fs::format_number(p.t), fs::format_number(p.estimate.mean),
                        fs::format_number(p.estimate.std_error), std::to_string(p.estimate.n)});
      emit(out_path, csv);
      return kOk;
    }

    const auto eta = fs::travel_time_matrix(model);
    const auto days = load_days(days_path, model.k());

    if (*replay) {
      const auto rebal = load_plan(plan_path, model);
      const auto design = load_design(design_path, model.k());
      const auto outcomes = fs::replay_days(days, rebal, design, eta, replay_options);
      std::string csv = "day,availability_failures,capacity_failures,day_failed\n";
      for (const auto& o : outcomes)
        csv += csv_row({o.day, std::to_string(o.availability_failures), std::to_string(o.capacity_failures),
                        o.day_failed ? "1" : "0"});
      emit(out_path, csv);
      std::cerr << "replay: failure rate " << fs::format_number(fs::failure_rate(outcomes)) << " over "
                << outcomes.size() << " days\n";
      return kOk;
    }

    if (*sweep) {
      std::vector<bool> modes;
      if (rebalance == "off" || rebalance == "both") modes.push_back(false);
      if (rebalance == "on" || rebalance == "both") modes.push_back(true);
      if (modes.empty()) throw fs::InputError("--rebalance must be on, off or both");
      const auto capacities = parse_range(capacity_grid);
      const auto budgets = parse_number_list(z_grid);

      std::string csv = "label,total_fleet,total_capacity,failure_rate\n";
      for (bool use_plan : modes) {
        const auto rebal = use_plan ? fs::plan_rebalancing(model, bin_hours) : fs::RebalancingPlan(model.k());
        const std::string suffix = use_plan ? "-rebalanced" : "";
        std::vector<std::pair<std::string, fs::SystemDesign>> designs;
        for (long C : capacities)
          designs.push_back({"baseline-C" + std::to_string(C) + suffix, fs::baseline_design(model.k(), C)});
        for (double zz : budgets)
          designs.push_back({"proposed-z" + fs::format_number(zz) + suffix,
                             fs::size_system(model, rebal, fs::SizingRequest{zz, T, {}}, with_delay).design()});
        for (const auto& row : fs::sweep(designs, days, rebal, eta, replay_options))
          csv += csv_row({row.label, std::to_string(row.total_fleet), std::to_string(row.total_capacity),
                          fs::format_number(row.failure_rate)});
      }
      emit(out_path, csv);
      return kOk;
    }
  } catch (const fs::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const fs::InvariantError& e) {
    std::cerr << "invariant violated: " << e.what() << '\n';
    return kInvariant;
  } catch (const fs::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const fs::json::exception& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}
