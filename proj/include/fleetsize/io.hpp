#pragma once

// JSON documents and CSV formatting. Station labels are 1-based in every file.
//
// Model / plan document:
//   {"k": 3, "horizon_hours": 24,
//    "lambda": [{"o": 1, "d": 2, "breakpoints": [0, 8], "values": [0.1, 2.0]}, ...],
//    "eta": [[0, 0.2, ...], ...],
//    "rho": [{"o": 2, "d": 1, "times": [8.5, 9.5]}, ...]}
// A plan file may carry only k, horizon_hours and rho; a model file may omit rho.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetsize/errors.hpp"
#include "fleetsize/ingest.hpp"
#include "fleetsize/model.hpp"
#include "fleetsize/sizing.hpp"

namespace fleetsize {

using json = nlohmann::json;

/// Fixed CSV number format: 9 significant digits.
inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

namespace detail {

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline json model_to_json(const DemandModel& model, const std::vector<long>& station_ids = {}) {
  json doc;
  doc["k"] = model.k();
  doc["horizon_hours"] = model.horizon();
  json lambda = json::array();
  json eta = json::array();
  for (std::size_t o = 0; o < model.k(); ++o) {
    json row = json::array();
    for (std::size_t d = 0; d < model.k(); ++d) {
      row.push_back(model.eta(o, d));
      const auto& rate = model.lambda(o, d);
      if (o == d || rate.is_zero()) continue;
      lambda.push_back({{"o", o + 1}, {"d", d + 1}, {"breakpoints", rate.breakpoints()},
                        {"values", rate.values()}});
    }
    eta.push_back(std::move(row));
  }
  doc["lambda"] = std::move(lambda);
  doc["eta"] = std::move(eta);
  if (!station_ids.empty()) doc["station_ids"] = station_ids;
  return doc;
}

inline json plan_to_json(const RebalancingPlan& plan, double horizon) {
  json doc;
  doc["k"] = plan.k();
  doc["horizon_hours"] = horizon;
  json rho = json::array();
  for (std::size_t o = 0; o < plan.k(); ++o)
    for (std::size_t d = 0; d < plan.k(); ++d)
      if (!plan.departures(o, d).empty())
        rho.push_back({{"o", o + 1}, {"d", d + 1}, {"times", plan.departures(o, d)}});
  doc["rho"] = std::move(rho);
  return doc;
}

inline DemandModel model_from_json(const json& doc) {
  const auto k = detail::field<std::size_t>(doc, "k");
  const double horizon = doc.contains("horizon_hours") ? detail::field<double>(doc, "horizon_hours")
                                                       : kDefaultHorizonHours;
  DemandModel model(k, horizon);
  if (doc.contains("lambda"))
    for (const auto& entry : doc.at("lambda")) {
      const auto o = StationId::from_label(detail::field<long>(entry, "o"), k);
      const auto d = StationId::from_label(detail::field<long>(entry, "d"), k);
      model.set_lambda(o.index, d.index,
                       PiecewiseConstantIntensity(detail::field<std::vector<double>>(entry, "breakpoints"),
                                                  detail::field<std::vector<double>>(entry, "values"),
                                                  horizon));
    }
  if (doc.contains("eta")) {
    const auto eta = detail::field<std::vector<std::vector<double>>>(doc, "eta");
    if (eta.size() != k) throw InputError("eta must be a k x k matrix");
    for (std::size_t o = 0; o < k; ++o) {
      if (eta[o].size() != k) throw InputError("eta must be a k x k matrix");
      for (std::size_t d = 0; d < k; ++d) model.set_eta(o, d, eta[o][d]);
    }
  }
  return model;
}

inline RebalancingPlan plan_from_json(const json& doc) {
  const auto k = detail::field<std::size_t>(doc, "k");
  RebalancingPlan plan(k);
  if (doc.contains("rho"))
    for (const auto& entry : doc.at("rho")) {
      const auto o = StationId::from_label(detail::field<long>(entry, "o"), k);
      const auto d = StationId::from_label(detail::field<long>(entry, "d"), k);
      auto times = detail::field<std::vector<double>>(entry, "times");
      auto merged = plan.departures(o.index, d.index);
      merged.insert(merged.end(), times.begin(), times.end());
      std::sort(merged.begin(), merged.end());
      plan.set_departures(o.index, d.index, std::move(merged));
    }
  return plan;
}

inline json sizing_to_json(const SizingResult& result) {
  json stations = json::array();
  for (std::size_t i = 0; i < result.stations.size(); ++i) {
    const auto& s = result.stations[i];
    stations.push_back({{"id", i + 1}, {"v", s.v}, {"c", s.c}, {"qf", s.qf}});
  }
  return {{"z", result.z}, {"stations", std::move(stations)}, {"bound", result.bound}};
}

/// Reads a design from a sizing-result document (only id, v, c are required).
inline SystemDesign design_from_json(const json& doc) {
  const auto& stations = doc.at("stations");
  SystemDesign design;
  design.v.assign(stations.size(), 0);
  design.c.assign(stations.size(), 0);
  std::vector<bool> seen(stations.size(), false);
  for (const auto& s : stations) {
    const auto id = StationId::from_label(detail::field<long>(s, "id"), stations.size());
    if (seen[id.index]) throw InputError("station listed twice in design");
    seen[id.index] = true;
    design.v[id.index] = detail::field<long>(s, "v");
    design.c[id.index] = detail::field<long>(s, "c");
  }
  design.validate(stations.size());
  return design;
}

inline json design_to_json(const SystemDesign& design) {
  json stations = json::array();
  for (std::size_t i = 0; i < design.k(); ++i)
    stations.push_back({{"id", i + 1}, {"v", design.v[i]}, {"c", design.c[i]}});
  return {{"stations", std::move(stations)}};
}

inline json days_to_json(const std::vector<DaySequence>& days) {
  json out = json::array();
  for (const auto& day : days) {
    json events = json::array();
    for (const auto& e : day.events)
      events.push_back({{"t", e.time}, {"o", e.o + 1}, {"d", e.d + 1}, {"eta", e.eta}});
    out.push_back({{"date", day.date}, {"events", std::move(events)}});
  }
  return out;
}

inline std::vector<DaySequence> days_from_json(const json& doc, std::size_t k) {
  std::vector<DaySequence> days;
  for (const auto& entry : doc) {
    DaySequence day;
    day.date = detail::field<std::string>(entry, "date");
    for (const auto& e : entry.at("events"))
      day.events.push_back({detail::field<double>(e, "t"),
                            StationId::from_label(detail::field<long>(e, "o"), k).index,
                            StationId::from_label(detail::field<long>(e, "d"), k).index,
                            detail::field<double>(e, "eta")});
    days.push_back(std::move(day));
  }
  return days;
}

}  // namespace fleetsize
