#pragma once

// Trip-record ingestion. Input is a CSV with at least the columns
// start_time, end_time, start_station_id, end_station_id (any order, extra
// columns ignored) and ISO-8601 local timestamps.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fleetsize/errors.hpp"
#include "fleetsize/model.hpp"

namespace fleetsize {

using TimePoint = std::chrono::sys_seconds;  // naive local time

struct TripRecord {
  TimePoint start_time;
  TimePoint end_time;
  long start_station = 0;  // external station id
  long end_station = 0;

  double duration_hours() const {
    return std::chrono::duration<double, std::ratio<3600>>(end_time - start_time).count();
  }
};

/// Parses "YYYY-MM-DD[T ]HH:MM[:SS[.fff]]". Fractional seconds are dropped.
inline std::optional<TimePoint> parse_timestamp(std::string_view s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
  char sep = 0;
  int consumed = 0;
  const std::string buf(s);
  const int n = std::sscanf(buf.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &consumed);
  if (n < 6 || (sep != 'T' && sep != ' ')) return std::nullopt;
  std::string_view rest = s.substr(static_cast<std::size_t>(consumed));
  if (!rest.empty() && rest.front() == ':') {
    rest.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), se);
    if (ec != std::errc() || ptr == rest.data()) return std::nullopt;
    rest.remove_prefix(static_cast<std::size_t>(ptr - rest.data()));
    if (!rest.empty() && rest.front() == '.') {
      rest.remove_prefix(1);
      while (!rest.empty() && std::isdigit(static_cast<unsigned char>(rest.front()))) rest.remove_prefix(1);
    }
  }
  if (!rest.empty()) return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 60) return std::nullopt;
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{se};
}

inline std::string format_date(std::chrono::sys_days day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline std::string format_timestamp(TimePoint t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::hh_mm_ss hms{t - day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "T%02d:%02d:%02d", static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()), static_cast<int>(hms.seconds().count()));
  return format_date(day) + buf;
}

/// Dense 1-based labels for a set of external station ids (sorted ascending).
class StationSet {
 public:
  StationSet() = default;
  explicit StationSet(std::vector<long> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  }

  static StationSet from_trips(const std::vector<TripRecord>& trips) {
    std::vector<long> ids;
    for (const auto& t : trips) {
      ids.push_back(t.start_station);
      ids.push_back(t.end_station);
    }
    return StationSet(std::move(ids));
  }

  std::size_t size() const { return ids_.size(); }
  const std::vector<long>& ids() const { return ids_; }
  bool contains(long id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }

  std::size_t index_of(long id) const {
    const auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) throw InputError("unknown station id " + std::to_string(id));
    return static_cast<std::size_t>(it - ids_.begin());
  }

 private:
  std::vector<long> ids_;
};

struct ParseReport {
  std::vector<TripRecord> trips;
  std::size_t rows = 0;
  std::size_t malformed = 0;        // unparsable fields or end before start
  std::size_t unknown_station = 0;  // station outside the declared set
  std::vector<std::string> diagnostics;  // first few rejections
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

inline std::string normalize_header(std::string s) {
  std::string out;
  for (char ch : s) {
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return out;
}

inline std::optional<long> parse_long(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Reads trip rows. When `stations` is given, rows naming other ids are rejected.
inline ParseReport parse_trips(std::istream& in, const StationSet* stations = nullptr) {
  constexpr std::size_t kMaxDiagnostics = 20;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line != "\r") break;
  if (line.empty()) throw InputError("trip file is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const auto header = detail::split_csv_line(line);
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (detail::normalize_header(header[i]) == name) return i;
    throw InputError("trip file lacks required column '" + name + "'");
  };
  const std::size_t c_start = column("start_time"), c_end = column("end_time"),
                    c_o = column("start_station_id"), c_d = column("end_station_id");
  const std::size_t needed = std::max({c_start, c_end, c_o, c_d}) + 1;

  ParseReport report;
  std::size_t line_no = 1;
  auto reject = [&](std::size_t& counter, const std::string& why) {
    ++counter;
    if (report.diagnostics.size() < kMaxDiagnostics)
      report.diagnostics.push_back("line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    ++report.rows;
    const auto f = detail::split_csv_line(line);
    if (f.size() < needed) {
      reject(report.malformed, "too few fields");
      continue;
    }
    const auto start = parse_timestamp(f[c_start]);
    const auto end = parse_timestamp(f[c_end]);
    const auto o = detail::parse_long(f[c_o]);
    const auto d = detail::parse_long(f[c_d]);
    if (!start || !end || !o || !d) {
      reject(report.malformed, "unparsable field");
      continue;
    }
    if (*end < *start) {
      reject(report.malformed, "trip ends before it starts");
      continue;
    }
    if (stations && (!stations->contains(*o) || !stations->contains(*d))) {
      reject(report.unknown_station,
             "unknown station id " + std::to_string(stations->contains(*o) ? *d : *o));
      continue;
    }
    report.trips.push_back({*start, *end, *o, *d});
  }
  return report;
}

inline void write_trips_csv(std::ostream& out, const std::vector<TripRecord>& trips) {
  out << "start_time,end_time,start_station_id,end_station_id\n";
  for (const auto& t : trips)
    out << format_timestamp(t.start_time) << ',' << format_timestamp(t.end_time) << ','
        << t.start_station << ',' << t.end_station << '\n';
}

enum class DayFilter { working, all };

struct DaySelection {
  DayFilter days = DayFilter::working;
  std::optional<std::chrono::year_month> month;

  bool accepts(std::chrono::sys_days day) const {
    using namespace std::chrono;
    if (month) {
      const year_month_day ymd{day};
      if (ymd.year() != month->year() || ymd.month() != month->month()) return false;
    }
    if (days == DayFilter::working) {
      const weekday wd{day};
      if (wd == Saturday || wd == Sunday) return false;
    }
    return true;
  }
};

inline std::optional<std::chrono::year_month> parse_month(std::string_view s) {
  int y = 0;
  unsigned m = 0;
  const std::string buf(s);
  int consumed = 0;
  if (std::sscanf(buf.c_str(), "%4d-%2u%n", &y, &m, &consumed) != 2 ||
      static_cast<std::size_t>(consumed) != buf.size())
    return std::nullopt;
  const std::chrono::year_month ym{std::chrono::year{y}, std::chrono::month{m}};
  if (!ym.ok()) return std::nullopt;
  return ym;
}

inline std::chrono::sys_days trip_day(const TripRecord& t) {
  return std::chrono::floor<std::chrono::days>(t.start_time);
}

inline double hours_since_midnight(const TripRecord& t) {
  return std::chrono::duration<double, std::ratio<3600>>(t.start_time - trip_day(t)).count();
}

struct DemandEstimate {
  DemandModel model;
  StationSet stations;
  std::size_t days = 0;
  std::size_t trips_used = 0;
  std::size_t round_trips_dropped = 0;
};

namespace detail {

inline double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace detail

/// Typical-day demand: the rate of pair (o, d) in bin b is the trip count
/// over all selected days divided by (days * bin length). Travel time is the
/// pair's median duration, or the global median for pairs never observed.
inline DemandEstimate estimate_demand(const std::vector<TripRecord>& trips,
                                      const StationSet& stations, double bin_hours,
                                      const DaySelection& selection) {
  constexpr double horizon = kDefaultHorizonHours;
  const double bins_per_day = horizon / bin_hours;
  if (!(bin_hours > 0.0) || std::abs(bins_per_day - std::round(bins_per_day)) > 1e-9)
    throw InputError("bin length must divide 24 hours");
  const auto bins = static_cast<std::size_t>(std::round(bins_per_day));
  const std::size_t k = stations.size();
  if (k == 0) throw InputError("no stations");

  DemandEstimate out;
  out.stations = stations;
  std::set<std::chrono::sys_days> days;
  std::vector<std::size_t> counts(k * k * bins, 0);
  std::map<std::size_t, std::vector<double>> durations;
  std::vector<double> all_durations;
  for (const auto& t : trips) {
    const auto day = trip_day(t);
    if (!selection.accepts(day)) continue;
    days.insert(day);
    if (t.start_station == t.end_station) {
      ++out.round_trips_dropped;
      continue;
    }
    const std::size_t o = stations.index_of(t.start_station);
    const std::size_t d = stations.index_of(t.end_station);
    const auto b = std::min(bins - 1, static_cast<std::size_t>(hours_since_midnight(t) / bin_hours));
    ++counts[(o * k + d) * bins + b];
    durations[o * k + d].push_back(t.duration_hours());
    all_durations.push_back(t.duration_hours());
    ++out.trips_used;
  }
  if (days.empty()) throw InputError("no trips left after the day filter");
  out.days = days.size();
  const double global_eta = all_durations.empty() ? 0.0 : detail::median(all_durations);

  out.model = DemandModel(k, horizon);
  const double exposure = static_cast<double>(out.days) * bin_hours;
  std::vector<double> breakpoints(bins);
  for (std::size_t b = 0; b < bins; ++b) breakpoints[b] = static_cast<double>(b) * bin_hours;
  for (std::size_t o = 0; o < k; ++o)
    for (std::size_t d = 0; d < k; ++d) {
      if (o == d) continue;
      const auto it = durations.find(o * k + d);
      out.model.set_eta(o, d, it == durations.end() ? global_eta : detail::median(it->second));
      if (it == durations.end()) continue;
      std::vector<double> values(bins);
      for (std::size_t b = 0; b < bins; ++b)
        values[b] = static_cast<double>(counts[(o * k + d) * bins + b]) / exposure;
      out.model.set_lambda(o, d, PiecewiseConstantIntensity(breakpoints, values, horizon));
    }
  return out;
}

struct RentalEvent {
  double time = 0.0;  // hours since midnight
  std::size_t o = 0;  // 0-based station index
  std::size_t d = 0;
  double eta = 0.0;   // observed duration, hours

  friend bool operator==(const RentalEvent&, const RentalEvent&) = default;
};

struct DaySequence {
  std::string date;
  std::vector<RentalEvent> events;

  friend bool operator==(const DaySequence&, const DaySequence&) = default;
};

/// One sequence per selected calendar day, events in start-time order.
/// Round trips are dropped, as in demand estimation.
inline std::vector<DaySequence> extract_day_sequences(const std::vector<TripRecord>& trips,
                                                      const StationSet& stations,
                                                      const DaySelection& selection) {
  std::map<std::chrono::sys_days, std::vector<RentalEvent>> by_day;
  for (const auto& t : trips) {
    const auto day = trip_day(t);
    if (!selection.accepts(day)) continue;
    auto& events = by_day[day];
    if (t.start_station == t.end_station) continue;
    events.push_back({hours_since_midnight(t), stations.index_of(t.start_station),
                      stations.index_of(t.end_station), t.duration_hours()});
  }
  std::vector<DaySequence> out;
  for (auto& [day, events] : by_day) {
    std::stable_sort(events.begin(), events.end(),
                     [](const RentalEvent& a, const RentalEvent& b) { return a.time < b.time; });
    out.push_back({format_date(day), std::move(events)});
  }
  return out;
}

}  // namespace fleetsize
