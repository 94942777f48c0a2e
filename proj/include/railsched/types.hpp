#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Core domain types for double-track, uni-directional railway lines with
// capacitated stations. All times are integer seconds: propagation along
// difference constraints stays exact and equality tests are meaningful.

namespace railsched {

using Seconds = std::int64_t;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingTrain : Error {
  using Error::Error;
};

struct Station {
  std::string name;
  Seconds safety_time = 0;  // minimum headway SF at this station
  int capacity = 1;         // platform + siding tracks usable at once
};

struct Train {
  std::string name;
  // Per-station arrays (size = station count).
  std::vector<Seconds> dwell_min;
  std::vector<Seconds> dwell_max;
  // Per-segment arrays (size = station count - 1), segment s -> s+1.
  std::vector<Seconds> travel_min;
  std::vector<Seconds> travel_max;
  // Earliest permitted departure per station (release times).
  std::vector<Seconds> earliest_departure;
};

struct Line {
  std::vector<Station> stations;
  std::vector<Train> trains;
  // Optional fixed precedence at the first station, as train indices.
  std::optional<std::vector<int>> dispatch_order;

  int station_count() const { return static_cast<int>(stations.size()); }
  int train_count() const { return static_cast<int>(trains.size()); }
  int last_station() const { return station_count() - 1; }
};

struct Instance {
  std::vector<Line> lines;
  std::optional<Seconds> big_m;  // only the LP exporter consumes this

  int line_count() const { return static_cast<int>(lines.size()); }
};

// ---------------------------------------------------------------------------
// Unordered train pairs. Pairs (a, b) with a < b are indexed row-major:
// (0,1), (0,2), ..., (0,n-1), (1,2), ...
// ---------------------------------------------------------------------------

inline int pair_count(int trains) { return trains * (trains - 1) / 2; }

inline int pair_index(int a, int b, int trains) {
  if (a > b) std::swap(a, b);
  return a * trains - a * (a + 1) / 2 + (b - a - 1);
}

// Inverse of pair_index.
inline std::pair<int, int> pair_trains(int index, int trains) {
  int a = 0;
  int row = trains - 1;
  while (index >= row) {
    index -= row;
    --row;
    ++a;
  }
  return {a, a + 1 + index};
}

// ---------------------------------------------------------------------------
// Timetable
// ---------------------------------------------------------------------------

struct LineTimetable {
  int train_count = 0;
  int station_count = 0;
  std::vector<Seconds> arrival;    // [t * station_count + s]
  std::vector<Seconds> departure;  // [t * station_count + s]

  Seconds arr(int t, int s) const { return arrival[t * station_count + s]; }
  Seconds dep(int t, int s) const { return departure[t * station_count + s]; }
  Seconds& arr(int t, int s) { return arrival[t * station_count + s]; }
  Seconds& dep(int t, int s) { return departure[t * station_count + s]; }
};

struct Timetable {
  std::vector<LineTimetable> lines;

  static Timetable sized_for(const Instance& instance) {
    Timetable tt;
    tt.lines.reserve(instance.lines.size());
    for (const Line& line : instance.lines) {
      LineTimetable lt;
      lt.train_count = line.train_count();
      lt.station_count = line.station_count();
      lt.arrival.assign(static_cast<size_t>(lt.train_count) * lt.station_count, 0);
      lt.departure.assign(static_cast<size_t>(lt.train_count) * lt.station_count, 0);
      tt.lines.push_back(std::move(lt));
    }
    return tt;
  }
};

// Sum of last-station departures over every train of every line.
inline Seconds objective(const Instance& instance, const Timetable& timetable) {
  if (timetable.lines.size() != instance.lines.size())
    throw MissingTrain("timetable does not cover all lines");
  Seconds total = 0;
  for (size_t l = 0; l < instance.lines.size(); ++l) {
    const Line& line = instance.lines[l];
    const LineTimetable& lt = timetable.lines[l];
    if (lt.train_count != line.train_count() || lt.station_count != line.station_count())
      throw MissingTrain("timetable does not cover all trains of line " + std::to_string(l));
    for (int t = 0; t < line.train_count(); ++t)
      total += lt.dep(t, line.last_station());
  }
  return total;
}

struct Intervals {
  Seconds psi;    // arrival(t', s) - departure(t, s)
  Seconds theta;  // departure(t', s) - departure(t, s)
};

inline Intervals intervals(const Timetable& timetable, int line, int t, int t_other, int s) {
  const LineTimetable& lt = timetable.lines.at(line);
  return Intervals{lt.arr(t_other, s) - lt.dep(t, s), lt.dep(t_other, s) - lt.dep(t, s)};
}

// ---------------------------------------------------------------------------
// Instance validation
// ---------------------------------------------------------------------------

struct ValidationIssue {
  std::string code;   // DwellBoundsInverted, TravelBoundsInverted, ...
  std::string where;  // JSON-path style location
  std::string detail;
};

namespace detail {

inline std::string loc(int l, const char* kind, int t, int s) {
  std::string out = "lines[" + std::to_string(l) + "]." + kind + "[" + std::to_string(t) + "]";
  if (s >= 0) out += " station " + std::to_string(s);
  return out;
}

}  // namespace detail

inline std::vector<ValidationIssue> validate(const Instance& instance) {
  std::vector<ValidationIssue> issues;
  auto add = [&](std::string code, std::string where, std::string detail) {
    issues.push_back({std::move(code), std::move(where), std::move(detail)});
  };
  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    const int stations = line.station_count();
    for (int s = 0; s < stations; ++s) {
      const Station& st = line.stations[s];
      if (st.capacity < 1)
        add("NonPositiveCapacity", detail::loc(l, "stations", s, -1),
            "capacity " + std::to_string(st.capacity));
      if (st.safety_time < 0)
        add("NegativeTime", detail::loc(l, "stations", s, -1), "safety_time < 0");
    }
    for (int t = 0; t < line.train_count(); ++t) {
      const Train& tr = line.trains[t];
      auto check_len = [&](const std::vector<Seconds>& v, size_t want, const char* field) {
        if (v.size() != want)
          add("ArrayLengthMismatch", detail::loc(l, "trains", t, -1),
              std::string(field) + " has " + std::to_string(v.size()) + " entries, expected " +
                  std::to_string(want));
      };
      check_len(tr.dwell_min, stations, "dwell_min");
      check_len(tr.dwell_max, stations, "dwell_max");
      check_len(tr.travel_min, stations > 0 ? stations - 1 : 0, "travel_min");
      check_len(tr.travel_max, stations > 0 ? stations - 1 : 0, "travel_max");
      check_len(tr.earliest_departure, stations, "earliest_departure");
      const size_t nd = std::min(tr.dwell_min.size(), tr.dwell_max.size());
      for (size_t s = 0; s < nd; ++s) {
        if (tr.dwell_min[s] < 0 || tr.dwell_max[s] < 0)
          add("NegativeTime", detail::loc(l, "trains", t, static_cast<int>(s)), "dwell < 0");
        if (tr.dwell_min[s] > tr.dwell_max[s])
          add("DwellBoundsInverted", detail::loc(l, "trains", t, static_cast<int>(s)),
              std::to_string(tr.dwell_min[s]) + " > " + std::to_string(tr.dwell_max[s]));
      }
      const size_t nt = std::min(tr.travel_min.size(), tr.travel_max.size());
      for (size_t s = 0; s < nt; ++s) {
        if (tr.travel_min[s] < 1)
          add("NegativeTime", detail::loc(l, "trains", t, static_cast<int>(s)),
              "travel_min < 1");
        if (tr.travel_min[s] > tr.travel_max[s])
          add("TravelBoundsInverted", detail::loc(l, "trains", t, static_cast<int>(s)),
              std::to_string(tr.travel_min[s]) + " > " + std::to_string(tr.travel_max[s]));
      }
      for (size_t s = 0; s < tr.earliest_departure.size(); ++s)
        if (tr.earliest_departure[s] < 0)
          add("NegativeTime", detail::loc(l, "trains", t, static_cast<int>(s)),
              "earliest_departure < 0");
    }
    if (line.dispatch_order) {
      const auto& order = *line.dispatch_order;
      std::vector<bool> seen(line.train_count(), false);
      bool ok = order.size() == static_cast<size_t>(line.train_count());
      for (int idx : order) {
        if (idx < 0 || idx >= line.train_count() || seen[idx]) {
          ok = false;
          break;
        }
        seen[idx] = true;
      }
      if (!ok)
        add("BadDispatchOrder", "lines[" + std::to_string(l) + "].dispatch_order",
            "must be a permutation of the line's trains");
    }
  }
  return issues;
}

}  // namespace railsched
