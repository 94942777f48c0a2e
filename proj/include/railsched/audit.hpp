#pragma once

#include <string>
#include <vector>

#include "railsched/events.hpp"
#include "railsched/types.hpp"

// Full feasibility audit of a timetable against an instance and an event
// assignment. Every failed check yields one violation record with a signed
// slack; slack < 0 means violated by that many seconds. An empty report is
// the definition of feasibility used throughout this project, and every
// solver output must produce one.

namespace railsched {

struct Violation {
  std::string constraint;  // "2".."18" or "linking"
  int line = 0;
  int station = 0;
  std::vector<int> trains;
  Seconds slack = 0;
  std::string detail;
};

struct AuditReport {
  std::vector<Violation> violations;

  bool clean() const { return violations.empty(); }
  bool mentions(const std::string& constraint) const {
    for (const auto& v : violations)
      if (v.constraint == constraint) return true;
    return false;
  }
};

namespace detail {

// Tie-tolerant inference used when the caller supplies no assignment.
inline EventAssignment infer_for_audit(const Instance& instance, const Timetable& timetable) {
  EventAssignment assignment = EventAssignment::undecided_for(instance);
  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    const LineTimetable& lt = timetable.lines.at(l);
    LineAssignment& a = assignment.lines[l];
    for (int s = 0; s < line.station_count(); ++s) {
      const Seconds sf = line.stations[s].safety_time;
      for (int x = 0; x < line.train_count(); ++x)
        for (int y = x + 1; y < line.train_count(); ++y) {
          const EventChoice c =
              infer_choice(lt.arr(x, s), lt.dep(x, s), lt.arr(y, s), lt.dep(y, s));
          a.set(x, y, s, c);
          if (c == EventChoice::lo_leads && lt.arr(y, s) < lt.dep(x, s) + sf)
            a.set_overlap(x, y, s, true);
          if (c == EventChoice::hi_leads && lt.arr(x, s) < lt.dep(y, s) + sf)
            a.set_overlap(y, x, s, true);
        }
    }
  }
  return assignment;
}

inline std::string structural_id(const std::string& kind) {
  if (kind == "overtake_at_capacity_one" || kind == "clique") return "14";
  if (kind == "budget") return "16";
  if (kind == "overlap_without_precede") return "17";
  if (kind == "overlap_at_capacity_one") return "15";
  if (kind == "fifo_linking") return "linking";
  return "12";  // incomplete assignment
}

}  // namespace detail

inline AuditReport audit_timetable(const Instance& instance, const Timetable& timetable,
                                   const EventAssignment* assignment_in = nullptr) {
  AuditReport report;
  auto add = [&](const char* id, int l, int s, std::vector<int> trains, Seconds slack,
                 std::string detail = "") {
    if (slack < 0)
      report.violations.push_back({id, l, s, std::move(trains), slack, std::move(detail)});
  };

  EventAssignment inferred;
  const EventAssignment* assignment = assignment_in;
  if (!assignment) {
    inferred = detail::infer_for_audit(instance, timetable);
    assignment = &inferred;
  }

  // Structural checks on the assignment itself.
  for (const StructuralViolation& sv : check_assignment(instance, *assignment, true)) {
    report.violations.push_back(
        {detail::structural_id(sv.kind), sv.line, sv.station, sv.trains, -1, sv.kind});
  }

  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    const LineTimetable& lt = timetable.lines.at(l);
    const LineAssignment& a = assignment->lines[l];
    const int m = line.station_count();

    for (int t = 0; t < line.train_count(); ++t) {
      const Train& tr = line.trains[t];
      for (int s = 0; s < m; ++s) {
        if (s + 1 < m) {
          add("2", l, s, {t}, lt.arr(t, s + 1) - lt.dep(t, s) - tr.travel_min[s]);
          add("3", l, s, {t}, lt.dep(t, s) + tr.travel_max[s] - lt.arr(t, s + 1));
        }
        add("4", l, s, {t}, lt.dep(t, s) - lt.arr(t, s) - tr.dwell_min[s]);
        add("5", l, s, {t}, lt.arr(t, s) + tr.dwell_max[s] - lt.dep(t, s));
        add("18", l, s, {t}, lt.dep(t, s) - tr.earliest_departure[s]);
      }
    }

    for (int s = 0; s < m; ++s) {
      const Seconds sf = line.stations[s].safety_time;
      const int cap = line.stations[s].capacity;
      for (int x = 0; x < line.train_count(); ++x)
        for (int y = x + 1; y < line.train_count(); ++y) {
          const EventChoice c = a.choice_of(x, y, s);
          if (c == EventChoice::undecided) continue;
          const int f = arrival_leader(c) == 0 ? x : y;
          const int g = f == x ? y : x;
          if (is_overtake(c)) {
            add("9", l, s, {f, g}, lt.arr(g, s) - lt.arr(f, s) - sf);
            add("10", l, s, {f, g}, lt.dep(f, s) - lt.dep(g, s) - sf);
          } else {
            add("6", l, s, {f, g}, lt.arr(g, s) - lt.arr(f, s) - sf);
            add("7", l, s, {f, g}, lt.dep(g, s) - lt.dep(f, s) - sf);
            const Seconds clearance = lt.arr(g, s) - lt.dep(f, s) - sf;
            if (cap < 2)
              add("13", l, s, {f, g}, clearance);
            else if (!a.overlap(f, g, s))
              add("15", l, s, {f, g}, clearance);
          }
        }
    }
  }
  return report;
}

}  // namespace railsched
