#pragma once

#include <numeric>
#include <utility>
#include <vector>

#include "railsched/events.hpp"
#include "railsched/graph.hpp"
#include "railsched/types.hpp"

// Parameter-only overtaking rules. Each rule compares minimum dwell, travel
// and headway values of a train pair around a segment s -> q and, when the
// test fires, bans the trailing train from passing at q before any search
// starts. The bans are heuristic: they keep solutions out, never add them,
// and on realistic fleets they leave the optimum intact while shrinking the
// tree.

namespace railsched {

enum class Rule : std::uint8_t {
  not_forbidden,
  rule23,
  rule33,
  rule34,
  rule35,
  rule36,
};

struct RuleOutcome {
  Rule rule = Rule::not_forbidden;
  // Classification branch, meaningful only when the simultaneity condition
  // held (rule != rule23): a1 = the follower clears its own headway within
  // the leader's, b1 = the follower's dwell plus two headways covers the
  // leader's dwell.
  bool simultaneous = false;
  bool a1 = false;
  bool b1 = false;

  bool forbidden() const { return rule != Rule::not_forbidden; }
};

// Evaluates whether `overtaker` passing `overtaken` at station q = s+1 of the
// line is forbidden by the parameter rules. Only minimum dwell and travel
// values enter; maxima never do.
inline RuleOutcome classify_pair(const Line& line, int overtaken, int overtaker, int s) {
  const int q = s + 1;
  const Train& t = line.trains[overtaken];
  const Train& u = line.trains[overtaker];
  const Seconds sf_s = line.stations[s].safety_time;
  const Seconds sf_q = line.stations[q].safety_time;
  const Seconds dwell_u_s = u.dwell_min[s];
  const Seconds dwell_t_q = t.dwell_min[q];
  const Seconds dwell_u_q = u.dwell_min[q];
  const Seconds travel_t = t.travel_min[s];
  const Seconds travel_u = u.travel_min[s];

  RuleOutcome out;
  // Can the overtaker even reach q before the overtaken train has cleared it?
  if (dwell_u_s + sf_s > travel_t - travel_u + dwell_t_q + sf_q) {
    out.rule = Rule::rule23;
    return out;
  }
  out.simultaneous = true;
  out.a1 = sf_s + dwell_u_s + travel_u - travel_t <= sf_q;
  out.b1 = dwell_u_q + 2 * sf_q >= dwell_t_q;
  if (out.a1 && out.b1) {
    if (2 * dwell_t_q <= 2 * sf_q + dwell_u_q) out.rule = Rule::rule33;
  } else if (out.a1 && !out.b1) {
    if (dwell_u_q <= 0) out.rule = Rule::rule34;
  } else if (!out.a1 && out.b1) {
    if (0 <= dwell_u_q + sf_q) out.rule = Rule::rule35;
  } else {
    if (dwell_t_q <= dwell_u_q) out.rule = Rule::rule36;
  }
  return out;
}

// Runs classify_pair over every ordered pair and segment, collecting the
// resulting overtake bans (at the downstream station, where the trailing
// train would catch the leader). Dispatch orders fold in as first-station
// precedence fixes.
inline FixedVariableMask apply_rules(const Instance& instance) {
  FixedVariableMask mask = FixedVariableMask::empty_for(instance);
  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    for (int t = 0; t < line.train_count(); ++t)
      for (int u = 0; u < line.train_count(); ++u) {
        if (t == u) continue;
        for (int s = 0; s + 1 < line.station_count(); ++s)
          if (classify_pair(line, t, u, s).forbidden()) mask.lines[l].forbid(t, u, s + 1);
      }
  }
  apply_dispatch_fixes(instance, mask);
  return mask;
}

struct InfeasibleTotalOrder : Error {
  using Error::Error;
};

// Feasible reference timetable: trains run in index order (or the dispatch
// order) with no overtaking anywhere. Overlap permissions are granted
// greedily while the per-train budget admits, which tightens the schedule.
// Seeds both the search incumbent and the Lagrangian upper bound.
inline std::pair<Timetable, EventAssignment> lexicographic_timetable(const Instance& instance) {
  EventAssignment assignment = EventAssignment::undecided_for(instance);
  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    const int n = line.train_count();
    std::vector<int> rank(n);
    if (line.dispatch_order) {
      for (int i = 0; i < n; ++i) rank[(*line.dispatch_order)[i]] = i;
    } else {
      std::iota(rank.begin(), rank.end(), 0);
    }
    LineAssignment& a = assignment.lines[l];
    for (int s = 0; s < line.station_count(); ++s) {
      const int cap = line.stations[s].capacity;
      std::vector<int> used(n, 0);
      for (int x = 0; x < n; ++x)
        for (int y = x + 1; y < n; ++y) {
          const int leader = rank[x] < rank[y] ? x : y;
          const int follower = leader == x ? y : x;
          a.set(x, y, s, precedes(leader, follower));
          if (cap >= 2 && used[leader] < cap - 1 && used[follower] < cap - 1) {
            a.set_overlap(leader, follower, s, true);
            ++used[leader];
            ++used[follower];
          }
        }
    }
  }
  ScheduleResult r = earliest_schedule(instance, assignment);
  if (!r.feasible())
    throw InfeasibleTotalOrder(
        "no-overtake order admits no schedule; travel or dwell maxima are pathological");
  return {std::move(*r.timetable), std::move(assignment)};
}

}  // namespace railsched
