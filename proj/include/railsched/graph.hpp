#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "railsched/events.hpp"
#include "railsched/types.hpp"

// Exact evaluation of (partial) event assignments. With the binaries fixed,
// every model constraint is a two-variable difference inequality
// time(to) >= time(from) + weight, so the earliest feasible timetable is the
// longest-path solution from an origin node fixed at 0, and infeasibility is
// a positive-weight cycle. No big-M anywhere.

namespace railsched {

struct ConstraintGraph {
  struct Arc {
    int from;
    int to;
    Seconds weight;
  };

  int node_count = 1;  // node 0 is the origin
  std::vector<Arc> arcs;
  // node id bookkeeping: per line, nodes are laid out train-major as
  // base + (t * stations + s) * 2 + (0 = arrival, 1 = departure)
  std::vector<int> line_base;
  std::vector<std::pair<int, int>> line_shape;  // (trains, stations)

  int arrival_node(int line, int t, int s) const {
    return line_base[line] + (t * line_shape[line].second + s) * 2;
  }
  int departure_node(int line, int t, int s) const {
    return line_base[line] + (t * line_shape[line].second + s) * 2 + 1;
  }
  void add(int from, int to, Seconds weight) { arcs.push_back({from, to, weight}); }
};

struct ScheduleResult {
  std::optional<Timetable> timetable;
  std::vector<ConstraintGraph::Arc> cycle;  // witness when infeasible

  bool feasible() const { return timetable.has_value(); }
};

namespace detail {

// Emits the pairwise arcs of one decided event at station s.
// precedes(f, g): arrival headway, departure headway, and (unless a second
// track plus an overlap permission waives it) the clearance that keeps g out
// until f has left.
// overtakes(f, g): g arrives after f and departs first; both trains stand in
// the station together, so no clearance arc exists.
inline void emit_event_arcs(ConstraintGraph& g, int l, int f, int other, int s, EventChoice c,
                            Seconds sf, int capacity, bool overlap_waived) {
  if (c == EventChoice::undecided) return;
  if (is_overtake(c)) {
    g.add(g.arrival_node(l, f, s), g.arrival_node(l, other, s), sf);
    g.add(g.departure_node(l, other, s), g.departure_node(l, f, s), sf);
  } else {
    g.add(g.arrival_node(l, f, s), g.arrival_node(l, other, s), sf);
    g.add(g.departure_node(l, f, s), g.departure_node(l, other, s), sf);
    if (capacity < 2 || !overlap_waived)
      g.add(g.departure_node(l, f, s), g.arrival_node(l, other, s), sf);
  }
}

// Origin reachability, release times, dwell and travel windows for every
// train: the assignment-independent part of the graph.
inline ConstraintGraph graph_skeleton(const Instance& instance) {
  ConstraintGraph g;
  g.line_base.reserve(instance.lines.size());
  for (const Line& line : instance.lines) {
    g.line_base.push_back(g.node_count);
    g.line_shape.emplace_back(line.train_count(), line.station_count());
    g.node_count += line.train_count() * line.station_count() * 2;
  }
  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    const int m = line.station_count();
    for (int t = 0; t < line.train_count(); ++t) {
      const Train& tr = line.trains[t];
      for (int s = 0; s < m; ++s) {
        g.add(0, g.arrival_node(l, t, s), 0);
        g.add(0, g.departure_node(l, t, s), tr.earliest_departure[s]);
        g.add(g.arrival_node(l, t, s), g.departure_node(l, t, s), tr.dwell_min[s]);
        g.add(g.departure_node(l, t, s), g.arrival_node(l, t, s), -tr.dwell_max[s]);
        if (s + 1 < m) {
          g.add(g.departure_node(l, t, s), g.arrival_node(l, t, s + 1), tr.travel_min[s]);
          g.add(g.arrival_node(l, t, s + 1), g.departure_node(l, t, s), -tr.travel_max[s]);
        }
      }
    }
  }
  return g;
}

}  // namespace detail

// Builds the difference-constraint graph for an assignment. Undecided pairs
// emit no pairwise arcs, which is exactly the relaxation used for node
// bounds: dropping constraints can only schedule earlier.
inline ConstraintGraph build_graph(const Instance& instance, const EventAssignment& assignment) {
  ConstraintGraph g = detail::graph_skeleton(instance);
  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    const int m = line.station_count();
    const LineAssignment& a = assignment.lines[l];
    for (int s = 0; s < m; ++s) {
      const Seconds sf = line.stations[s].safety_time;
      const int cap = line.stations[s].capacity;
      for (int x = 0; x < line.train_count(); ++x)
        for (int y = x + 1; y < line.train_count(); ++y) {
          const EventChoice c = a.choice_of(x, y, s);
          if (c == EventChoice::undecided) continue;
          const int first = arrival_leader(c) == 0 ? x : y;
          const int second = first == x ? y : x;
          detail::emit_event_arcs(g, l, first, second, s, c, sf, cap,
                                  a.overlap(first, second, s));
        }
    }
  }
  return g;
}

// Longest paths from the origin via FIFO label correcting. A node relaxed
// more than node-count times proves a positive cycle; the witness is
// reconstructed through predecessor arcs.
inline ScheduleResult earliest_schedule(const ConstraintGraph& g, const Instance& instance) {
  constexpr Seconds kUnset = std::numeric_limits<Seconds>::min();
  const int n = g.node_count;
  std::vector<std::vector<int>> out(n);
  for (int i = 0; i < static_cast<int>(g.arcs.size()); ++i) out[g.arcs[i].from].push_back(i);

  std::vector<Seconds> dist(n, kUnset);
  std::vector<int> pred(n, -1);
  std::vector<int> relaxations(n, 0);
  std::vector<bool> queued(n, false);
  std::deque<int> queue;

  dist[0] = 0;
  queue.push_back(0);
  queued[0] = true;

  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    queued[u] = false;
    for (int ai : out[u]) {
      const auto& arc = g.arcs[ai];
      const Seconds cand = dist[u] + arc.weight;
      if (cand > dist[arc.to]) {
        dist[arc.to] = cand;
        pred[arc.to] = ai;
        if (++relaxations[arc.to] > n) {
          // A node relaxed more than node-count times sits on or behind a
          // positive cycle. Walk n predecessors to land inside the cycle,
          // then collect arcs until the start node repeats.
          int v = arc.to;
          for (int i = 0; i < n && pred[v] >= 0; ++i) v = g.arcs[pred[v]].from;
          ScheduleResult res;
          const int start = v;
          do {
            res.cycle.push_back(g.arcs[pred[v]]);
            v = g.arcs[pred[v]].from;
          } while (v != start && pred[v] >= 0);
          std::reverse(res.cycle.begin(), res.cycle.end());
          return res;
        }
        if (!queued[arc.to]) {
          queue.push_back(arc.to);
          queued[arc.to] = true;
        }
      }
    }
  }

  ScheduleResult res;
  Timetable tt = Timetable::sized_for(instance);
  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    LineTimetable& lt = tt.lines[l];
    for (int t = 0; t < line.train_count(); ++t)
      for (int s = 0; s < line.station_count(); ++s) {
        lt.arr(t, s) = dist[g.arrival_node(l, t, s)];
        lt.dep(t, s) = dist[g.departure_node(l, t, s)];
      }
  }
  res.timetable = std::move(tt);
  return res;
}

inline ScheduleResult earliest_schedule(const Instance& instance,
                                        const EventAssignment& assignment) {
  return earliest_schedule(build_graph(instance, assignment), instance);
}

struct Infeasible {
  std::vector<ConstraintGraph::Arc> cycle;
};

// Objective of the relaxed schedule: a valid lower bound on every completion
// of the partial assignment.
inline std::variant<Seconds, Infeasible> lower_bound(const Instance& instance,
                                                     const EventAssignment& assignment) {
  ScheduleResult r = earliest_schedule(instance, assignment);
  if (!r.feasible()) return Infeasible{std::move(r.cycle)};
  return objective(instance, *r.timetable);
}

}  // namespace railsched
