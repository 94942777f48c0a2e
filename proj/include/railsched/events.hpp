#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "railsched/types.hpp"

// Event structure per (unordered train pair, station). For trains a < b of a
// pair, exactly one of four things happens at a station in a complete
// assignment:
//
//   lo_leads      a arrives and departs before b           (x'_{a,b,s})
//   hi_leads      b arrives and departs before a           (x'_{b,a,s})
//   hi_passes_lo  a arrives first, b departs first         (x_{a,b,s})
//   lo_passes_hi  b arrives first, a departs first         (x_{b,a,s})
//
// The two "passes" events are overtakes inside the station and need at least
// two platform tracks.

namespace railsched {

enum class EventChoice : std::uint8_t {
  undecided = 0,
  lo_leads,
  hi_leads,
  hi_passes_lo,
  lo_passes_hi,
};

// Event in which `leader` arrives and departs before the other train.
inline EventChoice precedes(int leader, int other) {
  return leader < other ? EventChoice::lo_leads : EventChoice::hi_leads;
}

// Event in which `overtaker` arrives after `overtaken` but departs first.
inline EventChoice overtakes(int overtaken, int overtaker) {
  return overtaken < overtaker ? EventChoice::hi_passes_lo : EventChoice::lo_passes_hi;
}

// Train that enters the station first under the given event, as 0 (= lower
// pair index) or 1 (= higher).
inline int arrival_leader(EventChoice c) {
  switch (c) {
    case EventChoice::lo_leads:
    case EventChoice::hi_passes_lo:
      return 0;
    case EventChoice::hi_leads:
    case EventChoice::lo_passes_hi:
      return 1;
    default:
      return -1;
  }
}

// Train that leaves the station first, same encoding.
inline int departure_leader(EventChoice c) {
  switch (c) {
    case EventChoice::lo_leads:
    case EventChoice::lo_passes_hi:
      return 0;
    case EventChoice::hi_leads:
    case EventChoice::hi_passes_lo:
      return 1;
    default:
      return -1;
  }
}

inline bool is_overtake(EventChoice c) {
  return c == EventChoice::hi_passes_lo || c == EventChoice::lo_passes_hi;
}

inline const char* event_name(EventChoice c) {
  switch (c) {
    case EventChoice::undecided: return "undecided";
    case EventChoice::lo_leads: return "lo_leads";
    case EventChoice::hi_leads: return "hi_leads";
    case EventChoice::hi_passes_lo: return "hi_passes_lo";
    case EventChoice::lo_passes_hi: return "lo_passes_hi";
  }
  return "?";
}

// Overlap permissions y per (ordered pair, station). y(f, g) may only be set
// under precedes(f, g) at a station with two or more tracks, and lets g enter
// before f has cleared the headway.
struct OverlapFlags {
  bool lo_hi = false;  // y(lo, hi)
  bool hi_lo = false;  // y(hi, lo)
};

struct LineAssignment {
  int train_count = 0;
  int station_count = 0;
  std::vector<EventChoice> choices;  // [pair * station_count + s]
  std::vector<OverlapFlags> overlaps;

  static LineAssignment undecided_for(const Line& line) {
    LineAssignment a;
    a.train_count = line.train_count();
    a.station_count = line.station_count();
    const size_t n = static_cast<size_t>(pair_count(a.train_count)) * a.station_count;
    a.choices.assign(n, EventChoice::undecided);
    a.overlaps.assign(n, OverlapFlags{});
    return a;
  }

  int slot(int pair, int s) const { return pair * station_count + s; }
  EventChoice choice(int pair, int s) const { return choices[slot(pair, s)]; }
  EventChoice& choice(int pair, int s) { return choices[slot(pair, s)]; }

  EventChoice choice_of(int a, int b, int s) const {
    return choices[slot(pair_index(a, b, train_count), s)];
  }
  void set(int a, int b, int s, EventChoice c) {
    choices[slot(pair_index(a, b, train_count), s)] = c;
  }
  // y(from, to): overlap permission for `to` entering while `from` occupies.
  bool overlap(int from, int to, int s) const {
    const OverlapFlags& f = overlaps[slot(pair_index(from, to, train_count), s)];
    return from < to ? f.lo_hi : f.hi_lo;
  }
  void set_overlap(int from, int to, int s, bool value) {
    OverlapFlags& f = overlaps[slot(pair_index(from, to, train_count), s)];
    (from < to ? f.lo_hi : f.hi_lo) = value;
  }

  bool complete() const {
    return std::none_of(choices.begin(), choices.end(),
                        [](EventChoice c) { return c == EventChoice::undecided; });
  }
};

struct EventAssignment {
  std::vector<LineAssignment> lines;

  static EventAssignment undecided_for(const Instance& instance) {
    EventAssignment a;
    a.lines.reserve(instance.lines.size());
    for (const Line& line : instance.lines) a.lines.push_back(LineAssignment::undecided_for(line));
    return a;
  }

  bool complete() const {
    return std::all_of(lines.begin(), lines.end(),
                       [](const LineAssignment& la) { return la.complete(); });
  }
};

// ---------------------------------------------------------------------------
// Fixed-variable mask: overtaking bans produced by the parameter rules, plus
// optional first-station precedence fixes from a dispatch order.
// ---------------------------------------------------------------------------

struct LineMask {
  int train_count = 0;
  int station_count = 0;
  // Bans per (pair, station): [0] forbids hi_passes_lo, [1] forbids lo_passes_hi.
  std::vector<std::array<bool, 2>> banned;
  // Fixed choice at station 0 per pair (undecided = free).
  std::vector<EventChoice> first_station_fix;

  static LineMask empty_for(const Line& line) {
    LineMask m;
    m.train_count = line.train_count();
    m.station_count = line.station_count();
    m.banned.assign(static_cast<size_t>(pair_count(m.train_count)) * m.station_count,
                    {false, false});
    m.first_station_fix.assign(pair_count(m.train_count), EventChoice::undecided);
    return m;
  }

  // Forbid `overtaker` passing `overtaken` at station s.
  void forbid(int overtaken, int overtaker, int s) {
    const int p = pair_index(overtaken, overtaker, train_count);
    banned[p * station_count + s][overtaken < overtaker ? 0 : 1] = true;
  }

  bool forbids(int overtaken, int overtaker, int s) const {
    const int p = pair_index(overtaken, overtaker, train_count);
    return banned[p * station_count + s][overtaken < overtaker ? 0 : 1];
  }

  bool forbids_choice(int pair, int s, EventChoice c) const {
    if (c == EventChoice::hi_passes_lo) return banned[pair * station_count + s][0];
    if (c == EventChoice::lo_passes_hi) return banned[pair * station_count + s][1];
    if (s == 0 && first_station_fix[pair] != EventChoice::undecided)
      return c != first_station_fix[pair];
    return false;
  }

  size_t ban_count() const {
    size_t n = 0;
    for (const auto& b : banned) n += (b[0] ? 1 : 0) + (b[1] ? 1 : 0);
    return n;
  }
};

struct FixedVariableMask {
  std::vector<LineMask> lines;

  static FixedVariableMask empty_for(const Instance& instance) {
    FixedVariableMask m;
    m.lines.reserve(instance.lines.size());
    for (const Line& line : instance.lines) m.lines.push_back(LineMask::empty_for(line));
    return m;
  }

  size_t ban_count() const {
    size_t n = 0;
    for (const auto& lm : lines) n += lm.ban_count();
    return n;
  }
};

// Applies dispatch orders of the instance as first-station precedence fixes.
inline void apply_dispatch_fixes(const Instance& instance, FixedVariableMask& mask) {
  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    if (!line.dispatch_order) continue;
    const auto& order = *line.dispatch_order;
    std::vector<int> rank(line.train_count(), 0);
    for (size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i);
    LineMask& lm = mask.lines[l];
    for (int a = 0; a < line.train_count(); ++a)
      for (int b = a + 1; b < line.train_count(); ++b)
        lm.first_station_fix[pair_index(a, b, line.train_count())] =
            rank[a] < rank[b] ? precedes(a, b) : precedes(b, a);
  }
}

// ---------------------------------------------------------------------------
// Structural checks
// ---------------------------------------------------------------------------

struct StructuralViolation {
  std::string kind;  // overtake_at_capacity_one, clique, budget, overlap_without_precede,
                     // overlap_at_capacity_one, fifo_linking, incomplete
  int line = 0;
  int station = 0;
  std::vector<int> trains;
  std::string detail;
};

namespace detail {

// True if the trains of `members` plus `extra` form a clique in the overtake
// graph strictly larger than `cap`.
inline bool find_clique_over(const std::vector<std::vector<bool>>& adj, std::vector<int>& members,
                             int next, int cap) {
  if (static_cast<int>(members.size()) > cap) return true;
  const int n = static_cast<int>(adj.size());
  for (int v = next; v < n; ++v) {
    bool connected = true;
    for (int m : members)
      if (!adj[m][v]) {
        connected = false;
        break;
      }
    if (!connected) continue;
    members.push_back(v);
    if (find_clique_over(adj, members, v + 1, cap)) return true;
    members.pop_back();
  }
  return false;
}

// Overtake adjacency at one station of a (possibly partial) assignment.
inline std::vector<std::vector<bool>> overtake_adjacency(const Line& line,
                                                         const LineAssignment& a, int s) {
  const int n = line.train_count();
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y)
      if (is_overtake(a.choice_of(x, y, s))) adj[x][y] = adj[y][x] = true;
  return adj;
}

}  // namespace detail

// Checks every structural invariant of an assignment; undecided entries are
// skipped except for the completeness report. Violations are data.
inline std::vector<StructuralViolation> check_assignment(const Instance& instance,
                                                         const EventAssignment& assignment,
                                                         bool report_incomplete = false) {
  std::vector<StructuralViolation> out;
  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    const LineAssignment& a = assignment.lines[l];
    const int n = line.train_count();
    const int m = line.station_count();
    for (int s = 0; s < m; ++s) {
      const int cap = line.stations[s].capacity;
      // Overtakes need a second track.
      for (int x = 0; x < n; ++x)
        for (int y = x + 1; y < n; ++y) {
          const EventChoice c = a.choice_of(x, y, s);
          if (cap == 1 && is_overtake(c))
            out.push_back({"overtake_at_capacity_one", l, s, {x, y}, event_name(c)});
        }
      // No clique of size cap+1 in the overtake graph.
      if (cap >= 1) {
        auto adj = detail::overtake_adjacency(line, a, s);
        std::vector<int> members;
        if (detail::find_clique_over(adj, members, 0, cap))
          out.push_back({"clique", l, s, members,
                         "overtake clique exceeds capacity " + std::to_string(cap)});
      }
      // Per-train budget: overlaps plus overtakes involving t, at most cap-1.
      for (int t = 0; t < n; ++t) {
        int used = 0;
        for (int o = 0; o < n; ++o) {
          if (o == t) continue;
          if (is_overtake(a.choice_of(t, o, s))) ++used;
          else if (a.overlap(t, o, s) || a.overlap(o, t, s)) ++used;
        }
        if (used > cap - 1)
          out.push_back({"budget", l, s, {t},
                         std::to_string(used) + " simultaneous partners, capacity " +
                             std::to_string(cap)});
      }
      // Overlap flags require the matching precedence and a second track.
      for (int f = 0; f < n; ++f)
        for (int g = 0; g < n; ++g) {
          if (f == g || !a.overlap(f, g, s)) continue;
          if (cap < 2) out.push_back({"overlap_at_capacity_one", l, s, {f, g}, ""});
          if (a.choice_of(f, g, s) != precedes(f, g))
            out.push_back({"overlap_without_precede", l, s, {f, g}, ""});
        }
    }
    // FIFO linking: departure order at s must equal arrival order at s+1.
    for (int s = 0; s + 1 < m; ++s)
      for (int p = 0; p < pair_count(n); ++p) {
        const EventChoice here = a.choice(p, s);
        const EventChoice next = a.choice(p, s + 1);
        if (here == EventChoice::undecided || next == EventChoice::undecided) continue;
        if (departure_leader(here) != arrival_leader(next)) {
          auto [x, y] = pair_trains(p, n);
          out.push_back({"fifo_linking", l, s, {x, y},
                         std::string(event_name(here)) + " then " + event_name(next)});
        }
      }
    if (report_incomplete)
      for (int p = 0; p < pair_count(n); ++p)
        for (int s = 0; s < m; ++s)
          if (a.choice(p, s) == EventChoice::undecided) {
            auto [x, y] = pair_trains(p, n);
            out.push_back({"incomplete", l, s, {x, y}, ""});
          }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inference from times
// ---------------------------------------------------------------------------

struct AmbiguousOrder : Error {
  using Error::Error;
};

namespace detail {

// Tie-tolerant event inference: equal times order by train index. Used by the
// audit; the public infer_assignment treats ties as errors.
inline EventChoice infer_choice(Seconds arr_a, Seconds dep_a, Seconds arr_b, Seconds dep_b) {
  const bool a_arrives_first = arr_a < arr_b || (arr_a == arr_b);
  const bool a_departs_first = dep_a < dep_b || (dep_a == dep_b);
  if (a_arrives_first && a_departs_first) return EventChoice::lo_leads;
  if (a_arrives_first) return EventChoice::hi_passes_lo;
  if (a_departs_first) return EventChoice::lo_passes_hi;
  return EventChoice::hi_leads;
}

}  // namespace detail

// Reads the event structure off a timetable. Coinciding arrivals or
// departures at a station are an error: with positive headways exact ties are
// never feasible, so a tie signals bad data rather than a real order.
inline EventAssignment infer_assignment(const Instance& instance, const Timetable& timetable) {
  EventAssignment assignment = EventAssignment::undecided_for(instance);
  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    const LineTimetable& lt = timetable.lines.at(l);
    LineAssignment& a = assignment.lines[l];
    for (int s = 0; s < line.station_count(); ++s) {
      const Seconds sf = line.stations[s].safety_time;
      for (int x = 0; x < line.train_count(); ++x)
        for (int y = x + 1; y < line.train_count(); ++y) {
          if (lt.arr(x, s) == lt.arr(y, s) || lt.dep(x, s) == lt.dep(y, s))
            throw AmbiguousOrder("trains " + std::to_string(x) + " and " + std::to_string(y) +
                                 " tie at line " + std::to_string(l) + " station " +
                                 std::to_string(s));
          const EventChoice c =
              detail::infer_choice(lt.arr(x, s), lt.dep(x, s), lt.arr(y, s), lt.dep(y, s));
          a.set(x, y, s, c);
          // Overlap permission is needed whenever the follower enters before
          // the leader's departure headway has elapsed.
          if (c == EventChoice::lo_leads && lt.arr(y, s) < lt.dep(x, s) + sf)
            a.set_overlap(x, y, s, true);
          if (c == EventChoice::hi_leads && lt.arr(x, s) < lt.dep(y, s) + sf)
            a.set_overlap(y, x, s, true);
        }
    }
  }
  return assignment;
}

// ---------------------------------------------------------------------------
// Branching support
// ---------------------------------------------------------------------------

// The four oriented choices for (pair, station) minus mask bans, minus
// overtakes the station cannot host, minus choices contradicting FIFO links
// with already-decided neighbor stations. An empty result marks the node as
// inconsistent (prunable).
inline std::vector<EventChoice> allowed_choices(const Line& line, const LineMask& mask, int pair,
                                                int s, const LineAssignment* assignment = nullptr) {
  static constexpr EventChoice kOrder[4] = {EventChoice::lo_leads, EventChoice::hi_leads,
                                            EventChoice::hi_passes_lo, EventChoice::lo_passes_hi};
  std::vector<EventChoice> out;
  out.reserve(4);
  const int cap = line.stations[s].capacity;
  for (EventChoice c : kOrder) {
    if (is_overtake(c) && cap < 2) continue;
    if (mask.forbids_choice(pair, s, c)) continue;
    if (assignment) {
      if (s > 0) {
        const EventChoice prev = assignment->choice(pair, s - 1);
        if (prev != EventChoice::undecided && departure_leader(prev) != arrival_leader(c))
          continue;
      }
      if (s + 1 < line.station_count()) {
        const EventChoice next = assignment->choice(pair, s + 1);
        if (next != EventChoice::undecided && departure_leader(c) != arrival_leader(next))
          continue;
      }
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace railsched
