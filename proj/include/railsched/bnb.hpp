#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <queue>
#include <thread>
#include <vector>

#include "railsched/audit.hpp"
#include "railsched/events.hpp"
#include "railsched/graph.hpp"
#include "railsched/rules.hpp"
#include "railsched/types.hpp"

// Exact branch-and-bound over event choices. A node is a partial assignment;
// its bound is the earliest schedule of the relaxed constraint graph. The
// search branches on the chronologically first (pair, station) whose relaxed
// times fit no allowed event, seeds its incumbent from the no-overtake
// timetable, and repairs overlap budgets lazily by revoking individual
// permissions. Lines never interact, so the instance is solved line by line.

namespace railsched {

constexpr Seconds kNoObjective = std::numeric_limits<Seconds>::max();

struct SolverConfig {
  std::int64_t node_budget = 0;  // 0 = unlimited
  double time_budget = 0;        // seconds, 0 = unlimited
  bool use_rules_mask = false;
  bool deterministic = true;  // forces a single worker
  double gap_tolerance = 0;   // 0 = prove optimality
  int workers = 1;
  std::int64_t enumeration_ceiling = 4000000;  // brute-force guard
};

enum class SolveStatus : std::uint8_t { optimal, budget_exhausted, infeasible };

inline const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::budget_exhausted: return "budget_exhausted";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "?";
}

struct GapSample {
  double time_s = 0;
  std::int64_t nodes = 0;
  Seconds ub = kNoObjective;
  Seconds lb = 0;
};

struct SearchStats {
  std::int64_t opened_nodes = 0;
  double wall_time = 0;
  std::vector<GapSample> gap_trace;
  SolveStatus status = SolveStatus::optimal;

  // CPU seconds per fathomed node; always derived, never stored.
  double xi() const { return opened_nodes > 0 ? wall_time / opened_nodes : 0.0; }
};

struct SolveResult {
  Seconds objective = kNoObjective;
  Timetable timetable;
  EventAssignment assignment;
  SearchStats stats;
};

struct TooLarge : Error {
  using Error::Error;
};

namespace bnbdetail {

using Clock = std::chrono::steady_clock;

inline double elapsed_s(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Node {
  LineAssignment assign;
  LineTimetable times;
  Seconds bound = 0;
  std::int64_t seq = 0;
  int undecided = 0;
};

struct HeapItem {
  Seconds bound;
  std::int64_t seq;
  std::shared_ptr<Node> node;
  bool operator>(const HeapItem& other) const {
    if (bound != other.bound) return bound > other.bound;
    return seq > other.seq;
  }
};

using NodeHeap = std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<HeapItem>>;

// Shared progress across all lines of one solve call, guarded by `mutex` when
// several workers run.
struct Progress {
  Clock::time_point t0 = Clock::now();
  std::int64_t node_budget = 0;
  double time_budget = 0;
  std::int64_t opened = 0;
  std::vector<Seconds> line_ub;  // kNoObjective until a line has an incumbent
  std::vector<Seconds> line_lb;
  std::vector<GapSample> trace;
  std::int64_t last_sampled = -64;

  bool budget_hit() const {
    if (node_budget > 0 && opened >= node_budget) return true;
    if (time_budget > 0 && elapsed_s(t0) > time_budget) return true;
    return false;
  }

  Seconds total_ub() const {
    Seconds sum = 0;
    for (Seconds v : line_ub) {
      if (v == kNoObjective) return kNoObjective;
      sum += v;
    }
    return sum;
  }

  Seconds total_lb() const {
    Seconds sum = 0;
    for (Seconds v : line_lb) sum += v;
    return sum;
  }

  void sample(bool force) {
    if (!force && opened - last_sampled < 64) return;
    last_sampled = opened;
    const Seconds ub = total_ub();
    const Seconds lb = total_lb();
    if (!trace.empty() && trace.back().nodes == opened && trace.back().ub == ub &&
        trace.back().lb == lb)
      return;
    trace.push_back({elapsed_s(t0), opened, ub, lb});
  }
};

// Do the relaxed times satisfy every arc the choice would add? Clearance at
// multi-track stations is waived: an undecided overlap defaults to permitted
// and gets revoked later if the budget cannot carry it.
inline bool times_admit(const Line& line, const LineTimetable& tt, int a, int b, int s,
                        EventChoice c) {
  const Seconds sf = line.stations[s].safety_time;
  const int f = arrival_leader(c) == 0 ? a : b;
  const int g = f == a ? b : a;
  if (tt.arr(g, s) < tt.arr(f, s) + sf) return false;
  if (is_overtake(c)) return tt.dep(f, s) >= tt.dep(g, s) + sf;
  if (tt.dep(g, s) < tt.dep(f, s) + sf) return false;
  if (line.stations[s].capacity < 2 && tt.arr(g, s) < tt.dep(f, s) + sf) return false;
  return true;
}

// Overtake degree of train t at station s.
inline int x_degree(const Line& line, const LineAssignment& a, int t, int s) {
  int deg = 0;
  for (int o = 0; o < line.train_count(); ++o)
    if (o != t && is_overtake(a.choice_of(t, o, s))) ++deg;
  return deg;
}

inline bool overtake_fits(const Line& line, const LineAssignment& a, int x, int y, int s) {
  const int cap = line.stations[s].capacity;
  if (x_degree(line, a, x, s) > cap - 1 || x_degree(line, a, y, s) > cap - 1) return false;
  auto adj = detail::overtake_adjacency(line, a, s);
  std::vector<int> members;
  return !detail::find_clique_over(adj, members, 0, cap);
}

struct OverlapNeed {
  int leader;
  int follower;
  int station;
};

// Overlap permissions the schedule actually uses, and per-(train, station)
// occupancy counts including overtakes.
inline std::vector<OverlapNeed> needed_overlaps(const Line& line, const LineAssignment& a,
                                                const LineTimetable& tt) {
  std::vector<OverlapNeed> needs;
  for (int s = 0; s < line.station_count(); ++s) {
    if (line.stations[s].capacity < 2) continue;
    const Seconds sf = line.stations[s].safety_time;
    for (int x = 0; x < line.train_count(); ++x)
      for (int y = x + 1; y < line.train_count(); ++y) {
        const EventChoice c = a.choice_of(x, y, s);
        if (c != EventChoice::lo_leads && c != EventChoice::hi_leads) continue;
        const int f = arrival_leader(c) == 0 ? x : y;
        const int g = f == x ? y : x;
        if (a.overlap(f, g, s) && tt.arr(g, s) < tt.dep(f, s) + sf)
          needs.push_back({f, g, s});
      }
  }
  return needs;
}

// First (train, station) whose budget the needed overlaps plus overtakes
// exceed, or {-1, -1}.
inline std::pair<int, int> budget_violation(const Line& line, const LineAssignment& a,
                                            const std::vector<OverlapNeed>& needs) {
  for (int s = 0; s < line.station_count(); ++s) {
    const int cap = line.stations[s].capacity;
    for (int t = 0; t < line.train_count(); ++t) {
      int used = x_degree(line, a, t, s);
      for (const OverlapNeed& n : needs)
        if (n.station == s && (n.leader == t || n.follower == t)) ++used;
      if (used > cap - 1) return {t, s};
    }
  }
  return {-1, -1};
}

// Strips overlap permissions the schedule does not use, so reported
// assignments carry the minimal set.
inline void minimize_overlaps(const Line& line, LineAssignment& a, const LineTimetable& tt) {
  auto needs = needed_overlaps(line, a, tt);
  for (auto& f : a.overlaps) f = OverlapFlags{};
  for (const OverlapNeed& n : needs) a.set_overlap(n.leader, n.follower, n.station, true);
}

class LineSearch {
 public:
  LineSearch(const Line& line, const LineMask& mask, const SolverConfig& config,
             Progress& progress, int line_index, std::mutex& mutex)
      : line_(line),
        mask_(mask),
        config_(config),
        progress_(progress),
        line_index_(line_index),
        mutex_(mutex) {
    sub_.lines.push_back(line);
    pairs_ = pair_count(line.train_count());
    stations_ = line.station_count();
  }

  SolveStatus run(Seconds seed_obj, const LineAssignment* seed_assign, const Timetable* seed_tt) {
    if (seed_assign) {
      best_obj_ = seed_obj;
      best_assign_ = *seed_assign;
      best_times_ = seed_tt->lines[0];
      minimize_overlaps(line_, best_assign_, best_times_);
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      progress_.line_ub[line_index_] = best_obj_;
    }

    auto root = std::make_shared<Node>();
    root->assign = LineAssignment::undecided_for(line_);
    root->undecided = pairs_ * stations_;
    if (!evaluate(*root)) {
      // Even the fully relaxed graph has a positive cycle: per-train bounds
      // are contradictory and no completion exists either.
      return best_obj_ == kNoObjective ? SolveStatus::infeasible : SolveStatus::optimal;
    }
    if (pairs_ == 0) {
      // No interactions: the root relaxation is the schedule.
      std::lock_guard<std::mutex> lock(mutex_);
      ++progress_.opened;
      best_obj_ = root->bound;
      best_assign_ = root->assign;
      best_times_ = root->times;
      progress_.line_ub[line_index_] = best_obj_;
      progress_.line_lb[line_index_] = best_obj_;
      progress_.sample(true);
      return SolveStatus::optimal;
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      progress_.line_lb[line_index_] = root->bound;
      heap_.push({root->bound, next_seq_++, root});
      progress_.sample(true);
    }

    const int worker_count = config_.deterministic ? 1 : std::max(1, config_.workers);
    if (worker_count == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(worker_count);
      for (int i = 0; i < worker_count; ++i) pool.emplace_back([this] { worker(); });
      for (auto& th : pool) th.join();
    }

    std::lock_guard<std::mutex> lock(mutex_);
    if (stopped_early_) return SolveStatus::budget_exhausted;
    progress_.line_lb[line_index_] =
        best_obj_ == kNoObjective ? progress_.line_lb[line_index_] : best_obj_;
    progress_.sample(true);
    return best_obj_ == kNoObjective ? SolveStatus::infeasible : SolveStatus::optimal;
  }

  Seconds best_objective() const { return best_obj_; }
  const LineAssignment& best_assignment() const { return best_assign_; }
  const LineTimetable& best_times() const { return best_times_; }

 private:
  // Relaxed schedule and bound; false when the node's graph has a positive
  // cycle.
  bool evaluate(Node& node) {
    EventAssignment wrap;
    wrap.lines.push_back(node.assign);
    ScheduleResult r = earliest_schedule(sub_, wrap);
    if (!r.feasible()) return false;
    node.times = std::move(r.timetable->lines[0]);
    node.bound = 0;
    for (int t = 0; t < line_.train_count(); ++t)
      node.bound += node.times.dep(t, line_.last_station());
    return true;
  }

  void worker() {
    for (;;) {
      std::shared_ptr<Node> node;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        idle_.wait(lock, [this] {
          return stop_ || !heap_.empty() || active_ == 0;
        });
        if (stop_ || (heap_.empty() && active_ == 0)) return;
        if (heap_.empty()) continue;
        if (progress_.budget_hit()) {
          stopped_early_ = true;
          stop_ = true;
          idle_.notify_all();
          return;
        }
        HeapItem item = heap_.top();
        heap_.pop();
        node = item.node;
        if (node->bound >= prune_cutoff()) {
          // Best-first order makes every remaining node at least this bad.
          heap_ = NodeHeap();
          progress_.line_lb[line_index_] = best_obj_;
          progress_.sample(true);
          idle_.notify_all();
          continue;
        }
        ++active_;
        ++progress_.opened;
        if (node->bound > progress_.line_lb[line_index_]) {
          progress_.line_lb[line_index_] = node->bound;
          progress_.sample(true);
        } else {
          progress_.sample(false);
        }
      }
      process(*node);
      {
        std::lock_guard<std::mutex> lock(mutex_);
        --active_;
      }
      idle_.notify_all();
    }
  }

  Seconds prune_cutoff() const {
    if (best_obj_ == kNoObjective) return kNoObjective;
    if (config_.gap_tolerance > 0) {
      const double scaled = static_cast<double>(best_obj_) * (1.0 - config_.gap_tolerance);
      return static_cast<Seconds>(scaled);
    }
    return best_obj_;
  }

  struct Conflict {
    Seconds time;
    int station;
    int pair;
    std::vector<EventChoice> allowed;
  };

  void process(const Node& node) {
    std::vector<Conflict> conflicts;
    bool dead = false;
    for (int s = 0; s < stations_ && !dead; ++s)
      for (int p = 0; p < pairs_; ++p) {
        if (node.assign.choice(p, s) != EventChoice::undecided) continue;
        auto [a, b] = pair_trains(p, line_.train_count());
        auto allowed = allowed_choices(line_, mask_, p, s, &node.assign);
        if (allowed.empty()) {
          dead = true;  // inconsistent mask/FIFO state, no completion exists
          break;
        }
        bool satisfied = false;
        for (EventChoice c : allowed)
          if (times_admit(line_, node.times, a, b, s, c)) {
            satisfied = true;
            break;
          }
        if (!satisfied)
          conflicts.push_back(
              {std::min(node.times.arr(a, s), node.times.arr(b, s)), s, p, std::move(allowed)});
      }
    if (dead) return;

    if (conflicts.empty()) {
      if (node.undecided == 0) {
        finish_complete(node);
      } else {
        try_induced_completion(node);
      }
      return;
    }

    const Conflict* pick = &conflicts.front();
    for (const Conflict& c : conflicts) {
      if (c.time < pick->time ||
          (c.time == pick->time &&
           (c.station < pick->station ||
            (c.station == pick->station && c.pair < pick->pair))))
        pick = &c;
    }
    branch_on_choices(node, pick->pair, pick->station, pick->allowed);
  }

  void branch_on_choices(const Node& node, int pair, int s,
                         const std::vector<EventChoice>& allowed) {
    auto [a, b] = pair_trains(pair, line_.train_count());
    for (EventChoice c : allowed) {
      auto child = std::make_shared<Node>();
      child->assign = node.assign;
      child->assign.choice(pair, s) = c;
      child->undecided = node.undecided - 1;
      if (is_overtake(c)) {
        if (!overtake_fits(line_, child->assign, a, b, s)) continue;
      } else if (line_.stations[s].capacity >= 2) {
        const int f = arrival_leader(c) == 0 ? a : b;
        child->assign.set_overlap(f, f == a ? b : a, s, true);
      }
      push_child(std::move(child));
    }
  }

  void push_child(std::shared_ptr<Node> child) {
    if (!evaluate(*child)) return;
    std::lock_guard<std::mutex> lock(mutex_);
    if (child->bound >= prune_cutoff()) return;
    heap_.push({child->bound, next_seq_++, std::move(child)});
    idle_.notify_all();
  }

  // Complete assignment: either the overlap budget carries the schedule and
  // the node is a feasible leaf, or we branch on revoking one needed
  // permission at the first overloaded (train, station).
  void finish_complete(const Node& node) {
    auto needs = needed_overlaps(line_, node.assign, node.times);
    auto [t, s] = budget_violation(line_, node.assign, needs);
    if (t < 0) {
      record_incumbent(node.assign, node.times, node.bound);
      return;
    }
    for (const OverlapNeed& n : needs) {
      if (n.station != s || (n.leader != t && n.follower != t)) continue;
      auto child = std::make_shared<Node>();
      child->assign = node.assign;
      child->assign.set_overlap(n.leader, n.follower, n.station, false);
      child->undecided = 0;
      push_child(std::move(child));
    }
  }

  // Conflict-free relaxation of an incomplete node: the relaxed times already
  // satisfy some allowed event everywhere, so try to read a completion off
  // them. When the induced completion holds together the relaxation is
  // feasible and optimal for this subtree.
  void try_induced_completion(const Node& node) {
    LineAssignment induced = node.assign;
    for (int s = 0; s < stations_; ++s)
      for (int p = 0; p < pairs_; ++p) {
        if (induced.choice(p, s) != EventChoice::undecided) continue;
        auto [a, b] = pair_trains(p, line_.train_count());
        EventChoice chosen = EventChoice::undecided;
        for (EventChoice c : allowed_choices(line_, mask_, p, s, &node.assign))
          if (times_admit(line_, node.times, a, b, s, c)) {
            chosen = c;
            break;
          }
        if (chosen == EventChoice::undecided) return fallback_branch(node);
        induced.choice(p, s) = chosen;
        if (!is_overtake(chosen) && line_.stations[s].capacity >= 2) {
          const int f = arrival_leader(chosen) == 0 ? a : b;
          induced.set_overlap(f, f == a ? b : a, s, true);
        }
      }
    // FIFO consistency between induced neighbors, overtake structure, budget.
    for (int p = 0; p < pairs_; ++p)
      for (int s = 0; s + 1 < stations_; ++s)
        if (departure_leader(induced.choice(p, s)) != arrival_leader(induced.choice(p, s + 1)))
          return fallback_branch(node);
    for (int s = 0; s < stations_; ++s) {
      auto adj = detail::overtake_adjacency(line_, induced, s);
      std::vector<int> members;
      if (detail::find_clique_over(adj, members, 0, line_.stations[s].capacity))
        return fallback_branch(node);
      for (int t = 0; t < line_.train_count(); ++t)
        if (x_degree(line_, induced, t, s) > line_.stations[s].capacity - 1)
          return fallback_branch(node);
    }
    auto needs = needed_overlaps(line_, induced, node.times);
    if (budget_violation(line_, induced, needs).first >= 0) return fallback_branch(node);
    record_incumbent(induced, node.times, node.bound);
  }

  // Times fit everywhere individually but refuse to stitch into one
  // completion (exact ties, overlap budgets). Branch on the chronologically
  // first undecided slot to keep the search moving.
  void fallback_branch(const Node& node) {
    Seconds best_time = 0;
    int bp = -1, bs = -1;
    for (int s = 0; s < stations_; ++s)
      for (int p = 0; p < pairs_; ++p) {
        if (node.assign.choice(p, s) != EventChoice::undecided) continue;
        auto [a, b] = pair_trains(p, line_.train_count());
        const Seconds when = std::min(node.times.arr(a, s), node.times.arr(b, s));
        if (bp < 0 || when < best_time) {
          best_time = when;
          bp = p;
          bs = s;
        }
      }
    if (bp < 0) return;
    branch_on_choices(node, bp, bs, allowed_choices(line_, mask_, bp, bs, &node.assign));
  }

  void record_incumbent(LineAssignment assign, const LineTimetable& times, Seconds value) {
    minimize_overlaps(line_, assign, times);
    std::lock_guard<std::mutex> lock(mutex_);
    if (value >= best_obj_) return;
    best_obj_ = value;
    best_assign_ = std::move(assign);
    best_times_ = times;
    progress_.line_ub[line_index_] = value;
    progress_.sample(true);
  }

  const Line& line_;
  const LineMask& mask_;
  const SolverConfig& config_;
  Progress& progress_;
  int line_index_;
  std::mutex& mutex_;
  Instance sub_;
  int pairs_ = 0;
  int stations_ = 0;

  NodeHeap heap_;
  std::int64_t next_seq_ = 0;
  std::condition_variable idle_;
  int active_ = 0;
  bool stop_ = false;
  bool stopped_early_ = false;

  Seconds best_obj_ = kNoObjective;
  LineAssignment best_assign_;
  LineTimetable best_times_;
};

}  // namespace bnbdetail

// Exact solve. With unlimited budgets and zero gap tolerance the result is a
// proven optimum; on budget exhaustion the best incumbent and the proven
// lower bound (last gap_trace entry) come back with budget_exhausted status.
inline SolveResult solve(const Instance& instance, const FixedVariableMask& mask,
                         const SolverConfig& config = {}) {
  using namespace bnbdetail;
  SolveResult result;
  result.assignment = EventAssignment::undecided_for(instance);
  result.timetable = Timetable::sized_for(instance);

  std::mutex mutex;
  Progress progress;
  progress.node_budget = config.node_budget;
  progress.time_budget = config.time_budget;
  progress.line_ub.assign(instance.lines.size(), kNoObjective);
  progress.line_lb.assign(instance.lines.size(), 0);

  // Incumbent seed per line.
  std::vector<Seconds> seed_obj(instance.lines.size(), kNoObjective);
  std::vector<LineAssignment> seed_assign(instance.lines.size());
  std::vector<Timetable> seed_tt(instance.lines.size());
  for (size_t l = 0; l < instance.lines.size(); ++l) {
    Instance sub;
    sub.lines.push_back(instance.lines[l]);
    try {
      auto [tt, assign] = lexicographic_timetable(sub);
      seed_obj[l] = objective(sub, tt);
      seed_assign[l] = assign.lines[0];
      seed_tt[l] = std::move(tt);
    } catch (const InfeasibleTotalOrder&) {
      // No seed; search still proves feasibility or its absence.
    }
    progress.line_ub[l] = seed_obj[l];
  }

  SolveStatus status = SolveStatus::optimal;
  result.objective = 0;
  for (size_t l = 0; l < instance.lines.size(); ++l) {
    LineSearch search(instance.lines[l], mask.lines[l], config, progress, static_cast<int>(l),
                      mutex);
    const SolveStatus line_status =
        search.run(seed_obj[l], seed_obj[l] == kNoObjective ? nullptr : &seed_assign[l],
                   seed_obj[l] == kNoObjective ? nullptr : &seed_tt[l]);
    if (line_status == SolveStatus::infeasible) {
      status = SolveStatus::infeasible;
      result.objective = kNoObjective;
      break;
    }
    if (line_status == SolveStatus::budget_exhausted) status = SolveStatus::budget_exhausted;
    if (search.best_objective() == kNoObjective) {
      result.objective = kNoObjective;
      if (status != SolveStatus::budget_exhausted) status = SolveStatus::infeasible;
      break;
    }
    result.objective += search.best_objective();
    result.assignment.lines[l] = search.best_assignment();
    result.timetable.lines[l] = search.best_times();
  }

  result.stats.opened_nodes = progress.opened;
  result.stats.wall_time = elapsed_s(progress.t0);
  result.stats.gap_trace = std::move(progress.trace);
  result.stats.status = status;
  return result;
}

inline SolveResult solve(const Instance& instance, const SolverConfig& config = {}) {
  FixedVariableMask mask =
      config.use_rules_mask ? apply_rules(instance) : FixedVariableMask::empty_for(instance);
  if (!config.use_rules_mask) apply_dispatch_fixes(instance, mask);
  return solve(instance, mask, config);
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

namespace bnbdetail {

// All FIFO-consistent event chains of one pair over the stations.
inline std::vector<std::vector<EventChoice>> pair_chains(const Line& line, const LineMask& mask,
                                                         int pair) {
  std::vector<std::vector<EventChoice>> done;
  std::vector<std::pair<std::vector<EventChoice>, int>> frontier;
  for (EventChoice c : allowed_choices(line, mask, pair, 0))
    frontier.push_back({{c}, departure_leader(c)});
  for (int s = 1; s < line.station_count(); ++s) {
    std::vector<std::pair<std::vector<EventChoice>, int>> next;
    for (auto& [chain, leader] : frontier) {
      for (EventChoice c : allowed_choices(line, mask, pair, s)) {
        if (arrival_leader(c) != leader) continue;
        auto extended = chain;
        extended.push_back(c);
        next.push_back({std::move(extended), departure_leader(c)});
      }
    }
    frontier = std::move(next);
  }
  done.reserve(frontier.size());
  for (auto& [chain, leader] : frontier) done.push_back(std::move(chain));
  return done;
}

struct BruteBest {
  Seconds objective = kNoObjective;
  LineAssignment assign;
  LineTimetable times;
  std::int64_t evaluated = 0;
};

inline void brute_evaluate(const Instance& sub, const Line& line, LineAssignment& assign,
                           BruteBest& best) {
  // Structure first: overtake degrees and cliques.
  for (int s = 0; s < line.station_count(); ++s) {
    const int cap = line.stations[s].capacity;
    for (int t = 0; t < line.train_count(); ++t)
      if (x_degree(line, assign, t, s) > cap - 1) return;
    auto adj = detail::overtake_adjacency(line, assign, s);
    std::vector<int> members;
    if (detail::find_clique_over(adj, members, 0, cap)) return;
  }

  // Overlap flags: start from the maximal grant. Its schedule is the best
  // possible, so when the budget carries it nothing else needs a look;
  // otherwise walk the feasible revocation subsets of the offending flags.
  std::vector<OverlapNeed> grantable;
  for (int s = 0; s < line.station_count(); ++s) {
    if (line.stations[s].capacity < 2) continue;
    for (int x = 0; x < line.train_count(); ++x)
      for (int y = x + 1; y < line.train_count(); ++y) {
        const EventChoice c = assign.choice_of(x, y, s);
        if (c != EventChoice::lo_leads && c != EventChoice::hi_leads) continue;
        const int f = arrival_leader(c) == 0 ? x : y;
        grantable.push_back({f, f == x ? y : x, s});
      }
  }

  // Returns true when the current overlap grant was rejected only by the
  // budget (feasible times, too many simultaneous partners somewhere).
  auto evaluate_current = [&]() {
    EventAssignment wrap;
    wrap.lines.push_back(assign);
    ScheduleResult r = earliest_schedule(sub, wrap);
    ++best.evaluated;
    if (!r.feasible()) return false;
    const LineTimetable& lt = r.timetable->lines[0];
    auto needs = needed_overlaps(line, assign, lt);
    if (budget_violation(line, assign, needs).first >= 0) return true;
    Seconds obj = 0;
    for (int t = 0; t < line.train_count(); ++t) obj += lt.dep(t, line.last_station());
    if (obj < best.objective) {
      best.objective = obj;
      best.assign = assign;
      minimize_overlaps(line, best.assign, lt);
      best.times = lt;
    }
    return false;
  };

  for (const OverlapNeed& n : grantable) assign.set_overlap(n.leader, n.follower, n.station, true);
  const bool over_budget = evaluate_current();

  // The maximal grant schedules earliest; only a budget rejection makes the
  // revocation subsets worth walking.
  if (over_budget) {
    if (grantable.size() > 20)
      throw TooLarge("overlap revocation enumeration beyond 2^20 subsets");
    const size_t k = grantable.size();
    for (size_t bits = 1; bits < (size_t{1} << k); ++bits) {
      for (size_t i = 0; i < k; ++i)
        assign.set_overlap(grantable[i].leader, grantable[i].follower, grantable[i].station,
                           (bits & (size_t{1} << i)) == 0);
      evaluate_current();
    }
  }
  for (const OverlapNeed& n : grantable) assign.set_overlap(n.leader, n.follower, n.station, false);
}

}  // namespace bnbdetail

// Exhaustive oracle for tiny instances: enumerates every FIFO-consistent
// complete assignment (and, per assignment, the budget-feasible overlap
// grants), evaluating each through the exact schedule. Guarded by an
// enumeration ceiling.
inline SolveResult brute_force_optimum(const Instance& instance, const SolverConfig& config = {}) {
  using namespace bnbdetail;
  const auto t0 = Clock::now();
  SolveResult result;
  result.assignment = EventAssignment::undecided_for(instance);
  result.timetable = Timetable::sized_for(instance);
  result.objective = 0;

  FixedVariableMask no_mask = FixedVariableMask::empty_for(instance);
  apply_dispatch_fixes(instance, no_mask);

  for (size_t l = 0; l < instance.lines.size(); ++l) {
    const Line& line = instance.lines[l];
    Instance sub;
    sub.lines.push_back(line);

    const int pairs = pair_count(line.train_count());
    std::vector<std::vector<std::vector<EventChoice>>> chains(pairs);
    double combos = 1;
    for (int p = 0; p < pairs; ++p) {
      chains[p] = pair_chains(line, no_mask.lines[l], p);
      combos *= std::max<size_t>(chains[p].size(), 1);
      if (combos > static_cast<double>(config.enumeration_ceiling))
        throw TooLarge("assignment enumeration exceeds the configured ceiling");
    }

    BruteBest best;
    LineAssignment assign = LineAssignment::undecided_for(line);
    if (pairs == 0) {
      brute_evaluate(sub, line, assign, best);
    } else {
      std::vector<size_t> pickindex(pairs, 0);
      // Odometer over per-pair chains.
      bool exhausted = false;
      while (!exhausted) {
        bool viable = true;
        for (int p = 0; p < pairs && viable; ++p) {
          if (chains[p].empty()) {
            viable = false;
            exhausted = true;
            break;
          }
          const auto& chain = chains[p][pickindex[p]];
          for (int s = 0; s < line.station_count(); ++s) assign.choice(p, s) = chain[s];
        }
        if (!viable) break;
        brute_evaluate(sub, line, assign, best);
        int p = pairs - 1;
        while (p >= 0 && ++pickindex[p] == chains[p].size()) {
          pickindex[p] = 0;
          --p;
        }
        if (p < 0) exhausted = true;
      }
    }

    result.stats.opened_nodes += best.evaluated;
    if (best.objective == kNoObjective) {
      result.objective = kNoObjective;
      result.stats.status = SolveStatus::infeasible;
      result.stats.wall_time = elapsed_s(t0);
      return result;
    }
    result.objective += best.objective;
    result.assignment.lines[l] = std::move(best.assign);
    result.timetable.lines[l] = std::move(best.times);
  }

  result.stats.status = SolveStatus::optimal;
  result.stats.wall_time = elapsed_s(t0);
  return result;
}

}  // namespace railsched
