#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "railsched/audit.hpp"
#include "railsched/bnb.hpp"
#include "railsched/graph.hpp"
#include "railsched/rules.hpp"
#include "railsched/types.hpp"

// Lagrangian lower bounds. The partition constraint — exactly one event per
// (pair, station) — moves into the objective with one multiplier per relaxed
// constraint. The subproblem then minimizes over times and over the four
// event flags independently (each may be on or off, all other constraints
// retained) and is solved by a small branch-and-bound of its own. The
// subgradient loop updates the multipliers with Polyak steps against the
// 1.05-scaled no-overtake upper bound and halves the step parameter whenever
// the bound stalls.

namespace railsched {

// Interaction-free bound: the earliest schedule with every pair undecided.
// Only travel, dwell and release constraints bind.
inline Seconds rmip_bound(const Instance& instance) {
  EventAssignment none = EventAssignment::undecided_for(instance);
  ScheduleResult r = earliest_schedule(instance, none);
  if (!r.feasible())
    throw Error("per-train bounds admit no schedule; instance is infeasible outright");
  return objective(instance, *r.timetable);
}

// One relaxed constraint per unordered pair per station, flattened line-major.
inline int lr_constraint_count(const Instance& instance) {
  int n = 0;
  for (const Line& line : instance.lines)
    n += pair_count(line.train_count()) * line.station_count();
  return n;
}

struct LrConfig {
  int max_iterations = 100;          // hard stop; experiments usually cap at 25
  double multiplier_stop = 0.005;    // stop when no multiplier moves more than this
  double ub_factor = 1.05;
  double theta_init = 2.0;
  std::int64_t subproblem_node_budget = 50000;
};

struct LrSubproblemResult {
  double value = 0;      // penalized objective of the returned flag solution
  double proven_lb = 0;  // valid lower bound on the exact subproblem minimum
  bool exact = true;
  std::vector<int> gamma;  // per relaxed constraint: (sum of its flags) - 1
  Timetable times;
  std::vector<std::vector<std::uint8_t>> flags;  // per line, per slot: bitmask of set flags
};

namespace lrdetail {

// Flag bit i corresponds to EventChoice(i + 1).
constexpr std::uint8_t kUnset = 0xFF;

inline int popcount4(std::uint8_t mask) {
  return ((mask >> 0) & 1) + ((mask >> 1) & 1) + ((mask >> 2) & 1) + ((mask >> 3) & 1);
}

inline bool has_flag(std::uint8_t mask, EventChoice c) {
  return mask != kUnset && (mask >> (static_cast<int>(c) - 1)) & 1;
}

struct SubNode {
  std::vector<std::uint8_t> slots;
  std::vector<OverlapFlags> revoked;  // y permissions withdrawn by budget repair
  double bound = 0;
  double value_at_leaf = 0;  // exact penalized value once every slot is set
  Seconds schedule_obj = 0;
  std::int64_t seq = 0;
  LineTimetable times;
  bool complete = false;
};

struct SubHeapItem {
  double bound;
  std::int64_t seq;
  std::shared_ptr<SubNode> node;
  bool operator>(const SubHeapItem& o) const {
    if (bound != o.bound) return bound > o.bound;
    return seq > o.seq;
  }
};

// Per-line subproblem search state.
class SubproblemSearch {
 public:
  SubproblemSearch(const Line& line, const std::vector<double>& u, std::int64_t node_budget)
      : line_(line), u_(u), node_budget_(node_budget) {
    sub_.lines.push_back(line);
    pairs_ = pair_count(line.train_count());
    stations_ = line.station_count();
    slots_ = pairs_ * stations_;
  }

  struct Outcome {
    double value = 0;
    double proven_lb = 0;
    bool exact = true;
    std::vector<std::uint8_t> flags;
    std::vector<int> gamma;  // per slot
    LineTimetable times;
    std::int64_t opened = 0;
  };

  Outcome run() {
    // Seed: every flag off. Always feasible, value = line RMIP plus the full
    // penalty for leaving all partitions unsatisfied.
    auto seed = std::make_shared<SubNode>();
    seed->slots.assign(slots_, 0);
    seed->revoked.assign(slots_, OverlapFlags{});
    if (!evaluate(*seed)) throw Error("per-train bounds admit no schedule");
    best_value_ = seed->value_at_leaf;
    best_ = seed;

    auto root = std::make_shared<SubNode>();
    root->slots.assign(slots_, kUnset);
    root->revoked.assign(slots_, OverlapFlags{});
    if (evaluate(*root)) heap_.push({root->bound, next_seq_++, root});

    bool exhausted_clean = true;
    while (!heap_.empty()) {
      if (node_budget_ > 0 && opened_ >= node_budget_) {
        exhausted_clean = false;
        break;
      }
      SubHeapItem item = heap_.top();
      heap_.pop();
      if (item.bound >= best_value_) {
        heap_ = {};
        break;
      }
      ++opened_;
      process(*item.node);
    }

    Outcome out;
    out.value = best_value_;
    out.proven_lb = best_value_;
    if (!exhausted_clean && !heap_.empty())
      out.proven_lb = std::min(best_value_, heap_.top().bound);
    out.exact = exhausted_clean;
    out.opened = opened_;
    out.flags = best_->slots;
    out.times = best_->times;
    out.gamma.resize(slots_);
    for (int i = 0; i < slots_; ++i) out.gamma[i] = popcount4(best_->slots[i]) - 1;
    return out;
  }

 private:
  double penalty_decided(int slot, std::uint8_t mask) const {
    return u_[slot] * (popcount4(mask) - 1);
  }

  double penalty_unset(int slot, int s) const {
    const int sigma_max = line_.stations[s].safety_time > 0 ? 1 : 4;
    // u * (sigma - 1) is linear in sigma; extremes suffice.
    return std::min(u_[slot] * (0 - 1), u_[slot] * (sigma_max - 1));
  }

  // Bound + relaxed schedule. False on a positive cycle.
  bool evaluate(SubNode& node) {
    ConstraintGraph g = detail::graph_skeleton(sub_);
    for (int p = 0; p < pairs_; ++p) {
      auto [a, b] = pair_trains(p, line_.train_count());
      for (int s = 0; s < stations_; ++s) {
        const std::uint8_t mask = node.slots[p * stations_ + s];
        if (mask == kUnset || mask == 0) continue;
        const Seconds sf = line_.stations[s].safety_time;
        const int cap = line_.stations[s].capacity;
        for (int bit = 0; bit < 4; ++bit) {
          if (!((mask >> bit) & 1)) continue;
          const EventChoice c = static_cast<EventChoice>(bit + 1);
          const int f = arrival_leader(c) == 0 ? a : b;
          const int g2 = f == a ? b : a;
          const OverlapFlags& rev = node.revoked[p * stations_ + s];
          const bool y_granted =
              !is_overtake(c) && cap >= 2 && !(f < g2 ? rev.lo_hi : rev.hi_lo);
          detail::emit_event_arcs(g, 0, f, g2, s, c, sf, cap, y_granted);
        }
      }
    }
    ScheduleResult r = earliest_schedule(g, sub_);
    if (!r.feasible()) return false;
    node.times = std::move(r.timetable->lines[0]);
    node.schedule_obj = 0;
    for (int t = 0; t < line_.train_count(); ++t)
      node.schedule_obj += node.times.dep(t, line_.last_station());
    node.bound = static_cast<double>(node.schedule_obj);
    node.complete = true;
    for (int p = 0; p < pairs_; ++p)
      for (int s = 0; s < stations_; ++s) {
        const int slot = p * stations_ + s;
        if (node.slots[slot] == kUnset) {
          node.bound += penalty_unset(slot, s);
          node.complete = false;
        } else {
          node.bound += penalty_decided(slot, node.slots[slot]);
        }
      }
    if (node.complete) node.value_at_leaf = node.bound;
    return true;
  }

  // FIFO linking on flags, monotone for partial assignments: a departure
  // order fixed at s forces a matching arrival flag at s+1.
  bool fifo_consistent(const std::vector<std::uint8_t>& slots) const {
    for (int p = 0; p < pairs_; ++p)
      for (int s = 0; s + 1 < stations_; ++s) {
        const std::uint8_t here = slots[p * stations_ + s];
        const std::uint8_t next = slots[p * stations_ + s + 1];
        // Ordered (lo, hi): lhs = x'(lo,hi) + x(hi,lo); rhs = x'(lo,hi) + x(lo,hi).
        for (int dir = 0; dir < 2; ++dir) {
          const EventChoice lead = dir == 0 ? EventChoice::lo_leads : EventChoice::hi_leads;
          const EventChoice pass_back =
              dir == 0 ? EventChoice::lo_passes_hi : EventChoice::hi_passes_lo;
          const EventChoice pass_fwd =
              dir == 0 ? EventChoice::hi_passes_lo : EventChoice::lo_passes_hi;
          const int lhs_min =
              here == kUnset ? 0 : (has_flag(here, lead) ? 1 : 0) + (has_flag(here, pass_back) ? 1 : 0);
          int rhs_max;
          if (next == kUnset) {
            rhs_max = line_.stations[s + 1].safety_time > 0 ? 1 : 2;
          } else {
            rhs_max = (has_flag(next, lead) ? 1 : 0) + (has_flag(next, pass_fwd) ? 1 : 0);
          }
          if (lhs_min > rhs_max) return false;
        }
      }
    return true;
  }

  // Overtake-orientation count of train t at station s (both directions of a
  // pair count separately, as the budget constraint sums them).
  int x_count(const std::vector<std::uint8_t>& slots, int t, int s) const {
    int c = 0;
    for (int o = 0; o < line_.train_count(); ++o) {
      if (o == t) continue;
      const std::uint8_t mask = slots[pair_index(t, o, line_.train_count()) * stations_ + s];
      if (mask == kUnset) continue;
      if (has_flag(mask, EventChoice::hi_passes_lo)) ++c;
      if (has_flag(mask, EventChoice::lo_passes_hi)) ++c;
    }
    return c;
  }

  bool structure_ok(const std::vector<std::uint8_t>& slots) const {
    if (!fifo_consistent(slots)) return false;
    for (int s = 0; s < stations_; ++s) {
      const int cap = line_.stations[s].capacity;
      for (int t = 0; t < line_.train_count(); ++t)
        if (x_count(slots, t, s) > cap - 1) return false;
      std::vector<std::vector<bool>> adj(line_.train_count(),
                                         std::vector<bool>(line_.train_count(), false));
      for (int a = 0; a < line_.train_count(); ++a)
        for (int b = a + 1; b < line_.train_count(); ++b) {
          const std::uint8_t mask = slots[pair_index(a, b, line_.train_count()) * stations_ + s];
          if (mask == kUnset) continue;
          if (has_flag(mask, EventChoice::hi_passes_lo) || has_flag(mask, EventChoice::lo_passes_hi))
            adj[a][b] = adj[b][a] = true;
        }
      std::vector<int> members;
      if (detail::find_clique_over(adj, members, 0, cap)) return false;
    }
    return true;
  }

  void process(const SubNode& node) {
    if (node.complete) {
      finish_leaf(node);
      return;
    }
    int slot = -1, ss = -1;
    for (int s = 0; s < stations_ && slot < 0; ++s)
      for (int p = 0; p < pairs_; ++p)
        if (node.slots[p * stations_ + s] == kUnset) {
          slot = p * stations_ + s;
          ss = s;
          break;
        }
    if (slot < 0) return;

    const int cap = line_.stations[ss].capacity;
    const bool wide = line_.stations[ss].safety_time == 0;
    std::vector<std::uint8_t> options;
    if (wide) {
      for (std::uint8_t m = 0; m < 16; ++m) options.push_back(m);
    } else {
      options = {1, 2, 4, 8, 0};
    }
    for (std::uint8_t m : options) {
      if (cap < 2 && (has_flag(m, EventChoice::hi_passes_lo) || has_flag(m, EventChoice::lo_passes_hi)))
        continue;
      auto child = std::make_shared<SubNode>();
      child->slots = node.slots;
      child->revoked = node.revoked;
      child->slots[slot] = m;
      if (!structure_ok(child->slots)) continue;
      if (!evaluate(*child)) continue;
      if (child->bound >= best_value_) continue;
      heap_.push({child->bound, next_seq_++, std::move(child)});
    }
  }

  void finish_leaf(const SubNode& node) {
    // Budget repair: overlap permissions the schedule needs, plus overtake
    // orientations, must fit every (train, station) budget. Revoke one needed
    // permission per child otherwise.
    struct Need {
      int f, g, s, p;
    };
    std::vector<Need> needs;
    for (int p = 0; p < pairs_; ++p) {
      auto [a, b] = pair_trains(p, line_.train_count());
      for (int s = 0; s < stations_; ++s) {
        if (line_.stations[s].capacity < 2) continue;
        const std::uint8_t mask = node.slots[p * stations_ + s];
        if (mask == kUnset || mask == 0) continue;
        const Seconds sf = line_.stations[s].safety_time;
        for (EventChoice lead : {EventChoice::lo_leads, EventChoice::hi_leads}) {
          if (!has_flag(mask, lead)) continue;
          const int f = arrival_leader(lead) == 0 ? a : b;
          const int g = f == a ? b : a;
          const OverlapFlags& rev = node.revoked[p * stations_ + s];
          const bool granted = !(f < g ? rev.lo_hi : rev.hi_lo);
          if (granted && node.times.arr(g, s) < node.times.dep(f, s) + sf)
            needs.push_back({f, g, s, p});
        }
      }
    }
    int bad_train = -1, bad_station = -1;
    for (int s = 0; s < stations_ && bad_train < 0; ++s) {
      const int cap = line_.stations[s].capacity;
      for (int t = 0; t < line_.train_count(); ++t) {
        int used = x_count(node.slots, t, s);
        for (const Need& n : needs)
          if (n.s == s && (n.f == t || n.g == t)) ++used;
        if (used > cap - 1) {
          bad_train = t;
          bad_station = s;
          break;
        }
      }
    }
    if (bad_train < 0) {
      if (node.value_at_leaf < best_value_) {
        best_value_ = node.value_at_leaf;
        best_ = std::make_shared<SubNode>(node);
      }
      return;
    }
    for (const Need& n : needs) {
      if (n.s != bad_station || (n.f != bad_train && n.g != bad_train)) continue;
      auto child = std::make_shared<SubNode>();
      child->slots = node.slots;
      child->revoked = node.revoked;
      (n.f < n.g ? child->revoked[n.p * stations_ + n.s].lo_hi
                 : child->revoked[n.p * stations_ + n.s].hi_lo) = true;
      if (!evaluate(*child)) continue;
      if (child->bound >= best_value_) continue;
      heap_.push({child->bound, next_seq_++, std::move(child)});
    }
  }

  const Line& line_;
  const std::vector<double>& u_;  // slot-indexed multipliers of this line
  std::int64_t node_budget_;
  Instance sub_;
  int pairs_ = 0;
  int stations_ = 0;
  int slots_ = 0;

  std::priority_queue<SubHeapItem, std::vector<SubHeapItem>, std::greater<SubHeapItem>> heap_;
  std::int64_t next_seq_ = 0;
  std::int64_t opened_ = 0;
  double best_value_ = std::numeric_limits<double>::infinity();
  std::shared_ptr<SubNode> best_;
};

}  // namespace lrdetail

// Minimizes the penalized objective over times and free event flags,
// constraints other than the partition retained. Exact when the node budget
// allows; otherwise proven_lb still bounds the true minimum from below.
inline LrSubproblemResult lr_subproblem(const Instance& instance, const std::vector<double>& u,
                                        const LrConfig& config = {}) {
  LrSubproblemResult out;
  out.times = Timetable::sized_for(instance);
  out.gamma.reserve(lr_constraint_count(instance));
  int offset = 0;
  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    const int slots = pair_count(line.train_count()) * line.station_count();
    std::vector<double> u_line(u.begin() + offset, u.begin() + offset + slots);
    lrdetail::SubproblemSearch search(line, u_line, config.subproblem_node_budget);
    auto res = search.run();
    out.value += res.value;
    out.proven_lb += res.proven_lb;
    out.exact = out.exact && res.exact;
    out.times.lines[l] = std::move(res.times);
    out.flags.push_back(std::move(res.flags));
    for (int g : res.gamma) out.gamma.push_back(g);
    offset += slots;
  }
  return out;
}

struct ZeroSubgradient : Error {
  using Error::Error;
};

struct LRState {
  std::vector<double> u;
  double theta = 2.0;
  double ub = 0;
  double best_bound = 0;
  int iteration = 0;
};

// One multiplier update: step = theta * (UB - value) / ||gamma||^2, applied
// along gamma. Throws when gamma vanishes — the relaxed solution is feasible
// and the loop should stop instead.
inline double subgradient_step(LRState& state, const std::vector<int>& gamma, double value) {
  double norm2 = 0;
  for (int g : gamma) norm2 += static_cast<double>(g) * g;
  if (norm2 == 0)
    throw ZeroSubgradient("all relaxed constraints hold; multipliers are already optimal");
  double step = state.theta * (state.ub - value) / norm2;
  if (step < 0) step = 0;
  for (size_t i = 0; i < gamma.size(); ++i) state.u[i] += gamma[i] * step;
  return step;
}

struct LrIteration {
  double bound = 0;   // proven lower bound of this iterate
  double value = 0;   // subproblem solution value used for the step
  double step = 0;
  double theta = 0;   // step parameter in force for this iteration
  double gamma_norm2 = 0;
  bool exact = true;
};

struct LRTrace {
  Seconds rmip = 0;
  double ub = 0;
  double best_bound = 0;
  std::vector<LrIteration> iterations;
  std::string stop_reason;
  std::optional<Seconds> feasible_objective;  // set when a subproblem solution was feasible
};

// Full subgradient loop: multipliers start at zero, the upper bound is 1.05
// times the no-overtake timetable, theta halves whenever an iterate fails to
// improve the best bound, and the loop stops on a vanished subgradient, a
// sub-0.005 multiplier change, or the iteration cap.
inline LRTrace run_lr(const Instance& instance, const LrConfig& config = {}) {
  LRTrace trace;
  trace.rmip = rmip_bound(instance);

  auto [lex_tt, lex_assign] = lexicographic_timetable(instance);
  const Seconds lex_obj = objective(instance, lex_tt);

  LRState state;
  state.u.assign(lr_constraint_count(instance), 0.0);
  state.theta = config.theta_init;
  state.ub = config.ub_factor * static_cast<double>(lex_obj);
  state.best_bound = static_cast<double>(trace.rmip);
  trace.ub = state.ub;

  for (state.iteration = 1; state.iteration <= config.max_iterations; ++state.iteration) {
    LrSubproblemResult sub = lr_subproblem(instance, state.u, config);

    LrIteration it;
    it.bound = sub.proven_lb;
    it.value = sub.value;
    it.theta = state.theta;
    it.exact = sub.exact;
    for (int g : sub.gamma) it.gamma_norm2 += static_cast<double>(g) * g;

    const double best_before = state.best_bound;
    state.best_bound = std::max(state.best_bound, sub.proven_lb);

    if (it.gamma_norm2 == 0) {
      // The subproblem solution satisfies every partition constraint: it is a
      // candidate feasible timetable, and no multiplier move can help.
      trace.iterations.push_back(it);
      trace.stop_reason = "zero_subgradient";
      if (audit_timetable(instance, sub.times, nullptr).clean())
        trace.feasible_objective = objective(instance, sub.times);
      break;
    }

    it.step = subgradient_step(state, sub.gamma, sub.value);
    trace.iterations.push_back(it);

    if (sub.proven_lb <= best_before) state.theta /= 2;

    double max_delta = 0;
    for (int g : sub.gamma) max_delta = std::max(max_delta, std::abs(g * it.step));
    if (max_delta < config.multiplier_stop) {
      trace.stop_reason = "small_multiplier_change";
      break;
    }
  }
  if (trace.stop_reason.empty()) trace.stop_reason = "iteration_cap";
  trace.best_bound = state.best_bound;
  return trace;
}

}  // namespace railsched
