#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "railsched/railsched.hpp"
#include "support/instances.hpp"

using namespace railsched;
using namespace testsupport;

namespace {

// Independent enumeration of the relaxed subproblem on the reference
// instance: one pair, three stations, headway everywhere positive, so each
// slot carries either no flag or exactly one. Checks the engine's minimum.
double enumerate_i2_subproblem(const Instance& i2, const std::vector<double>& u) {
  const Line& line = i2.lines[0];
  double best = std::numeric_limits<double>::infinity();
  // Slot values: 0 = no flag, 1..4 = EventChoice.
  for (int c0 = 0; c0 <= 4; ++c0)
    for (int c1 = 0; c1 <= 4; ++c1)
      for (int c2 = 0; c2 <= 4; ++c2) {
        const int codes[3] = {c0, c1, c2};
        EventAssignment a = EventAssignment::undecided_for(i2);
        bool structurally_ok = true;
        for (int s = 0; s < 3; ++s) {
          if (codes[s] == 0) continue;
          const EventChoice c = static_cast<EventChoice>(codes[s]);
          if (is_overtake(c) && line.stations[s].capacity < 2) structurally_ok = false;
          a.lines[0].choice(0, s) = c;
          if (!is_overtake(c) && line.stations[s].capacity >= 2) {
            auto [x, y] = pair_trains(0, 2);
            const int f = arrival_leader(c) == 0 ? x : y;
            a.lines[0].set_overlap(f, f == x ? y : x, s, true);
          }
        }
        if (!structurally_ok) continue;
        // FIFO linking as printed, on the flags.
        for (int s = 0; s + 1 < 3 && structurally_ok; ++s) {
          const EventChoice here = a.lines[0].choice(0, s);
          const EventChoice next = a.lines[0].choice(0, s + 1);
          if (here == EventChoice::undecided) continue;
          if (next == EventChoice::undecided ||
              departure_leader(here) != arrival_leader(next))
            structurally_ok = false;
        }
        if (!structurally_ok) continue;
        auto r = earliest_schedule(i2, a);
        if (!r.feasible()) continue;
        double value = static_cast<double>(objective(i2, *r.timetable));
        for (int s = 0; s < 3; ++s) value += u[s] * ((codes[s] == 0 ? 0 : 1) - 1);
        best = std::min(best, value);
      }
  return best;
}

}  // namespace

TEST_CASE("rmip_bound") {
  Instance i2 = make_i2();
  CHECK(rmip_bound(i2) == 1980);

  SECTION("single train: bound equals optimum") {
    Instance single;
    single.lines.push_back(i2.lines[0]);
    single.lines[0].trains.pop_back();
    CHECK(rmip_bound(single) == solve(single).objective);
  }

  SECTION("disjoint lines: bound is the sum of per-line optima") {
    Instance both;
    Instance a = make_i2(), b = make_i2();
    a.lines[0].trains.pop_back();   // slow alone
    b.lines[0].trains.erase(b.lines[0].trains.begin());  // fast alone
    both.lines = {a.lines[0], b.lines[0]};
    CHECK(rmip_bound(both) == 1320 + 660);
    CHECK(rmip_bound(both) == solve(both).objective);
  }
}

TEST_CASE("lr_subproblem at zero multipliers keeps every flag off") {
  Instance i2 = make_i2();
  std::vector<double> u(3, 0.0);
  LrSubproblemResult sub = lr_subproblem(i2, u);
  CHECK(sub.exact);
  CHECK(sub.value == 1980.0);
  CHECK(sub.proven_lb == 1980.0);
  REQUIRE(sub.gamma.size() == 3);
  for (int g : sub.gamma) CHECK(g == -1);
}

TEST_CASE("lr_subproblem at the first-step multipliers is exact") {
  Instance i2 = make_i2();
  std::vector<double> u(3, -570.0);
  LrSubproblemResult sub = lr_subproblem(i2, u);
  CHECK(sub.exact);
  // Bound sandwich: no worse than rewarding every slot, no better than the
  // independent enumeration's minimum.
  CHECK(sub.value <= 1980.0 + 3 * 570.0);
  CHECK(sub.value >= sub.proven_lb);
  const double reference = enumerate_i2_subproblem(i2, u);
  CHECK(sub.value == Catch::Approx(reference));
  CHECK(reference == Catch::Approx(2040.0));
}

TEST_CASE("lr_subproblem with nothing relaxed returns the optimum") {
  Instance single;
  single.lines.push_back(make_i2().lines[0]);
  single.lines[0].trains.pop_back();
  std::vector<double> u;  // no pairs, no constraints
  LrSubproblemResult sub = lr_subproblem(single, u);
  CHECK(sub.value == 1320.0);
  CHECK(sub.gamma.empty());
}

TEST_CASE("subgradient_step") {
  SECTION("reference first iteration: step 570") {
    LRState state;
    state.u.assign(3, 0.0);
    state.theta = 2.0;
    state.ub = 2835.0;  // 1.05 * 2700
    std::vector<int> gamma(3, -1);
    const double step = subgradient_step(state, gamma, 1980.0);
    CHECK(step == Catch::Approx(570.0));
    for (double v : state.u) CHECK(v == Catch::Approx(-570.0));
  }

  SECTION("zero subgradient is an error signal") {
    LRState state;
    state.u.assign(2, 0.0);
    state.ub = 100.0;
    std::vector<int> gamma(2, 0);
    CHECK_THROWS_AS(subgradient_step(state, gamma, 50.0), ZeroSubgradient);
  }

  SECTION("closed gap moves nothing") {
    LRState state;
    state.u.assign(2, -5.0);
    state.ub = 100.0;
    std::vector<int> gamma = {-1, -1};
    const double step = subgradient_step(state, gamma, 100.0);
    CHECK(step == 0.0);
    CHECK(state.u[0] == -5.0);
    CHECK(state.u[1] == -5.0);
  }
}

TEST_CASE("run_lr on the reference instance converges to the optimum") {
  Instance i2 = make_i2();
  LRTrace trace = run_lr(i2);
  CHECK(trace.rmip == 1980);
  CHECK(trace.ub == Catch::Approx(2835.0));
  REQUIRE_FALSE(trace.iterations.empty());
  CHECK(trace.iterations.front().bound == Catch::Approx(1980.0));
  CHECK(trace.iterations.front().step == Catch::Approx(570.0));
  double last = -1;
  for (const LrIteration& it : trace.iterations) {
    CHECK(it.bound <= 2040.0 + 1e-9);
    last = std::max(last, it.bound);
  }
  CHECK(trace.best_bound == Catch::Approx(2040.0));
  CHECK(trace.stop_reason == "zero_subgradient");
  REQUIRE(trace.feasible_objective.has_value());
  CHECK(*trace.feasible_objective == 2040);
}

TEST_CASE("run_lr trivial cases stop immediately") {
  SECTION("single train") {
    Instance single;
    single.lines.push_back(make_i2().lines[0]);
    single.lines[0].trains.pop_back();
    LRTrace trace = run_lr(single);
    REQUIRE(trace.iterations.size() == 1);
    CHECK(trace.best_bound == Catch::Approx(1320.0));
    CHECK(trace.stop_reason == "zero_subgradient");
  }

  SECTION("two trains on disjoint lines") {
    Instance both;
    Instance a = make_i2(), b = make_i2();
    a.lines[0].trains.pop_back();
    b.lines[0].trains.erase(b.lines[0].trains.begin());
    both.lines = {a.lines[0], b.lines[0]};
    LRTrace trace = run_lr(both);
    REQUIRE(trace.iterations.size() == 1);
    CHECK(trace.best_bound == Catch::Approx(1980.0));
  }
}

TEST_CASE("run_lr couples multiple lines through one multiplier vector") {
  Instance both;
  both.lines.push_back(make_i2().lines[0]);
  both.lines.push_back(make_i2().lines[0]);
  CHECK(lr_constraint_count(both) == 6);
  CHECK(rmip_bound(both) == 2 * 1980);
  LRTrace trace = run_lr(both);
  CHECK(trace.ub == Catch::Approx(1.05 * 2 * 2700));
  CHECK(trace.best_bound <= 2 * 2040 + 1e-9);
  CHECK(trace.best_bound == Catch::Approx(2 * 2040.0));
  REQUIRE_FALSE(trace.iterations.empty());
  CHECK(trace.iterations.front().gamma_norm2 == Catch::Approx(6.0));
}

TEST_CASE("lr bounds stay below the oracle optimum across the desk suite") {
  int tested = 0;
  for (std::uint64_t seed = 200; seed < 212; ++seed) {
    Instance instance = desk_instance(seed);
    SolveResult oracle = brute_force_optimum(instance);
    if (oracle.stats.status != SolveStatus::optimal) continue;
    LrConfig config;
    config.max_iterations = 25;
    LRTrace trace = run_lr(instance, config);
    ++tested;
    INFO("seed " << seed);
    CHECK(trace.rmip <= oracle.objective);
    double prev_best = trace.rmip;
    double prev_theta = config.theta_init;
    for (const LrIteration& it : trace.iterations) {
      CHECK(it.bound <= oracle.objective + 1e-6);
      CHECK(it.theta <= prev_theta + 1e-12);  // theta only halves, never grows
      prev_theta = it.theta;
      prev_best = std::max(prev_best, it.bound);
    }
    CHECK(trace.best_bound == Catch::Approx(prev_best));
    CHECK(trace.best_bound <= oracle.objective + 1e-6);
    CHECK(trace.best_bound >= trace.rmip - 1e-9);
    CHECK(oracle.objective <= trace.ub + 1e-9);
  }
  CHECK(tested >= 8);
}
