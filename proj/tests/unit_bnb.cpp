#include <catch2/catch_amalgamated.hpp>

#include "railsched/railsched.hpp"
#include "support/instances.hpp"

using namespace railsched;
using namespace testsupport;

TEST_CASE("solve finds the reference optimum with the fast train leading throughout") {
  Instance i2 = make_i2();
  SolveResult r = solve(i2);
  REQUIRE(r.stats.status == SolveStatus::optimal);
  CHECK(r.objective == 2040);
  for (int s = 0; s < 3; ++s)
    CHECK(r.assignment.lines[0].choice_of(kI2Slow, kI2Fast, s) == precedes(kI2Fast, kI2Slow));
  CHECK(audit_timetable(i2, r.timetable, &r.assignment).clean());
}

TEST_CASE("solve under the rules mask keeps the optimum and opens no more nodes") {
  Instance i2 = make_i2();
  SolveResult free = solve(i2);
  SolveResult masked = solve(i2, apply_rules(i2), SolverConfig{});
  CHECK(masked.objective == free.objective);
  CHECK(masked.objective == 2040);
  CHECK(masked.stats.opened_nodes <= free.stats.opened_nodes);
}

TEST_CASE("single train solves at the root") {
  Instance single;
  single.lines.push_back(make_i2().lines[0]);
  single.lines[0].trains.erase(single.lines[0].trains.begin());
  SolveResult r = solve(single);
  CHECK(r.objective == 660);
  CHECK(r.stats.opened_nodes == 1);
  CHECK(r.stats.status == SolveStatus::optimal);
}

TEST_CASE("a dispatch order binds the search") {
  Instance ordered = make_i2();
  ordered.lines[0].dispatch_order = std::vector<int>{kI2Slow, kI2Fast};  // the bad order
  SolveResult r = solve(ordered);
  REQUIRE(r.stats.status == SolveStatus::optimal);
  // Slow first at A is fixed; the best completion overtakes at B.
  CHECK(r.objective == 2400);
  CHECK(r.assignment.lines[0].choice_of(kI2Slow, kI2Fast, 0) == precedes(kI2Slow, kI2Fast));
  CHECK(brute_force_optimum(ordered).objective == 2400);
}

TEST_CASE("gap tolerance accepts early incumbents") {
  Instance i2 = make_i2();
  SolverConfig config;
  config.gap_tolerance = 0.5;
  SolveResult r = solve(i2, config);
  CHECK(r.stats.status == SolveStatus::optimal);
  CHECK(r.objective >= 2040);   // still a feasible timetable
  CHECK(r.objective <= 2700);   // no worse than the seed
  CHECK(audit_timetable(i2, r.timetable, &r.assignment).clean());
}

TEST_CASE("node budget exhaustion reports the incumbent") {
  Instance instance = desk_instance(42);
  SolverConfig config;
  config.node_budget = 1;
  SolveResult r = solve(instance, config);
  if (r.stats.status == SolveStatus::budget_exhausted) {
    CHECK(r.objective != kNoObjective);  // lexicographic seed still there
  }
}

TEST_CASE("brute force oracle") {
  SECTION("reference instance, four consistent assignments") {
    Instance i2 = make_i2();
    SolveResult r = brute_force_optimum(i2);
    CHECK(r.objective == 2040);
    CHECK(r.stats.opened_nodes == 4);
  }

  SECTION("single train") {
    Instance single;
    single.lines.push_back(make_i2().lines[0]);
    single.lines[0].trains.pop_back();
    CHECK(brute_force_optimum(single).objective == 1320);
  }

  SECTION("two identical trains on two single-track stations") {
    Instance instance;
    Line line;
    line.stations = {{"A", 60, 1}, {"B", 60, 1}};
    for (int t = 0; t < 2; ++t) {
      Train tr;
      tr.name = "T" + std::to_string(t);
      tr.dwell_min = {0, 0};
      tr.dwell_max = {600, 600};
      tr.travel_min = {300};
      tr.travel_max = {900};
      tr.earliest_departure = {0, 0};
      line.trains.push_back(tr);
    }
    instance.lines.push_back(line);
    SolveResult r = brute_force_optimum(instance);
    // Two total orders, symmetric: leader departs B at 300, follower held to
    // 360 by the headway behind it.
    CHECK(r.objective == 300 + 360);
    CHECK(r.stats.opened_nodes == 2);
  }

  SECTION("the ceiling guards enumeration") {
    Instance big = desk_instance(7);
    SolverConfig config;
    config.enumeration_ceiling = 1;
    if (pair_count(big.lines[0].train_count()) > 0)
      CHECK_THROWS_AS(brute_force_optimum(big, config), TooLarge);
  }
}

TEST_CASE("search equals the oracle across the desk suite") {
  int optimal = 0;
  for (std::uint64_t seed = 200; seed < 225; ++seed) {
    Instance instance = desk_instance(seed);
    SolveResult search = solve(instance);
    SolveResult oracle = brute_force_optimum(instance);
    INFO("seed " << seed);
    REQUIRE(search.stats.status == oracle.stats.status);
    if (search.stats.status != SolveStatus::optimal) continue;
    CHECK(search.objective == oracle.objective);
    ++optimal;
  }
  CHECK(optimal >= 20);
}

TEST_CASE("deterministic runs are bit-for-bit repeatable") {
  Instance instance = desk_instance(88);
  SolveResult a = solve(instance);
  SolveResult b = solve(instance);
  CHECK(a.objective == b.objective);
  CHECK(a.stats.opened_nodes == b.stats.opened_nodes);
  CHECK(a.assignment.lines[0].choices == b.assignment.lines[0].choices);
  CHECK(a.timetable.lines[0].departure == b.timetable.lines[0].departure);
}

TEST_CASE("parallel workers return the same objective") {
  for (std::uint64_t seed : {11, 42, 97}) {
    Instance instance = desk_instance(seed);
    SolveResult serial = solve(instance);
    SolverConfig parallel;
    parallel.deterministic = false;
    parallel.workers = 4;
    SolveResult par = solve(instance, parallel);
    INFO("seed " << seed);
    CHECK(par.stats.status == serial.stats.status);
    if (serial.stats.status == SolveStatus::optimal) CHECK(par.objective == serial.objective);
  }
}

TEST_CASE("restricting masks never improves the objective") {
  for (std::uint64_t seed = 250; seed < 262; ++seed) {
    Instance instance = desk_instance(seed);
    SolveResult free = solve(instance);
    if (free.stats.status != SolveStatus::optimal) continue;
    // Rules mask plus an arbitrary extra ban.
    FixedVariableMask mask = apply_rules(instance);
    const Line& line = instance.lines[0];
    if (line.train_count() >= 2) {
      TestRng rng(seed);
      const int s = static_cast<int>(rng.between(0, line.station_count() - 1));
      mask.lines[0].forbid(0, 1, s);
      mask.lines[0].forbid(1, 0, s);
    }
    SolveResult masked = solve(instance, mask, SolverConfig{});
    INFO("seed " << seed);
    if (masked.stats.status == SolveStatus::optimal) CHECK(masked.objective >= free.objective);
  }
}

TEST_CASE("gap trace stays sound and monotone") {
  Instance i2 = make_i2();
  SolveResult r = solve(i2);
  REQUIRE_FALSE(r.stats.gap_trace.empty());
  Seconds last_lb = 0;
  Seconds last_ub = kNoObjective;
  for (const GapSample& g : r.stats.gap_trace) {
    CHECK(g.lb >= last_lb);
    if (g.ub != kNoObjective) {
      CHECK(g.lb <= g.ub);
      if (last_ub != kNoObjective) CHECK(g.ub <= last_ub);
      CHECK(g.lb <= 2040);
      CHECK(g.ub >= 2040);
      last_ub = g.ub;
    }
    last_lb = g.lb;
  }
}

TEST_CASE("every trace entry brackets the true optimum") {
  for (std::uint64_t seed = 270; seed < 285; ++seed) {
    Instance instance = desk_instance(seed);
    SolveResult oracle = brute_force_optimum(instance);
    if (oracle.stats.status != SolveStatus::optimal) continue;
    SolveResult r = solve(instance);
    INFO("seed " << seed);
    for (const GapSample& g : r.stats.gap_trace) {
      CHECK(g.lb <= oracle.objective);
      if (g.ub != kNoObjective) CHECK(g.ub >= oracle.objective);
    }
  }
}
