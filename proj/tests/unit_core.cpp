#include <catch2/catch_amalgamated.hpp>

#include "railsched/railsched.hpp"
#include "support/instances.hpp"

using namespace railsched;
using namespace testsupport;

namespace {

EventAssignment fast_first_everywhere(const Instance& i2) {
  EventAssignment a = EventAssignment::undecided_for(i2);
  for (int s = 0; s < 3; ++s) a.lines[0].set(kI2Slow, kI2Fast, s, precedes(kI2Fast, kI2Slow));
  return a;
}

}  // namespace

TEST_CASE("validation accepts a consistent instance") {
  Instance i2 = make_i2();
  CHECK(validate(i2).empty());

  Instance tiny;
  Line line;
  line.stations = {{"A", 60, 1}, {"B", 60, 1}};
  Train t;
  t.name = "T0";
  t.dwell_min = {0, 0};
  t.dwell_max = {60, 60};
  t.travel_min = {300};
  t.travel_max = {400};
  t.earliest_departure = {0, 0};
  line.trains = {t};
  tiny.lines = {line};
  CHECK(validate(tiny).empty());
}

TEST_CASE("validation flags inverted dwell bounds with their location") {
  Instance i2 = make_i2();
  i2.lines[0].trains[0].dwell_min[1] = 120;
  i2.lines[0].trains[0].dwell_max[1] = 60;
  auto issues = validate(i2);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].code == "DwellBoundsInverted");
  CHECK(issues[0].where.find("trains[0]") != std::string::npos);
  CHECK(issues[0].where.find("station 1") != std::string::npos);
}

TEST_CASE("validation flags wrong array lengths") {
  Instance i2 = make_i2();
  i2.lines[0].trains[1].travel_min = {300, 300, 300};  // 3 stations need 2 entries
  auto issues = validate(i2);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].code == "ArrayLengthMismatch");
}

TEST_CASE("validation flags non-positive capacity and inverted travel bounds") {
  Instance i2 = make_i2();
  i2.lines[0].stations[0].capacity = 0;
  i2.lines[0].trains[0].travel_max[0] = 10;
  auto issues = validate(i2);
  REQUIRE(issues.size() == 2);
  CHECK(issues[0].code == "NonPositiveCapacity");
  CHECK(issues[1].code == "TravelBoundsInverted");
}

TEST_CASE("objective sums last-station departures") {
  Instance i2 = make_i2();

  SECTION("single train telescopes to 660") {
    Instance single;
    single.lines.push_back(i2.lines[0]);
    single.lines[0].trains.erase(single.lines[0].trains.begin());  // keep the fast train
    auto r = earliest_schedule(single, EventAssignment::undecided_for(single));
    REQUIRE(r.feasible());
    CHECK(objective(single, *r.timetable) == 660);
  }

  SECTION("reference optimum evaluates to 2040") {
    auto r = earliest_schedule(i2, fast_first_everywhere(i2));
    REQUIRE(r.feasible());
    CHECK(objective(i2, *r.timetable) == 2040);
  }

  SECTION("empty line contributes zero") {
    Instance empty;
    empty.lines.emplace_back();
    empty.lines[0].stations = {{"A", 0, 1}};
    Timetable tt = Timetable::sized_for(empty);
    CHECK(objective(empty, tt) == 0);
  }

  SECTION("missing trains are an error") {
    Timetable tt = Timetable::sized_for(i2);
    tt.lines[0].train_count = 1;
    tt.lines[0].arrival.resize(3);
    tt.lines[0].departure.resize(3);
    CHECK_THROWS_AS(objective(i2, tt), MissingTrain);
  }
}

TEST_CASE("objective is additive over lines") {
  Instance both = make_i2();
  both.lines.push_back(make_i2().lines[0]);
  auto r1 = solve(make_i2());
  auto r2 = solve(both);
  CHECK(r2.objective == 2 * r1.objective);
}

TEST_CASE("intervals") {
  Instance i2 = make_i2();

  SECTION("direct subtraction, possibly negative") {
    Timetable tt = Timetable::sized_for(i2);
    tt.lines[0].dep(0, 1) = 720;
    tt.lines[0].arr(1, 1) = 660;
    CHECK(intervals(tt, 0, 0, 1, 1).psi == -60);
  }

  SECTION("equal departures give theta zero") {
    Timetable tt = Timetable::sized_for(i2);
    tt.lines[0].dep(0, 1) = 500;
    tt.lines[0].dep(1, 1) = 500;
    CHECK(intervals(tt, 0, 0, 1, 1).theta == 0);
  }

  SECTION("no-overtake reference timetable at B flags overtaking as non-beneficial") {
    auto r = earliest_schedule(i2, fast_first_everywhere(i2));
    REQUIRE(r.feasible());
    // fast departs B at 360, slow arrives B at 660.
    CHECK(intervals(*r.timetable, 0, kI2Fast, kI2Slow, 1).psi == 300);
  }

  SECTION("antisymmetry on random timetables") {
    TestRng rng(7);
    Timetable tt = Timetable::sized_for(i2);
    for (auto& v : tt.lines[0].departure) v = rng.between(0, 5000);
    for (int t = 0; t < 2; ++t)
      for (int u = 0; u < 2; ++u)
        for (int s = 0; s < 3; ++s)
          CHECK(intervals(tt, 0, t, u, s).theta == -intervals(tt, 0, u, t, s).theta);
  }
}

TEST_CASE("audit accepts solver output") {
  Instance i2 = make_i2();
  SolveResult r = solve(i2);
  CHECK(audit_timetable(i2, r.timetable, &r.assignment).clean());
  CHECK(audit_timetable(i2, r.timetable).clean());  // inferred assignment path
}

TEST_CASE("audit reports a dwell shortfall with slack") {
  Instance i2 = make_i2();
  SolveResult r = solve(i2);
  // Slow train dwells 120 at B; shrink its stop below the minimum.
  Timetable bad = r.timetable;
  bad.lines[0].dep(kI2Slow, 1) = bad.lines[0].arr(kI2Slow, 1) + 30;
  AuditReport report = audit_timetable(i2, bad, &r.assignment);
  REQUIRE_FALSE(report.clean());
  bool found = false;
  for (const Violation& v : report.violations)
    if (v.constraint == "4" && v.slack == -90 && v.trains == std::vector<int>{kI2Slow})
      found = true;
  CHECK(found);
}

TEST_CASE("audit reports capacity-one exclusion breaches") {
  Instance i2 = make_i2();
  // Both trains inside station A (one track) at overlapping times.
  Timetable tt = Timetable::sized_for(i2);
  auto& lt = tt.lines[0];
  // slow: A 0..100, fast: A enters at 50 while slow still there.
  lt.arr(kI2Slow, 0) = 0;
  lt.dep(kI2Slow, 0) = 100;
  lt.arr(kI2Fast, 0) = 50;
  lt.dep(kI2Fast, 0) = 200;
  // keep the rest loosely consistent downstream
  for (int t = 0; t < 2; ++t) {
    const Train& tr = i2.lines[0].trains[t];
    for (int s = 1; s < 3; ++s) {
      lt.arr(t, s) = lt.dep(t, s - 1) + tr.travel_min[s - 1] + (t == kI2Fast ? 61 : 0);
      lt.dep(t, s) = lt.arr(t, s) + tr.dwell_min[s] + (t == kI2Fast ? 0 : 61);
    }
  }
  AuditReport report = audit_timetable(i2, tt);
  CHECK(report.mentions("13"));
}

TEST_CASE("solver outputs across the desk suite stay audit-clean") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Instance instance = desk_instance(seed);
    SolveResult r = solve(instance);
    if (r.stats.status != SolveStatus::optimal) continue;
    INFO("seed " << seed);
    CHECK(audit_timetable(instance, r.timetable, &r.assignment).clean());
  }
}
