// Command-line front door: generate instances, solve them, compute Lagrangian
// bounds, audit timetables, export the literal MIP, draw time-distance
// diagrams, and run the exhaustive oracle.
//
// Exit codes: 0 success, 1 infeasible or violations found, 2 usage or
// validation error, 3 budget exhausted (best incumbent still emitted).
//
// Deterministic runs (the default) keep wall-clock readings out of --json
// payloads so identical seeds produce byte-identical output; timings go to
// stderr and to the plain-text reports instead.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "railsched/railsched.hpp"

namespace {

using nlohmann::json;
using namespace railsched;

enum ExitCode : int {
  kOk = 0,
  kInfeasible = 1,
  kUsage = 2,
  kBudget = 3,
};

int log_level() {
  const char* env = std::getenv("RAILSCHED_LOG");
  if (!env) return 1;
  const std::string v = env;
  if (v == "debug") return 2;
  if (v == "info") return 1;
  if (v == "quiet") return 0;
  return 1;
}

void info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "railsched: " << msg << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

Instance load_instance_or_exit(const std::string& path) {
  ParseOutcome parsed = parse_instance(read_file(path));
  if (!parsed.ok()) {
    for (const auto& e : parsed.errors)
      std::cerr << path << ": " << e.code << " at " << e.where
                << (e.detail.empty() ? "" : ": " + e.detail) << '\n';
    std::exit(kUsage);
  }
  return std::move(*parsed.instance);
}

json gap_trace_json(const SearchStats& stats, bool with_times) {
  json arr = json::array();
  for (const GapSample& g : stats.gap_trace) {
    json e;
    if (with_times) e["time_s"] = g.time_s;
    e["nodes"] = g.nodes;
    if (g.ub != kNoObjective) e["ub"] = g.ub;
    e["lb"] = g.lb;
    arr.push_back(std::move(e));
  }
  return arr;
}

json assignment_json(const Instance& instance, const EventAssignment& assignment) {
  json lines = json::array();
  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    const LineAssignment& a = assignment.lines[l];
    json events = json::array();
    for (int x = 0; x < line.train_count(); ++x)
      for (int y = x + 1; y < line.train_count(); ++y)
        for (int s = 0; s < line.station_count(); ++s) {
          const EventChoice c = a.choice_of(x, y, s);
          if (c == EventChoice::undecided) continue;
          const int f = arrival_leader(c) == 0 ? x : y;
          const int g = f == x ? y : x;
          json e;
          e["station"] = line.stations[s].name;
          e["kind"] = is_overtake(c) ? "overtakes" : "precedes";
          e["first"] = line.trains[f].name;
          e["second"] = line.trains[g].name;
          if (!is_overtake(c) && a.overlap(f, g, s)) e["overlap"] = true;
          events.push_back(std::move(e));
        }
    lines.push_back({{"line", l}, {"events", std::move(events)}});
  }
  return lines;
}

int cmd_generate(std::uint64_t seed, int trains, int stations, const std::string& out_path) {
  GeneratorOptions opts;
  opts.seed = seed;
  opts.trains = trains;
  opts.stations = stations;
  Instance instance = generate_instance(opts);
  const std::string text = write_instance(instance);
  if (out_path.empty())
    std::cout << text;
  else
    write_file(out_path, text);
  info("generated " + std::to_string(stations) + " stations, " + std::to_string(trains) +
       " trains (seed " + std::to_string(seed) + ")");
  return kOk;
}

int cmd_solve(const std::string& path, bool rules, std::int64_t node_budget, double time_budget,
              int workers, double gap, bool as_json, const std::string& csv_out) {
  Instance instance = load_instance_or_exit(path);
  SolverConfig config;
  config.node_budget = node_budget;
  config.time_budget = time_budget;
  config.use_rules_mask = rules;
  config.workers = workers;
  config.deterministic = workers <= 1;
  config.gap_tolerance = gap;

  FixedVariableMask mask =
      rules ? apply_rules(instance) : FixedVariableMask::empty_for(instance);
  if (!rules) apply_dispatch_fixes(instance, mask);
  SolveResult result = solve(instance, mask, config);

  info("wall time " + std::to_string(result.stats.wall_time) + " s, xi " +
       std::to_string(result.stats.xi()));

  if (result.stats.status == SolveStatus::infeasible) {
    if (as_json)
      std::cout << json{{"status", "infeasible"}}.dump(2) << '\n';
    else
      std::cout << "status: infeasible\n";
    return kInfeasible;
  }

  if (!csv_out.empty()) write_file(csv_out, write_timetable_csv(instance, result.timetable));

  if (as_json) {
    json doc;
    doc["objective"] = result.objective;
    doc["status"] = status_name(result.stats.status);
    doc["opened_nodes"] = result.stats.opened_nodes;
    doc["rules_mask"] = rules;
    doc["gap_trace"] = gap_trace_json(result.stats, !config.deterministic);
    doc["assignment"] = assignment_json(instance, result.assignment);
    if (!config.deterministic) {
      doc["wall_time_s"] = result.stats.wall_time;
      doc["xi"] = result.stats.xi();
    }
    std::cout << doc.dump(2) << '\n';
  } else {
    std::cout << "objective: " << result.objective << '\n'
              << "status: " << status_name(result.stats.status) << '\n'
              << "opened_nodes: " << result.stats.opened_nodes << '\n'
              << "wall_time_s: " << result.stats.wall_time << '\n'
              << "xi: " << result.stats.xi() << '\n'
              << "gap_trace:\n";
    for (const GapSample& g : result.stats.gap_trace) {
      std::cout << "  nodes=" << g.nodes;
      if (g.ub != kNoObjective) std::cout << " ub=" << g.ub;
      std::cout << " lb=" << g.lb << '\n';
    }
  }
  return result.stats.status == SolveStatus::budget_exhausted ? kBudget : kOk;
}

int cmd_bound(const std::string& path, int iterations, std::int64_t sub_budget, bool as_json) {
  Instance instance = load_instance_or_exit(path);
  LrConfig config;
  config.max_iterations = iterations;
  config.subproblem_node_budget = sub_budget;
  LRTrace trace = run_lr(instance, config);

  if (as_json) {
    json doc;
    doc["rmip"] = trace.rmip;
    doc["ub"] = trace.ub;
    doc["best_bound"] = trace.best_bound;
    doc["iterations"] = trace.iterations.size();
    doc["stop_reason"] = trace.stop_reason;
    if (trace.feasible_objective) doc["feasible_objective"] = *trace.feasible_objective;
    json iters = json::array();
    for (const LrIteration& it : trace.iterations)
      iters.push_back({{"bound", it.bound},
                       {"value", it.value},
                       {"step", it.step},
                       {"gamma_norm2", it.gamma_norm2},
                       {"exact", it.exact}});
    doc["trace"] = std::move(iters);
    std::cout << doc.dump(2) << '\n';
  } else {
    std::cout << "rmip: " << trace.rmip << '\n'
              << "ub: " << trace.ub << '\n'
              << "best_bound: " << trace.best_bound << '\n'
              << "iterations: " << trace.iterations.size() << '\n'
              << "stop_reason: " << trace.stop_reason << '\n';
    for (const LrIteration& it : trace.iterations)
      std::cout << "  bound=" << it.bound << " step=" << it.step << " |g|2=" << it.gamma_norm2
                << (it.exact ? "" : " (truncated)") << '\n';
  }
  return kOk;
}

int cmd_check(const std::string& instance_path, const std::string& csv_path, bool as_json) {
  Instance instance = load_instance_or_exit(instance_path);
  Timetable tt;
  try {
    tt = read_timetable_csv(instance, read_file(csv_path));
  } catch (const Error& e) {
    std::cerr << csv_path << ": " << e.what() << '\n';
    return kUsage;
  }
  AuditReport report = audit_timetable(instance, tt);
  if (as_json) {
    json arr = json::array();
    for (const Violation& v : report.violations) {
      json trains = json::array();
      for (int t : v.trains) trains.push_back(instance.lines[v.line].trains[t].name);
      arr.push_back({{"constraint", v.constraint},
                     {"line", v.line},
                     {"station", instance.lines[v.line].stations[v.station].name},
                     {"trains", std::move(trains)},
                     {"slack", v.slack}});
    }
    std::cout << json{{"violations", std::move(arr)}}.dump(2) << '\n';
  } else if (report.clean()) {
    std::cout << "feasible: no violations\n";
  } else {
    for (const Violation& v : report.violations) {
      std::cout << "violation eq " << v.constraint << " line " << v.line << " station "
                << instance.lines[v.line].stations[v.station].name << " trains";
      for (int t : v.trains) std::cout << ' ' << instance.lines[v.line].trains[t].name;
      std::cout << " slack " << v.slack << '\n';
    }
  }
  return report.clean() ? kOk : kInfeasible;
}

int cmd_export(const std::string& path, bool rules, const std::string& out_path) {
  Instance instance = load_instance_or_exit(path);
  FixedVariableMask mask = apply_rules(instance);
  LpExport lp = export_mip(instance, rules ? &mask : nullptr);
  for (const std::string& w : lp.warnings) std::cerr << "warning: " << w << '\n';
  if (out_path.empty())
    std::cout << lp.text;
  else
    write_file(out_path, lp.text);
  info(std::to_string(lp.binary_count) + " binaries, " + std::to_string(lp.row_count) + " rows");
  return kOk;
}

int cmd_plot(const std::string& instance_path, const std::string& csv_path,
             const std::string& out_path) {
  Instance instance = load_instance_or_exit(instance_path);
  Timetable tt;
  try {
    tt = read_timetable_csv(instance, read_file(csv_path));
  } catch (const Error& e) {
    std::cerr << csv_path << ": " << e.what() << '\n';
    return kUsage;
  }
  AuditReport report = audit_timetable(instance, tt);
  if (!report.clean())
    std::cerr << "warning: timetable has " << report.violations.size()
              << " violations; drawing anyway\n";
  const std::string svg = render_time_distance_svg(instance, tt);
  if (out_path.empty())
    std::cout << svg;
  else
    write_file(out_path, svg);
  return kOk;
}

int cmd_oracle(const std::string& path, std::int64_t ceiling, bool as_json) {
  Instance instance = load_instance_or_exit(path);
  SolverConfig config;
  if (ceiling > 0) config.enumeration_ceiling = ceiling;
  SolveResult result;
  try {
    result = brute_force_optimum(instance, config);
  } catch (const TooLarge& e) {
    std::cerr << "oracle: " << e.what() << '\n';
    return kUsage;
  }
  if (result.stats.status == SolveStatus::infeasible) {
    std::cout << (as_json ? json{{"status", "infeasible"}}.dump(2) + "\n" : "status: infeasible\n");
    return kInfeasible;
  }
  if (as_json)
    std::cout << json{{"objective", result.objective},
                      {"status", "optimal"},
                      {"evaluated", result.stats.opened_nodes}}
                     .dump(2)
              << '\n';
  else
    std::cout << "objective: " << result.objective << '\n'
              << "evaluated: " << result.stats.opened_nodes << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"timetable solver for uni-directional double-track lines"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int trains = 6, stations = 12;
  std::string out_path, instance_path, csv_path;
  bool rules = false, as_json = false;
  std::int64_t node_budget = 0;
  double time_budget = 0, gap = 0;
  int workers = 1;
  int iterations = 25;
  std::int64_t sub_budget = 50000;
  std::int64_t ceiling = 0;

  auto* gen = app.add_subcommand("generate", "emit a seeded random instance");
  gen->add_option("--seed", seed, "random seed")->required();
  gen->add_option("--trains", trains, "train count (default 6)");
  gen->add_option("--stations", stations, "station count (default 12)");
  gen->add_option("-o,--output", out_path, "output file (default stdout)");

  auto* solve_cmd = app.add_subcommand("solve", "branch-and-bound to optimality");
  solve_cmd->add_option("instance", instance_path, "instance JSON")->required();
  solve_cmd->add_flag("--rules", rules, "apply the parameter overtaking rules first");
  solve_cmd->add_option("--node-budget", node_budget, "stop after this many nodes");
  solve_cmd->add_option("--time-budget", time_budget, "stop after this many seconds");
  solve_cmd->add_option("--workers", workers, "parallel node expansion (drops determinism)");
  solve_cmd->add_option("--gap", gap, "relative optimality gap tolerance (default 0)");
  solve_cmd->add_flag("--json", as_json, "structured output");
  solve_cmd->add_option("-o,--output", csv_path, "write the timetable CSV here");

  auto* bound_cmd = app.add_subcommand("bound", "Lagrangian lower bound loop");
  bound_cmd->add_option("instance", instance_path, "instance JSON")->required();
  bound_cmd->add_option("--iterations", iterations, "iteration cap (default 25, hard stop 100)");
  bound_cmd->add_option("--subproblem-nodes", sub_budget, "node budget per subproblem");
  bound_cmd->add_flag("--json", as_json, "structured output");

  auto* check_cmd = app.add_subcommand("check", "audit a timetable CSV");
  check_cmd->add_option("instance", instance_path, "instance JSON")->required();
  check_cmd->add_option("timetable", csv_path, "timetable CSV")->required();
  check_cmd->add_flag("--json", as_json, "structured output");

  auto* export_cmd = app.add_subcommand("export-mip", "write the literal big-M model (LP format)");
  export_cmd->add_option("instance", instance_path, "instance JSON")->required();
  export_cmd->add_flag("--rules", rules, "fix rule-forbidden binaries in the export");
  export_cmd->add_option("-o,--output", out_path, "output file (default stdout)");

  auto* plot_cmd = app.add_subcommand("plot", "render a time-distance SVG");
  plot_cmd->add_option("instance", instance_path, "instance JSON")->required();
  plot_cmd->add_option("timetable", csv_path, "timetable CSV")->required();
  plot_cmd->add_option("-o,--output", out_path, "output file (default stdout)");

  auto* oracle_cmd = app.add_subcommand("oracle", "exhaustive optimum for tiny instances");
  oracle_cmd->add_option("instance", instance_path, "instance JSON")->required();
  oracle_cmd->add_option("--ceiling", ceiling, "enumeration ceiling override");
  oracle_cmd->add_flag("--json", as_json, "structured output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(seed, trains, stations, out_path);
    if (solve_cmd->parsed())
      return cmd_solve(instance_path, rules, node_budget, time_budget, workers, gap, as_json,
                       csv_path);
    if (bound_cmd->parsed()) return cmd_bound(instance_path, iterations, sub_budget, as_json);
    if (check_cmd->parsed()) return cmd_check(instance_path, csv_path, as_json);
    if (export_cmd->parsed()) return cmd_export(instance_path, rules, out_path);
    if (plot_cmd->parsed()) return cmd_plot(instance_path, csv_path, out_path);
    if (oracle_cmd->parsed()) return cmd_oracle(instance_path, ceiling, as_json);
  } catch (const Error& e) {
    std::cerr << "railsched: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
