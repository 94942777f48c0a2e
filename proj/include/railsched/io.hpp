#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "railsched/types.hpp"

// Instance JSON and timetable CSV. The JSON schema:
//
// {
//   "lines": [ {
//     "stations": [ {"name", "safety_time_s", "capacity"} ],
//     "trains":   [ {"name", "dwell_min_s": [...], "dwell_max_s": [...],
//                    "travel_min_s": [...], "travel_max_s": [...],
//                    "earliest_departure_s": [...]} ],
//     "dispatch_order": ["name", ...]          // optional
//   } ],
//   "big_m_s": 123                              // optional
// }
//
// CSV columns: line,train,station,arrival_s,departure_s — one row per
// (train, station), trains and stations referenced by name.

namespace railsched {

struct ParseOutcome {
  std::optional<Instance> instance;
  std::vector<ValidationIssue> errors;

  bool ok() const { return instance.has_value() && errors.empty(); }
};

namespace iodetail {

using nlohmann::json;

inline void line_col_of_offset(const std::string& text, size_t offset, int& line, int& col) {
  line = 1;
  col = 1;
  for (size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
}

inline bool fetch_seconds(const json& node, const char* key, const std::string& path, Seconds& out,
                          std::vector<ValidationIssue>& errors) {
  if (!node.contains(key)) {
    errors.push_back({"MissingField", path + "." + key, "required"});
    return false;
  }
  if (!node[key].is_number_integer()) {
    errors.push_back({"BadType", path + "." + key, "expected integer seconds"});
    return false;
  }
  out = node[key].get<Seconds>();
  return true;
}

inline bool fetch_seconds_array(const json& node, const char* key, const std::string& path,
                                std::vector<Seconds>& out, std::vector<ValidationIssue>& errors) {
  if (!node.contains(key)) {
    errors.push_back({"MissingField", path + "." + key, "required"});
    return false;
  }
  if (!node[key].is_array()) {
    errors.push_back({"BadType", path + "." + key, "expected array of integer seconds"});
    return false;
  }
  out.clear();
  for (size_t i = 0; i < node[key].size(); ++i) {
    if (!node[key][i].is_number_integer()) {
      errors.push_back({"BadType", path + "." + key + "[" + std::to_string(i) + "]",
                        "expected integer seconds"});
      return false;
    }
    out.push_back(node[key][i].get<Seconds>());
  }
  return true;
}

}  // namespace iodetail

inline ParseOutcome parse_instance(const std::string& text) {
  using iodetail::json;
  ParseOutcome out;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 0, col = 0;
    iodetail::line_col_of_offset(text, e.byte > 0 ? e.byte - 1 : 0, line, col);
    out.errors.push_back({"SyntaxError",
                          "line " + std::to_string(line) + " col " + std::to_string(col),
                          e.what()});
    return out;
  }

  Instance instance;
  auto& errors = out.errors;
  if (!doc.is_object() || !doc.contains("lines") || !doc["lines"].is_array()) {
    errors.push_back({"MissingField", "lines", "expected array"});
    return out;
  }
  if (doc.contains("big_m_s")) {
    if (!doc["big_m_s"].is_number_integer())
      errors.push_back({"BadType", "big_m_s", "expected integer seconds"});
    else
      instance.big_m = doc["big_m_s"].get<Seconds>();
  }
  for (size_t l = 0; l < doc["lines"].size(); ++l) {
    const json& jline = doc["lines"][l];
    const std::string lpath = "lines[" + std::to_string(l) + "]";
    Line line;
    if (!jline.contains("stations") || !jline["stations"].is_array()) {
      errors.push_back({"MissingField", lpath + ".stations", "expected array"});
      continue;
    }
    for (size_t s = 0; s < jline["stations"].size(); ++s) {
      const json& jst = jline["stations"][s];
      const std::string spath = lpath + ".stations[" + std::to_string(s) + "]";
      Station st;
      st.name = jst.value("name", "S" + std::to_string(s));
      iodetail::fetch_seconds(jst, "safety_time_s", spath, st.safety_time, errors);
      if (!jst.contains("capacity") || !jst["capacity"].is_number_integer())
        errors.push_back({"MissingField", spath + ".capacity", "required integer"});
      else
        st.capacity = jst["capacity"].get<int>();
      line.stations.push_back(std::move(st));
    }
    if (jline.contains("trains") && jline["trains"].is_array()) {
      for (size_t t = 0; t < jline["trains"].size(); ++t) {
        const json& jtr = jline["trains"][t];
        const std::string tpath = lpath + ".trains[" + std::to_string(t) + "]";
        Train tr;
        tr.name = jtr.value("name", "T" + std::to_string(t));
        iodetail::fetch_seconds_array(jtr, "dwell_min_s", tpath, tr.dwell_min, errors);
        iodetail::fetch_seconds_array(jtr, "dwell_max_s", tpath, tr.dwell_max, errors);
        iodetail::fetch_seconds_array(jtr, "travel_min_s", tpath, tr.travel_min, errors);
        iodetail::fetch_seconds_array(jtr, "travel_max_s", tpath, tr.travel_max, errors);
        iodetail::fetch_seconds_array(jtr, "earliest_departure_s", tpath, tr.earliest_departure,
                                      errors);
        line.trains.push_back(std::move(tr));
      }
    }
    // Duplicate names break CSV and dispatch_order references.
    for (size_t a = 0; a < line.trains.size(); ++a)
      for (size_t b = a + 1; b < line.trains.size(); ++b)
        if (line.trains[a].name == line.trains[b].name)
          errors.push_back({"DuplicateName", lpath + ".trains[" + std::to_string(b) + "].name",
                            line.trains[b].name});
    for (size_t a = 0; a < line.stations.size(); ++a)
      for (size_t b = a + 1; b < line.stations.size(); ++b)
        if (line.stations[a].name == line.stations[b].name)
          errors.push_back({"DuplicateName", lpath + ".stations[" + std::to_string(b) + "].name",
                            line.stations[b].name});
    if (jline.contains("dispatch_order")) {
      if (!jline["dispatch_order"].is_array()) {
        errors.push_back({"BadType", lpath + ".dispatch_order", "expected array of train names"});
      } else {
        std::vector<int> order;
        for (const auto& jname : jline["dispatch_order"]) {
          const std::string name = jname.is_string() ? jname.get<std::string>() : "";
          int found = -1;
          for (size_t t = 0; t < line.trains.size(); ++t)
            if (line.trains[t].name == name) found = static_cast<int>(t);
          if (found < 0)
            errors.push_back({"BadDispatchOrder", lpath + ".dispatch_order",
                              "unknown train '" + name + "'"});
          else
            order.push_back(found);
        }
        line.dispatch_order = std::move(order);
      }
    }
    instance.lines.push_back(std::move(line));
  }
  if (!errors.empty()) return out;

  for (ValidationIssue& issue : validate(instance)) errors.push_back(std::move(issue));
  if (!errors.empty()) return out;
  out.instance = std::move(instance);
  return out;
}

inline std::string write_instance(const Instance& instance) {
  using iodetail::json;
  json doc;
  doc["lines"] = json::array();
  for (const Line& line : instance.lines) {
    json jline;
    jline["stations"] = json::array();
    for (const Station& st : line.stations)
      jline["stations"].push_back(
          {{"name", st.name}, {"safety_time_s", st.safety_time}, {"capacity", st.capacity}});
    jline["trains"] = json::array();
    for (const Train& tr : line.trains)
      jline["trains"].push_back({{"name", tr.name},
                                 {"dwell_min_s", tr.dwell_min},
                                 {"dwell_max_s", tr.dwell_max},
                                 {"travel_min_s", tr.travel_min},
                                 {"travel_max_s", tr.travel_max},
                                 {"earliest_departure_s", tr.earliest_departure}});
    if (line.dispatch_order) {
      json order = json::array();
      for (int t : *line.dispatch_order) order.push_back(line.trains[t].name);
      jline["dispatch_order"] = std::move(order);
    }
    doc["lines"].push_back(std::move(jline));
  }
  if (instance.big_m) doc["big_m_s"] = *instance.big_m;
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Timetable CSV
// ---------------------------------------------------------------------------

struct CsvError : Error {
  using Error::Error;
};

inline std::string write_timetable_csv(const Instance& instance, const Timetable& timetable) {
  std::ostringstream out;
  out << "line,train,station,arrival_s,departure_s\n";
  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    const LineTimetable& lt = timetable.lines.at(l);
    for (int t = 0; t < line.train_count(); ++t)
      for (int s = 0; s < line.station_count(); ++s)
        out << l << ',' << line.trains[t].name << ',' << line.stations[s].name << ','
            << lt.arr(t, s) << ',' << lt.dep(t, s) << '\n';
  }
  return out.str();
}

inline Timetable read_timetable_csv(const Instance& instance, const std::string& text) {
  Timetable tt = Timetable::sized_for(instance);
  std::vector<std::vector<bool>> seen;
  for (const Line& line : instance.lines)
    seen.emplace_back(static_cast<size_t>(line.train_count()) * line.station_count(), false);

  std::istringstream in(text);
  std::string row;
  if (!std::getline(in, row)) throw CsvError("empty timetable file");
  if (row.size() && row.back() == '\r') row.pop_back();
  if (row != "line,train,station,arrival_s,departure_s")
    throw CsvError("unexpected CSV header: " + row);

  int lineno = 1;
  while (std::getline(in, row)) {
    ++lineno;
    if (row.size() && row.back() == '\r') row.pop_back();
    if (row.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream rs(row);
    while (std::getline(rs, field, ',')) fields.push_back(field);
    if (fields.size() != 5)
      throw CsvError("row " + std::to_string(lineno) + ": expected 5 fields");
    int l;
    Seconds arr_v, dep_v;
    try {
      l = std::stoi(fields[0]);
      arr_v = std::stoll(fields[3]);
      dep_v = std::stoll(fields[4]);
    } catch (const std::exception&) {
      throw CsvError("row " + std::to_string(lineno) + ": malformed number");
    }
    if (l < 0 || l >= instance.line_count())
      throw CsvError("row " + std::to_string(lineno) + ": no line " + fields[0]);
    const Line& line = instance.lines[l];
    int t = -1, s = -1;
    for (int i = 0; i < line.train_count(); ++i)
      if (line.trains[i].name == fields[1]) t = i;
    for (int i = 0; i < line.station_count(); ++i)
      if (line.stations[i].name == fields[2]) s = i;
    if (t < 0) throw CsvError("row " + std::to_string(lineno) + ": unknown train " + fields[1]);
    if (s < 0) throw CsvError("row " + std::to_string(lineno) + ": unknown station " + fields[2]);
    tt.lines[l].arr(t, s) = arr_v;
    tt.lines[l].dep(t, s) = dep_v;
    seen[l][t * line.station_count() + s] = true;
  }
  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    for (int t = 0; t < line.train_count(); ++t)
      for (int s = 0; s < line.station_count(); ++s)
        if (!seen[l][t * line.station_count() + s])
          throw MissingTrain("no row for line " + std::to_string(l) + " train " +
                             line.trains[t].name + " station " + line.stations[s].name);
  }
  return tt;
}

}  // namespace railsched
