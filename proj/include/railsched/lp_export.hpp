#pragma once

#include <algorithm>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "railsched/events.hpp"
#include "railsched/types.hpp"

// Literal big-M MIP export in LP file format, for cross-checking the native
// engine against any external MILP solver. Variables: continuous arrival s_*
// and departure c_*, binaries x (overtake), xp (precede) and y (overlap).
// The capacity subset family is enumerated only while the row count stays
// under a ceiling; past it the exporter degrades with a warning, since the
// native engine never needs those rows.

namespace railsched {

struct LpExportOptions {
  // Upper bound on emitted capacity-subset rows before SubsetExplosion.
  std::int64_t subset_ceiling = 20000;
};

struct LpExport {
  std::string text;
  std::vector<std::string> warnings;
  int binary_count = 0;
  int row_count = 0;
};

namespace lpdetail {

inline std::string var(const char* base, int l, int a, int b, int s) {
  std::ostringstream o;
  o << base << '_' << l << '_' << a << '_' << b << '_' << s;
  return o.str();
}

inline std::string tvar(const char* base, int l, int t, int s) {
  std::ostringstream o;
  o << base << '_' << l << '_' << t << '_' << s;
  return o.str();
}

// Horizon that dominates any feasible time value.
inline Seconds default_big_m(const Instance& instance) {
  Seconds m = 0;
  Seconds max_release = 0;
  Seconds max_sf = 0;
  int station_count = 0;
  for (const Line& line : instance.lines) {
    station_count = std::max(station_count, line.station_count());
    for (const Station& st : line.stations) max_sf = std::max(max_sf, st.safety_time);
    for (const Train& tr : line.trains) {
      for (Seconds v : tr.travel_max) m += v;
      for (Seconds v : tr.dwell_max) m += v;
      for (Seconds v : tr.earliest_departure) max_release = std::max(max_release, v);
    }
  }
  return m + max_release + static_cast<Seconds>(station_count) * max_sf;
}

inline void subsets_of_size(int n, int k, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> pick;
  std::function<void(int)> rec = [&](int from) {
    if (static_cast<int>(pick.size()) == k) {
      fn(pick);
      return;
    }
    for (int v = from; v < n; ++v) {
      pick.push_back(v);
      rec(v + 1);
      pick.pop_back();
    }
  };
  rec(0);
}

}  // namespace lpdetail

inline LpExport export_mip(const Instance& instance, const FixedVariableMask* mask = nullptr,
                           const LpExportOptions& options = {}) {
  using lpdetail::tvar;
  using lpdetail::var;
  LpExport out;
  const Seconds M = instance.big_m.value_or(lpdetail::default_big_m(instance));

  std::ostringstream obj, rows, bounds, bins;
  int rowid = 0;
  auto row = [&](const std::string& name, const std::string& body) {
    rows << ' ' << name << ": " << body << '\n';
    ++rowid;
  };

  obj << "\\ railsched MIP export, big M = " << M << "\nMinimize\n obj:";
  bool first = true;
  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    for (int t = 0; t < line.train_count(); ++t) {
      obj << (first ? " " : " + ") << tvar("c", l, t, line.last_station());
      first = false;
    }
  }
  if (first) obj << " 0 dummy";
  obj << "\nSubject To\n";

  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    const int n = line.train_count();
    const int m = line.station_count();

    for (int t = 0; t < n; ++t) {
      const Train& tr = line.trains[t];
      for (int s = 0; s < m; ++s) {
        std::ostringstream b;
        if (s + 1 < m) {
          b.str("");
          b << tvar("s", l, t, s + 1) << " - " << tvar("c", l, t, s) << " >= " << tr.travel_min[s];
          row("e2_l" + std::to_string(l) + "_t" + std::to_string(t) + "_s" + std::to_string(s),
              b.str());
          b.str("");
          b << tvar("s", l, t, s + 1) << " - " << tvar("c", l, t, s) << " <= " << tr.travel_max[s];
          row("e3_l" + std::to_string(l) + "_t" + std::to_string(t) + "_s" + std::to_string(s),
              b.str());
        }
        b.str("");
        b << tvar("c", l, t, s) << " - " << tvar("s", l, t, s) << " >= " << tr.dwell_min[s];
        row("e4_l" + std::to_string(l) + "_t" + std::to_string(t) + "_s" + std::to_string(s),
            b.str());
        b.str("");
        b << tvar("c", l, t, s) << " - " << tvar("s", l, t, s) << " <= " << tr.dwell_max[s];
        row("e5_l" + std::to_string(l) + "_t" + std::to_string(t) + "_s" + std::to_string(s),
            b.str());
        // Eq 18 as a variable bound.
        if (tr.earliest_departure[s] > 0)
          bounds << ' ' << tvar("c", l, t, s) << " >= " << tr.earliest_departure[s] << '\n';
      }
    }

    // Binaries per ordered pair and station.
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (a == b) continue;
        for (int s = 0; s < m; ++s) {
          bins << ' ' << var("xp", l, a, b, s) << '\n' << ' ' << var("x", l, a, b, s) << '\n';
          out.binary_count += 2;
          if (line.stations[s].capacity >= 2) {
            bins << ' ' << var("y", l, a, b, s) << '\n';
            ++out.binary_count;
          }
        }
      }

    auto big_m_pair = [&](const char* rowname, const std::string& later, const std::string& earlier,
                          Seconds sf, const std::string& guard) {
      // later >= earlier + sf - (1 - guard) M  <=>  later - earlier - M guard >= sf - M
      std::ostringstream b;
      b << later << " - " << earlier << " - " << M << ' ' << guard << " >= " << (sf - M);
      row(rowname, b.str());
    };

    for (int s = 0; s < m; ++s) {
      const Seconds sf = line.stations[s].safety_time;
      const int cap = line.stations[s].capacity;
      const std::string ss = std::to_string(s);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          if (a == b) continue;
          const std::string tag =
              "_l" + std::to_string(l) + "_t" + std::to_string(a) + "_t" + std::to_string(b) +
              "_s" + ss;
          // Events 3/4: t' = b scheduled after t = a.
          big_m_pair(("e6" + tag).c_str(), tvar("s", l, b, s), tvar("s", l, a, s), sf,
                     var("xp", l, a, b, s));
          big_m_pair(("e7" + tag).c_str(), tvar("c", l, b, s), tvar("c", l, a, s), sf,
                     var("xp", l, a, b, s));
          if (s > 0)
            big_m_pair(("e8" + tag).c_str(), tvar("s", l, b, s), tvar("s", l, a, s), sf,
                       var("xp", l, a, b, s));
          // Events 1/2: t' = b overtakes t = a.
          big_m_pair(("e9" + tag).c_str(), tvar("s", l, b, s), tvar("s", l, a, s), sf,
                     var("x", l, a, b, s));
          big_m_pair(("e10" + tag).c_str(), tvar("c", l, a, s), tvar("c", l, b, s), sf,
                     var("x", l, a, b, s));
          if (s > 0)
            big_m_pair(("e11" + tag).c_str(), tvar("s", l, a, s), tvar("s", l, b, s), sf,
                       var("x", l, b, a, s));
          if (cap == 1)
            big_m_pair(("e13" + tag).c_str(), tvar("s", l, b, s), tvar("c", l, a, s), sf,
                       var("xp", l, a, b, s));
          if (cap >= 2) {
            // Eq 15 with the y escape: s_b >= c_a + sf - (1-xp)M - yM, i.e.
            // s_b - c_a - M xp + M y >= sf - M.
            std::ostringstream b15;
            b15 << tvar("s", l, b, s) << " - " << tvar("c", l, a, s) << " - " << M << ' '
                << var("xp", l, a, b, s) << " + " << M << ' ' << var("y", l, a, b, s)
                << " >= " << (sf - M);
            row("e15" + tag, b15.str());
            std::ostringstream b17;
            b17 << var("y", l, a, b, s) << " - " << var("xp", l, a, b, s) << " <= 0";
            row("e17" + tag, b17.str());
          }
        }

      // Eq 12: exactly one event per unordered pair.
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
          std::ostringstream b12;
          b12 << var("xp", l, a, b, s) << " + " << var("xp", l, b, a, s) << " + "
              << var("x", l, a, b, s) << " + " << var("x", l, b, a, s) << " = 1";
          row("e12_l" + std::to_string(l) + "_t" + std::to_string(a) + "_t" + std::to_string(b) +
                  "_s" + ss,
              b12.str());
        }

      // Eq 14. Capacity one: no overtaking at all. Wider stations: every
      // (cap+1)-subset of trains may hold at most C(cap+1,2)-1 overtake pairs.
      if (cap == 1) {
        for (int a = 0; a < n; ++a)
          for (int b = a + 1; b < n; ++b) {
            std::ostringstream b14;
            b14 << var("x", l, a, b, s) << " + " << var("x", l, b, a, s) << " <= 0";
            row("e14_l" + std::to_string(l) + "_t" + std::to_string(a) + "_t" + std::to_string(b) +
                    "_s" + ss,
                b14.str());
          }
      } else if (n > cap) {
        std::int64_t emitted = 0;
        bool exploded = false;
        lpdetail::subsets_of_size(n, cap + 1, [&](const std::vector<int>& subset) {
          if (exploded) return;
          if (emitted >= options.subset_ceiling) {
            exploded = true;
            return;
          }
          std::ostringstream b14;
          bool first_term = true;
          for (size_t i = 0; i < subset.size(); ++i)
            for (size_t j = i + 1; j < subset.size(); ++j) {
              b14 << (first_term ? "" : " + ") << var("x", l, subset[i], subset[j], s) << " + "
                  << var("x", l, subset[j], subset[i], s);
              first_term = false;
            }
          const int pairs_in_subset = (cap + 1) * cap / 2;
          b14 << " <= " << (pairs_in_subset - 1);
          row("e14_l" + std::to_string(l) + "_s" + ss + "_k" + std::to_string(emitted), b14.str());
          ++emitted;
        });
        if (exploded) {
          out.warnings.push_back("SubsetExplosion: station " + line.stations[s].name + " of line " +
                                 std::to_string(l) +
                                 " exceeds the subset ceiling; eq14 family truncated");
          rows << "\\ warning: eq14 subsets truncated at station " << s << " of line " << l
               << '\n';
        }
      }

      // Eq 16: simultaneous partners per train.
      if (cap >= 2)
        for (int t = 0; t < n; ++t) {
          std::ostringstream b16;
          bool first_term = true;
          for (int o = 0; o < n; ++o) {
            if (o == t) continue;
            b16 << (first_term ? "" : " + ") << var("y", l, t, o, s) << " + " << var("y", l, o, t, s)
                << " + " << var("x", l, t, o, s) << " + " << var("x", l, o, t, s);
            first_term = false;
          }
          if (first_term) continue;
          b16 << " <= " << (cap - 1);
          row("e16_l" + std::to_string(l) + "_t" + std::to_string(t) + "_s" + ss, b16.str());
        }
    }

    // FIFO linking between consecutive stations.
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (a == b) continue;
        for (int s = 0; s + 1 < m; ++s) {
          std::ostringstream bf;
          bf << var("xp", l, a, b, s) << " + " << var("x", l, b, a, s) << " - "
             << var("xp", l, a, b, s + 1) << " - " << var("x", l, a, b, s + 1) << " <= 0";
          row("efifo_l" + std::to_string(l) + "_t" + std::to_string(a) + "_t" + std::to_string(b) +
                  "_s" + std::to_string(s),
              bf.str());
        }
      }

    // Mask fixings as variable bounds.
    if (mask) {
      const LineMask& lm = mask->lines[l];
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          if (a == b) continue;
          for (int s = 0; s < m; ++s)
            if (lm.forbids(a, b, s)) bounds << ' ' << var("x", l, a, b, s) << " = 0\n";
        }
      for (int p = 0; p < pair_count(n); ++p) {
        const EventChoice fix = lm.first_station_fix[p];
        if (fix == EventChoice::undecided) continue;
        auto [a, b] = pair_trains(p, n);
        const int leader = arrival_leader(fix) == 0 ? a : b;
        bounds << ' ' << var("xp", l, leader, leader == a ? b : a, 0) << " = 1\n";
      }
    }
  }

  out.row_count = rowid;
  std::ostringstream full;
  full << obj.str() << rows.str();
  const std::string bounds_text = bounds.str();
  if (!bounds_text.empty()) full << "Bounds\n" << bounds_text;
  const std::string bins_text = bins.str();
  if (!bins_text.empty()) full << "Binaries\n" << bins_text;
  full << "End\n";
  out.text = full.str();
  return out;
}

}  // namespace railsched
