#pragma once

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>

#include "railsched/types.hpp"

// Static time-distance diagram: time on the x axis, stations stacked on the
// y axis as shaded bands, one polyline per train through its (arrival,
// station) and (departure, station) points. Overtakes show up as polyline
// crossings, and with FIFO running on open track every crossing lies inside
// a station band. Geometry is fixed: 1000 wide, 80 + 40 per station tall,
// band height 12.

namespace railsched {

struct EmptyTimetable : Error {
  using Error::Error;
};

namespace svgdetail {

constexpr int kWidth = 1000;
constexpr int kMarginLeft = 90;
constexpr int kMarginRight = 30;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 40;
constexpr int kRowHeight = 40;
constexpr int kBandHeight = 12;

inline const char* color(int i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  return palette[i % 8];
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

}  // namespace svgdetail

inline std::string render_time_distance_svg(const Instance& instance,
                                            const Timetable& timetable) {
  using namespace svgdetail;
  int total_stations = 0;
  int total_trains = 0;
  Seconds horizon = 0;
  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    total_stations += line.station_count();
    total_trains += line.train_count();
    const LineTimetable& lt = timetable.lines.at(l);
    for (int t = 0; t < line.train_count(); ++t)
      for (int s = 0; s < line.station_count(); ++s)
        horizon = std::max(horizon, lt.dep(t, s));
  }
  if (total_trains == 0) throw EmptyTimetable("no trains to draw");
  horizon = std::max<Seconds>(horizon, 1);

  const int height = kMarginTop + kMarginBottom + kRowHeight * (total_stations - 1) + kBandHeight;
  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  auto x_of = [&](Seconds v) {
    return kMarginLeft + plot_w * static_cast<double>(v) / static_cast<double>(horizon);
  };
  auto band_top = [&](int row) { return kMarginTop + row * kRowHeight; };
  auto y_of = [&](int row) { return band_top(row) + kBandHeight / 2.0; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << kWidth << ' ' << height << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";

  // Station bands and labels.
  int row = 0;
  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    for (int s = 0; s < line.station_count(); ++s, ++row) {
      svg << "<rect class=\"station-band\" x=\"" << kMarginLeft << "\" y=\"" << band_top(row)
          << "\" width=\"" << fmt(plot_w) << "\" height=\"" << kBandHeight
          << "\" fill=\"#e8eef7\"/>\n";
      svg << "<text x=\"" << (kMarginLeft - 6) << "\" y=\"" << fmt(y_of(row) + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
          << line.stations[s].name << "</text>\n";
    }
  }

  // Time axis ticks every tenth of the horizon.
  for (int k = 0; k <= 10; ++k) {
    const Seconds tick = horizon * k / 10;
    svg << "<line x1=\"" << fmt(x_of(tick)) << "\" y1=\"" << kMarginTop - 8 << "\" x2=\""
        << fmt(x_of(tick)) << "\" y2=\"" << (height - kMarginBottom + 8)
        << "\" stroke=\"#cccccc\" stroke-width=\"0.5\"/>\n";
    svg << "<text x=\"" << fmt(x_of(tick)) << "\" y=\"" << (height - kMarginBottom + 24)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << tick
        << "s</text>\n";
  }

  int color_index = 0;
  int row_base = 0;
  for (int l = 0; l < instance.line_count(); ++l) {
    const Line& line = instance.lines[l];
    const LineTimetable& lt = timetable.lines.at(l);
    for (int t = 0; t < line.train_count(); ++t, ++color_index) {
      std::ostringstream points;
      for (int s = 0; s < line.station_count(); ++s) {
        points << fmt(x_of(lt.arr(t, s))) << ',' << fmt(y_of(row_base + s)) << ' '
               << fmt(x_of(lt.dep(t, s))) << ',' << fmt(y_of(row_base + s)) << ' ';
      }
      svg << "<polyline class=\"train\" fill=\"none\" stroke=\"" << color(color_index)
          << "\" stroke-width=\"1.8\" points=\"" << points.str() << "\"/>\n";
      svg << "<text x=\"" << fmt(x_of(lt.arr(t, 0)) + 3) << "\" y=\""
          << fmt(y_of(row_base) - 4) << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\""
          << color(color_index) << "\">" << line.trains[t].name << "</text>\n";
    }
    row_base += line.station_count();
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace railsched
