#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "railsched/types.hpp"

// Seeded random instances shaped like a metro line at peak hour: a 12-station
// corridor, one headway everywhere, slow all-stop trains around 52 minutes
// end to end and express trains around 32 minutes that stop only at the
// first, middle and last station. Randomization widens a few middle stations
// to two or three tracks and inflates the travel times of a share of the
// trains by up to 100%.

namespace railsched {

struct GeneratorOptions {
  std::uint64_t seed = 0;
  int stations = 12;
  int trains = 6;
  Seconds base_headway_s = 480;
  double express_fraction = 1.0 / 3.0;
  double capacity_boost_fraction = 0.5;
  double travel_inflation_fraction = 0.5;
  double max_inflation = 1.0;  // +100%
  int max_capacity = 3;
};

namespace gendetail {

// splitmix64: stable across platforms, one independent stream per concern so
// that changing one option never shifts another option's draws.
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  // Uniform in (0, 1].
  double unit_positive() { return (static_cast<double>(next() >> 11) + 1.0) / 9007199254740992.0; }

  // Uniform in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) / 9007199254740992.0; }
};

inline std::uint64_t substream(std::uint64_t seed, std::uint64_t tag) {
  Rng mix(seed ^ (tag * 0xd6e8feb86659fd93ULL));
  return mix.next();
}

}  // namespace gendetail

inline Instance generate_instance(const GeneratorOptions& opts) {
  using gendetail::Rng;
  Instance instance;
  Line line;

  const int S = std::max(2, opts.stations);
  const int N = std::max(1, opts.trains);

  for (int s = 0; s < S; ++s) {
    Station st;
    st.name = "S" + std::string(s + 1 < 10 ? "0" : "") + std::to_string(s + 1);
    st.safety_time = opts.base_headway_s;
    st.capacity = 1;
    line.stations.push_back(std::move(st));
  }
  Rng cap_rng(gendetail::substream(opts.seed, 0xCA9ACC17ULL));
  for (int s = 1; s + 1 < S; ++s)
    if (cap_rng.unit() < opts.capacity_boost_fraction && opts.max_capacity >= 2)
      line.stations[s].capacity = static_cast<int>(cap_rng.between(2, opts.max_capacity));

  // Express trains sit at the end of evenly sized blocks, so each one starts
  // behind slower traffic and the overtaking question actually arises.
  const int express_count = std::min(
      N, static_cast<int>(std::llround(opts.express_fraction * static_cast<double>(N))));
  std::vector<bool> is_express(N, false);
  for (int j = 0; j < express_count; ++j)
    is_express[(j + 1) * N / express_count - 1] = true;

  const Seconds dwell_stop = 30;
  const int mid = S / 2;
  const Seconds regular_total = 52 * 60 - dwell_stop * std::max(0, S - 2);
  const Seconds express_total = 32 * 60 - dwell_stop;
  const Seconds seg_regular = std::max<Seconds>(1, llround(static_cast<double>(regular_total) / (S - 1)));
  const Seconds seg_express = std::max<Seconds>(1, llround(static_cast<double>(express_total) / (S - 1)));

  Rng inflate_rng(gendetail::substream(opts.seed, 0x1F7A7E11ULL));
  int regular_seq = 0, express_seq = 0;
  for (int t = 0; t < N; ++t) {
    Train tr;
    const bool express = is_express[t];
    tr.name = (express ? "E" : "R") + std::to_string(express ? ++express_seq : ++regular_seq);
    for (int s = 0; s < S; ++s) {
      const bool stops = express ? (s == 0 || s == mid || s == S - 1) : true;
      const bool terminal = s == 0 || s == S - 1;
      const Seconds dmin = (!terminal && stops) ? dwell_stop : 0;
      tr.dwell_min.push_back(dmin);
      if (!stops)
        tr.dwell_max.push_back(0);  // non-stop: pinned to zero dwell
      else
        tr.dwell_max.push_back(dmin + (s == S - 1 ? 0 : 900));
      tr.earliest_departure.push_back(s == 0 ? t * opts.base_headway_s : 0);
    }
    double factor = 1.0;
    if (inflate_rng.unit() < opts.travel_inflation_fraction)
      factor = 1.0 + inflate_rng.unit_positive() * opts.max_inflation;
    for (int s = 0; s + 1 < S; ++s) {
      const Seconds base = express ? seg_express : seg_regular;
      const Seconds tmin = std::max<Seconds>(1, llround(base * factor));
      tr.travel_min.push_back(tmin);
      tr.travel_max.push_back(std::max<Seconds>(tmin, llround(2.0 * base * factor)));
    }
    line.trains.push_back(std::move(tr));
  }

  instance.lines.push_back(std::move(line));
  return instance;
}

}  // namespace railsched
