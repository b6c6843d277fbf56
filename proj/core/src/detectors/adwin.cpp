// ADWIN: adaptive windowing (Bifet & Gavalda, "Learning from Time-Changing
// Data with Adaptive Windowing", SDM 2007), ADWIN2 variant.
//
// The window is stored as an exponential histogram: row i keeps at most
// `max_buckets` buckets of 2^i samples, each with its sum and internal
// variance. Every `clock` samples, each split of the window into an older
// part W0 (n0 items) and a newer part W1 (n1 items) is tested, walking from
// the oldest bucket forward, with
//
//   dd  = ln(2 ln(n) / delta)
//   m   = 1/(n0 - min_window + 1) + 1/(n1 - min_window + 1)
//   eps = sqrt(2 m v dd) + (2/3) dd m,      v = window variance
//
// and a change is declared when |mean(W0) - mean(W1)| > eps. The reference
// algorithm then drops W0; here the whole detector resets so every detector
// shares one post-trigger contract.

#include <cmath>

#include "algorithms.hpp"

namespace driftbench::detail {

Adwin::Adwin(const DetectorConfig& c)
    : delta(c.param("delta")),
      clock(static_cast<std::size_t>(c.param("clock"))),
      max_buckets(static_cast<std::size_t>(c.param("max_buckets"))),
      min_window(static_cast<std::size_t>(c.param("min_window"))) {}

void Adwin::insert(double x) {
  if (rows.empty()) rows.emplace_back();
  rows[0].push_front(Bucket{x, 0.0});
  ++width;
  if (width > 1) {
    const double prev_mean = total / static_cast<double>(width - 1);
    variance += static_cast<double>(width - 1) * (x - prev_mean) * (x - prev_mean) / static_cast<double>(width);
  }
  total += x;
  compress();
}

void Adwin::compress() {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() <= max_buckets) break;
    const double n = std::ldexp(1.0, static_cast<int>(i));
    Bucket older = rows[i].back();
    rows[i].pop_back();
    Bucket newer = rows[i].back();
    rows[i].pop_back();
    const double mean_gap = older.total / n - newer.total / n;
    Bucket merged{older.total + newer.total, older.variance + newer.variance + n * n * mean_gap * mean_gap / (2.0 * n)};
    if (i + 1 == rows.size()) rows.emplace_back();
    rows[i + 1].push_front(merged);
  }
}

bool Adwin::detect_cut() {
  const double n = static_cast<double>(width);
  const double dd = std::log(2.0 * std::log(n) / delta);
  const double v = variance / n;
  const double w_min = static_cast<double>(min_window);
  double n0 = 0.0;
  double n1 = n;
  double u0 = 0.0;
  double u1 = total;
  for (std::size_t r = rows.size(); r-- > 0;) {
    const double size = std::ldexp(1.0, static_cast<int>(r));
    const auto& row = rows[r];
    for (auto it = row.rbegin(); it != row.rend(); ++it) {
      n0 += size;
      n1 -= size;
      u0 += it->total;
      u1 -= it->total;
      if (n1 <= 0.0) return false;
      if (n0 < w_min || n1 < w_min) continue;
      const double gap = u0 / n0 - u1 / n1;
      const double m = 1.0 / (n0 - w_min + 1.0) + 1.0 / (n1 - w_min + 1.0);
      const double eps = std::sqrt(2.0 * m * v * dd) + 2.0 / 3.0 * dd * m;
      if (std::abs(gap) > eps) {
        last_difference = gap;
        return true;
      }
    }
  }
  return false;
}

DetectorStatus Adwin::update(double x) {
  insert(x);
  ++ticks;
  if (ticks % clock == 0 && width > 2 * min_window && detect_cut()) return DetectorStatus::drift;
  return DetectorStatus::stable;
}

}  // namespace driftbench::detail
