// STEPD: statistical test of equal proportions (Nishida & Yamauchi,
// "Detecting Concept Drift Using Statistical Testing", Discovery Science
// 2007).
//
// The most recent `window_size` values are compared with all older values
// since reset. With sums s_o, s_r over n_o, n_r samples of inputs mapped to
// [0, 1] and pooled proportion p = (s_o + s_r) / (n_o + n_r):
//
//   T = (|s_o/n_o - s_r/n_r| - 0.5 (1/n_o + 1/n_r)) / sqrt(p (1 - p) (1/n_o + 1/n_r))
//
// Two-sided p-value below alpha_drift is a drift, below alpha_warning a
// warning. Testing starts once n_o >= window_size.

#include <cmath>

#include "algorithms.hpp"

namespace driftbench::detail {

Stepd::Stepd(const DetectorConfig& c)
    : window(static_cast<std::size_t>(c.param("window_size"))),
      alpha_drift(c.param("alpha_drift")),
      alpha_warning(c.param("alpha_warning")),
      map{c.param("lower"), c.param("upper")} {}

DetectorStatus Stepd::update(double x) {
  const double u = map(x);
  recent.push_back(u);
  recent_sum += u;
  if (recent.size() > window) {
    older_sum += recent.front();
    older_n += 1.0;
    recent_sum -= recent.front();
    recent.pop_front();
  }
  if (older_n < static_cast<double>(window)) return DetectorStatus::stable;

  const double n_r = static_cast<double>(recent.size());
  const double p = (older_sum + recent_sum) / (older_n + n_r);
  const double inv = 1.0 / older_n + 1.0 / n_r;
  const double denom = std::sqrt(p * (1.0 - p) * inv);
  if (!(denom > 0.0)) {
    last_z = 0.0;
    return DetectorStatus::stable;
  }
  last_z = (std::abs(older_sum / older_n - recent_sum / n_r) - 0.5 * inv) / denom;
  const double p_value = 2.0 * normal_upper_tail(std::abs(last_z));
  if (last_z > 0.0 && p_value < alpha_drift) return DetectorStatus::drift;
  if (last_z > 0.0 && p_value < alpha_warning) return DetectorStatus::warning;
  return DetectorStatus::stable;
}

}  // namespace driftbench::detail
