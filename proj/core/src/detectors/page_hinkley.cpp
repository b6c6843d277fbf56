// Page-Hinkley test (Page 1954; Hinkley 1971), two-sided, in the form used by
// MOA's PageHinkleyDM with a forgetting factor alpha:
//
//   m_up   = alpha m_up   + (x - mean - delta),  PH_up   = m_up - min(m_up)
//   m_down = alpha m_down + (x - mean + delta),  PH_down = max(m_down) - m_down
//
// where mean is the running mean since reset. Drift when either statistic
// exceeds lambda after `min_instances` samples.

#include <algorithm>

#include "algorithms.hpp"

namespace driftbench::detail {

PageHinkley::PageHinkley(const DetectorConfig& c)
    : delta(c.param("delta")),
      lambda(c.param("lambda")),
      alpha(c.param("alpha")),
      min_instances(static_cast<std::size_t>(c.param("min_instances"))) {}

double PageHinkley::statistic() const noexcept { return std::max(sum_up - min_up, max_down - sum_down); }

DetectorStatus PageHinkley::update(double x) {
  moments.add(x);
  sum_up = alpha * sum_up + (x - moments.mean - delta);
  min_up = std::min(min_up, sum_up);
  sum_down = alpha * sum_down + (x - moments.mean + delta);
  max_down = std::max(max_down, sum_down);
  if (moments.n >= min_instances && statistic() > lambda) return DetectorStatus::drift;
  return DetectorStatus::stable;
}

}  // namespace driftbench::detail
