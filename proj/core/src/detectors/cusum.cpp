// CUSUM: two-sided tabular cumulative sum (Page, "Continuous Inspection
// Schemes", Biometrika 1954; tabular form as in Montgomery's SPC text).
//
// Deviations are taken from the in-control mean, which is zero for residuals
// and for standardized input:
//
//   S+ = max(0, S+ + x - nu)
//   S- = max(0, S- - x - nu)
//
// Drift when max(S+, S-) > h after at least `min_instances` samples.

#include <algorithm>

#include "algorithms.hpp"

namespace driftbench::detail {

Cusum::Cusum(const DetectorConfig& c)
    : drift(c.param("drift")),
      threshold(c.param("threshold")),
      min_instances(static_cast<std::size_t>(c.param("min_instances"))) {}

DetectorStatus Cusum::update(double x) {
  ++n;
  upper = std::max(0.0, upper + x - drift);
  lower = std::max(0.0, lower - x - drift);
  if (n >= min_instances && std::max(upper, lower) > threshold) return DetectorStatus::drift;
  return DetectorStatus::stable;
}

}  // namespace driftbench::detail
