// HDDM_A: Hoeffding-bound drift detection with moving averages (Frias-Blanco
// et al., "Online and Non-Parametric Drift Detection Methods Based on
// Hoeffding's Bounds", IEEE TKDE 2015), structured as MOA's HDDM_A_Test.
//
// Inputs are mapped to [0, 1]. With c the running sum over n samples, the cut
// point for increases is the prefix (c_min, n_min) minimizing
// c/n + sqrt(ln(1/delta_d) / (2n)); a drift is declared when
//
//   c/n - c_min/n_min >= sqrt(m/2 * ln(2/conf)),  m = (n - n_min) / (n_min n)
//
// with conf = drift_confidence (warning_confidence for the warning state).
// The two-sided variant mirrors this for decreases.

#include <cmath>

#include "algorithms.hpp"

namespace driftbench::detail {

namespace {

double cut_bound(double n, double confidence) { return std::sqrt(std::log(1.0 / confidence) / (2.0 * n)); }

double test_bound(double n_cut, double n, double confidence) {
  const double m = (n - n_cut) / (n_cut * n);
  return std::sqrt(m / 2.0 * std::log(2.0 / confidence));
}

}  // namespace

HddmA::HddmA(const DetectorConfig& c)
    : drift_confidence(c.param("drift_confidence")),
      warning_confidence(c.param("warning_confidence")),
      two_sided(c.param("two_sided") != 0.0),
      map{c.param("lower"), c.param("upper")} {}

DetectorStatus HddmA::update(double x) {
  const double u = map(x);
  n += 1.0;
  sum += u;
  const double mean = sum / n;
  const double bound = cut_bound(n, drift_confidence);
  if (n_min == 0.0 || mean + bound <= sum_min / n_min + cut_bound(n_min, drift_confidence)) {
    n_min = n;
    sum_min = sum;
  }
  if (n_max == 0.0 || mean - bound >= sum_max / n_max - cut_bound(n_max, drift_confidence)) {
    n_max = n;
    sum_max = sum;
  }

  const double rise = n_min < n ? mean - sum_min / n_min : 0.0;
  const double fall = n_max < n ? sum_max / n_max - mean : 0.0;
  last_gap = two_sided ? std::max(rise, fall) : rise;

  auto exceeds = [&](double confidence) {
    if (n_min < n && rise >= test_bound(n_min, n, confidence)) return true;
    return two_sided && n_max < n && fall >= test_bound(n_max, n, confidence);
  };
  if (exceeds(drift_confidence)) return DetectorStatus::drift;
  if (exceeds(warning_confidence)) return DetectorStatus::warning;
  return DetectorStatus::stable;
}

}  // namespace driftbench::detail
