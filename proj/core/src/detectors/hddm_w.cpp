// HDDM_W: Hoeffding/McDiarmid-bound drift detection with weighted (EWMA)
// averages (Frias-Blanco et al., IEEE TKDE 2015), structured as MOA's
// HDDM_W_Test.
//
// A global EWMA with decay lambda is tracked together with its independent
// bounded condition D = sum of squared weights. The reference sample is the
// EWMA state at which EWMA + sqrt(D ln(1/delta_d) / 2) was smallest; the
// recent sample is a fresh EWMA over the values after it. A drift is
// declared when
//
//   recent - reference > sqrt((D_ref + D_recent) ln(1/conf) / 2)
//
// Decreases are monitored symmetrically when two-sided. Inputs are mapped to
// [0, 1].

#include <cmath>

#include "algorithms.hpp"

namespace driftbench::detail {

namespace {

void ewma_add(HddmW::Sample& s, double value, double lambda) {
  if (s.empty) {
    s.empty = false;
    s.ewma = value;
    s.bounded_condition = 1.0;
    return;
  }
  const double decay = 1.0 - lambda;
  s.ewma = lambda * value + decay * s.ewma;
  s.bounded_condition = lambda * lambda + decay * decay * s.bounded_condition;
}

double mcdiarmid(double bounded_condition, double confidence) {
  return std::sqrt(bounded_condition * std::log(1.0 / confidence) / 2.0);
}

double gap_bound(const HddmW::Sample& a, const HddmW::Sample& b, double confidence) {
  return mcdiarmid(a.bounded_condition + b.bounded_condition, confidence);
}

}  // namespace

HddmW::HddmW(const DetectorConfig& c)
    : lambda(c.param("lambda")),
      drift_confidence(c.param("drift_confidence")),
      warning_confidence(c.param("warning_confidence")),
      two_sided(c.param("two_sided") != 0.0),
      map{c.param("lower"), c.param("upper")} {}

DetectorStatus HddmW::update(double x) {
  const double u = map(x);
  ewma_add(total, u, lambda);

  const double eps = mcdiarmid(total.bounded_condition, drift_confidence);
  if (total.ewma + eps < incr_cut) {
    incr_cut = total.ewma + eps;
    incr_reference = total;
    incr_recent = Sample{};
  } else {
    ewma_add(incr_recent, u, lambda);
  }
  if (total.ewma - eps > decr_cut) {
    decr_cut = total.ewma - eps;
    decr_reference = total;
    decr_recent = Sample{};
  } else {
    ewma_add(decr_recent, u, lambda);
  }

  const bool rise_ready = !incr_reference.empty && !incr_recent.empty;
  const bool fall_ready = two_sided && !decr_reference.empty && !decr_recent.empty;
  const double rise = rise_ready ? incr_recent.ewma - incr_reference.ewma : 0.0;
  const double fall = fall_ready ? decr_reference.ewma - decr_recent.ewma : 0.0;
  last_gap = std::max(rise, fall);

  auto exceeds = [&](double confidence) {
    if (rise_ready && rise > gap_bound(incr_reference, incr_recent, confidence)) return true;
    return fall_ready && fall > gap_bound(decr_reference, decr_recent, confidence);
  };
  if (exceeds(drift_confidence)) return DetectorStatus::drift;
  if (exceeds(warning_confidence)) return DetectorStatus::warning;
  return DetectorStatus::stable;
}

}  // namespace driftbench::detail
