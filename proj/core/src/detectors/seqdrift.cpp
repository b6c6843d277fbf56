// SeqDrift1 (Sakthithasan, Pears & Koh, "One Pass Concept Change Detection
// for Data Streams", PAKDD 2013) and SeqDrift2 (Pears, Sakthithasan & Koh,
// "Detecting Concept Change in Dynamic Data Streams", Machine Learning 2014).
//
// Both compare a left repository of older values with a right repository of
// the latest `block_size` values, testing once per filled block. Inputs are
// mapped to [0, 1]. After the k-th test since reset the significance is
// delta' = delta / k, controlling false positives over the sequence of tests.
//
// SeqDrift1 keeps the full left history as running moments and uses the
// variance-aware Hoeffding form
//   eps = sqrt(2 s2 ln(2/delta') / n_h) + 2 ln(2/delta') / (3 n_h)
// SeqDrift2 keeps a uniform reservoir of `reservoir_size` left values and
// uses the Bernstein bound
//   eps = ln(4/delta') / (3 n_h) + sqrt((ln(4/delta') / (3 n_h))^2 + 2 s2 ln(4/delta') / n_h)
// where n_h = 1 / (1/n_left + 1/n_right) and s2 is the pooled variance.
// A drift is declared when |mean_left - mean_right| > eps; otherwise the right
// repository is folded into the left one.

#include <cmath>
#include <numeric>

#include "algorithms.hpp"

namespace driftbench::detail {

namespace {

struct Summary {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
};

Summary summarize(const std::vector<double>& v) {
  RunningMoments m;
  for (double x : v) m.add(x);
  return {static_cast<double>(m.n), m.mean, m.m2};
}

double pooled_variance(const Summary& a, const Summary& b) {
  const double n = a.n + b.n;
  const double gap = a.mean - b.mean;
  return (a.m2 + b.m2 + gap * gap * a.n * b.n / n) / n;
}

}  // namespace

SeqDrift1::SeqDrift1(const DetectorConfig& c)
    : delta(c.param("delta")),
      block_size(static_cast<std::size_t>(c.param("block_size"))),
      map{c.param("lower"), c.param("upper")} {}

DetectorStatus SeqDrift1::update(double x) {
  right.push_back(map(x));
  if (right.size() < block_size) return DetectorStatus::stable;

  bool drift = false;
  if (left.n >= block_size) {
    ++tests;
    const Summary l{static_cast<double>(left.n), left.mean, left.m2};
    const Summary r = summarize(right);
    const double n_h = 1.0 / (1.0 / l.n + 1.0 / r.n);
    const double log_term = std::log(2.0 * static_cast<double>(tests) / delta);
    const double s2 = pooled_variance(l, r);
    const double eps = std::sqrt(2.0 * s2 * log_term / n_h) + 2.0 * log_term / (3.0 * n_h);
    last_difference = l.mean - r.mean;
    drift = std::abs(last_difference) > eps;
  }
  if (drift) return DetectorStatus::drift;
  for (double u : right) left.add(u);
  right.clear();
  return DetectorStatus::stable;
}

SeqDrift2::SeqDrift2(const DetectorConfig& c)
    : delta(c.param("delta")),
      block_size(static_cast<std::size_t>(c.param("block_size"))),
      reservoir_size(static_cast<std::size_t>(c.param("reservoir_size"))),
      map{c.param("lower"), c.param("upper")},
      rng(static_cast<std::uint64_t>(c.param("seed"))) {}

DetectorStatus SeqDrift2::update(double x) {
  right.push_back(map(x));
  if (right.size() < block_size) return DetectorStatus::stable;

  bool drift = false;
  if (left_seen >= block_size) {
    ++tests;
    const Summary l = summarize(reservoir);
    const Summary r = summarize(right);
    const double n_h = 1.0 / (1.0 / l.n + 1.0 / r.n);
    const double log_term = std::log(4.0 * static_cast<double>(tests) / delta);
    const double s2 = pooled_variance(l, r);
    const double linear = log_term / (3.0 * n_h);
    const double eps = linear + std::sqrt(linear * linear + 2.0 * s2 * log_term / n_h);
    last_difference = l.mean - r.mean;
    drift = std::abs(last_difference) > eps;
  }
  if (drift) return DetectorStatus::drift;
  for (double u : right) {
    ++left_seen;
    if (reservoir.size() < reservoir_size) {
      reservoir.push_back(u);
    } else {
      const auto slot = rng.below(left_seen);
      if (slot < reservoir_size) reservoir[slot] = u;
    }
  }
  right.clear();
  return DetectorStatus::stable;
}

}  // namespace driftbench::detail
