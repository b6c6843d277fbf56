// Geometric moving average control chart (Roberts, "Control Chart Tests
// Based on Geometric Moving Averages", Technometrics 1959).
//
// The chart smooths the innovation d = x - mean_prev (running mean of the
// earlier samples since reset):
//
//   g = (1 - lambda) g + lambda d
//
// and signals when |g| exceeds L sigma sqrt(lambda / (2 - lambda)), sigma
// being the running standard deviation.

#include <cmath>

#include "algorithms.hpp"

namespace driftbench::detail {

Gma::Gma(const DetectorConfig& c)
    : smoothing(c.param("smoothing")),
      threshold(c.param("threshold")),
      min_instances(static_cast<std::size_t>(c.param("min_instances"))) {}

DetectorStatus Gma::update(double x) {
  const double innovation = moments.n == 0 ? 0.0 : x - moments.mean;
  moments.add(x);
  average = (1.0 - smoothing) * average + smoothing * innovation;
  const double sigma = std::sqrt(moments.variance() * smoothing / (2.0 - smoothing));
  last_score = sigma > 0.0 ? std::abs(average) / sigma : 0.0;
  if (moments.n >= min_instances && last_score > threshold) return DetectorStatus::drift;
  return DetectorStatus::stable;
}

}  // namespace driftbench::detail
