#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "driftbench/ensemble.hpp"
#include "driftbench/time.hpp"

namespace driftbench {

/// Discrete distribution over shared bin edges.
struct Histogram {
  std::vector<double> edges;   // bins + 1, strictly increasing
  std::vector<double> masses;  // sums to 1
};

/// `bins` equal-width edges over [lo, hi]; a zero-width range is widened by
/// 0.5 on each side.
std::vector<double> equal_width_edges(double lo, double hi, std::size_t bins);

/// Counts `values` into the bins defined by `edges`, clipping values beyond
/// the outer edges into the end bins.
Histogram empirical_distribution(std::span<const double> values, std::span<const double> edges,
                                 std::size_t min_samples = 1);

/// (1/sqrt 2) * || sqrt(P) - sqrt(Q) ||_2, bounded by 1.
double hellinger_distance(std::span<const double> p, std::span<const double> q);
/// 0.5 * sum |p_i - q_i|
double total_variation_distance(std::span<const double> p, std::span<const double> q);

enum class DistanceMetric { hellinger, total_variation };

std::string to_string(DistanceMetric m);
DistanceMetric parse_distance_metric(const std::string& s);

double distance(DistanceMetric metric, std::span<const double> p, std::span<const double> q);

struct MetricConfig {
  std::size_t bins = 20;
  std::size_t min_samples = 50;
  DistanceMetric metric = DistanceMetric::hellinger;
};

/// Distance between the residual distribution over [t - window, t) and the
/// one over [u, u + window). Bin edges span every present residual in
/// [t - window, u + window), so magnitude and path length share one binning.
double drift_magnitude(const ResidualSeries& series, Timestamp t, Timestamp u, Seconds window,
                       const MetricConfig& config = {});

/// u - t; throws Error{ordering} unless u > t.
Seconds drift_duration(Timestamp t, Timestamp u);

/// Sum of distances between consecutive concepts at t + k (u - t) / n_steps.
/// The first concept is the window ending at t, the last the window starting
/// at u, and interior concepts are windows centred on their instant. With
/// n_steps = 1 this is exactly drift_magnitude.
double drift_path_length(const ResidualSeries& series, Timestamp t, Timestamp u, std::size_t n_steps,
                         Seconds window, const MetricConfig& config = {});

struct DriftCharacterization {
  std::string period_id;
  Timestamp start;
  Timestamp end;
  double magnitude = 0.0;
  Seconds duration{0};
  double path_length = 0.0;
  std::size_t n_steps = 1;
  DistanceMetric metric = DistanceMetric::hellinger;
  Seconds window{0};
};

DriftCharacterization characterize(const ResidualSeries& series, Timestamp t, Timestamp u, std::size_t n_steps,
                                   Seconds window, const MetricConfig& config = {}, std::string period_id = {});

void write_characterizations_jsonl(std::ostream& out, const std::vector<DriftCharacterization>& rows);

}  // namespace driftbench
