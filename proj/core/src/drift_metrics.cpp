#include "driftbench/drift_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "driftbench/errors.hpp"

namespace driftbench {

std::vector<double> equal_width_edges(double lo, double hi, std::size_t bins) {
  if (bins < 1) throw Error(ErrorCode::config, "need at least one bin", "bins");
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<double> edges(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t k = 0; k < bins; ++k) edges[k] = lo + width * static_cast<double>(k);
  edges[bins] = hi;
  return edges;
}

Histogram empirical_distribution(std::span<const double> values, std::span<const double> edges,
                                 std::size_t min_samples) {
  if (edges.size() < 2) throw Error(ErrorCode::config, "need at least two bin edges", "edges");
  for (std::size_t k = 1; k < edges.size(); ++k) {
    if (!(edges[k] > edges[k - 1])) throw Error(ErrorCode::config, "bin edges must be strictly increasing", "edges");
  }
  if (values.size() < std::max<std::size_t>(min_samples, 1)) {
    throw Error(ErrorCode::insufficient_samples, "window holds " + std::to_string(values.size()) +
                                                     " samples, need " + std::to_string(std::max<std::size_t>(min_samples, 1)));
  }
  const std::size_t bins = edges.size() - 1;
  std::vector<double> counts(bins, 0.0);
  for (double v : values) {
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    auto idx = static_cast<std::ptrdiff_t>(std::distance(edges.begin(), it)) - 1;
    idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    counts[static_cast<std::size_t>(idx)] += 1.0;
  }
  const double total = static_cast<double>(values.size());
  for (auto& c : counts) c /= total;
  return Histogram{std::vector<double>(edges.begin(), edges.end()), std::move(counts)};
}

namespace {

void check_pair(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::shape, "distributions have " + std::to_string(p.size()) + " and " +
                                      std::to_string(q.size()) + " bins");
  }
}

}  // namespace

double hellinger_distance(std::span<const double> p, std::span<const double> q) {
  check_pair(p, q);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
    sum += d * d;
  }
  return std::min(1.0, std::sqrt(sum) / std::numbers::sqrt2);
}

double total_variation_distance(std::span<const double> p, std::span<const double> q) {
  check_pair(p, q);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
  return std::min(1.0, 0.5 * sum);
}

std::string to_string(DistanceMetric m) { return m == DistanceMetric::hellinger ? "hellinger" : "tv"; }

DistanceMetric parse_distance_metric(const std::string& s) {
  if (s == "hellinger") return DistanceMetric::hellinger;
  if (s == "tv" || s == "total_variation") return DistanceMetric::total_variation;
  throw Error(ErrorCode::config, "unknown distance metric: " + s, "metric");
}

double distance(DistanceMetric metric, std::span<const double> p, std::span<const double> q) {
  return metric == DistanceMetric::hellinger ? hellinger_distance(p, q) : total_variation_distance(p, q);
}

Seconds drift_duration(Timestamp t, Timestamp u) {
  if (!(u > t)) throw Error(ErrorCode::ordering, "drift end must follow its start");
  return u - t;
}

namespace {

std::vector<double> present_in(const ResidualSeries& series, Timestamp from, Timestamp to) {
  auto first = std::lower_bound(series.entries.begin(), series.entries.end(), from,
                                [](const ResidualEntry& e, Timestamp t) { return e.timestamp < t; });
  std::vector<double> out;
  for (auto it = first; it != series.entries.end() && it->timestamp < to; ++it) {
    if (it->residual) out.push_back(*it->residual);
  }
  return out;
}

std::vector<double> shared_edges(const ResidualSeries& series, Timestamp from, Timestamp to, std::size_t bins) {
  auto all = present_in(series, from, to);
  if (all.empty()) throw Error(ErrorCode::insufficient_samples, "no residuals in characterization span");
  auto [lo, hi] = std::minmax_element(all.begin(), all.end());
  return equal_width_edges(*lo, *hi, bins);
}

struct ConceptWindow {
  Timestamp from;
  Timestamp to;
};

Histogram concept_at(const ResidualSeries& series, ConceptWindow w, const std::vector<double>& edges,
                     std::size_t min_samples, std::size_t step) {
  auto values = present_in(series, w.from, w.to);
  if (values.size() < min_samples) {
    throw Error(ErrorCode::insufficient_samples,
                "concept window " + std::to_string(step) + " [" + format_rfc3339(w.from) + ", " +
                    format_rfc3339(w.to) + ") holds " + std::to_string(values.size()) + " residuals, need " +
                    std::to_string(min_samples));
  }
  return empirical_distribution(values, edges, min_samples);
}

}  // namespace

double drift_path_length(const ResidualSeries& series, Timestamp t, Timestamp u, std::size_t n_steps, Seconds window,
                         const MetricConfig& config) {
  if (n_steps < 1) throw Error(ErrorCode::config, "n_steps must be >= 1", "n_steps");
  if (window <= Seconds{0}) throw Error(ErrorCode::config, "window must be positive", "window");
  if (u < t) throw Error(ErrorCode::ordering, "drift end precedes its start");

  const auto edges = shared_edges(series, t - window, u + window, config.bins);
  const auto span = (u - t).count();
  const auto half = window / 2;
  std::vector<ConceptWindow> windows;
  windows.reserve(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k) {
    if (k == 0) {
      windows.push_back({t - window, t});
    } else if (k == n_steps) {
      windows.push_back({u, u + window});
    } else {
      const Timestamp s = t + Seconds{span * static_cast<std::int64_t>(k) / static_cast<std::int64_t>(n_steps)};
      windows.push_back({s - half, s - half + window});
    }
  }

  double total = 0.0;
  Histogram previous = concept_at(series, windows[0], edges, config.min_samples, 0);
  for (std::size_t k = 1; k <= n_steps; ++k) {
    Histogram next = concept_at(series, windows[k], edges, config.min_samples, k);
    total += distance(config.metric, previous.masses, next.masses);
    previous = std::move(next);
  }
  return total;
}

double drift_magnitude(const ResidualSeries& series, Timestamp t, Timestamp u, Seconds window,
                       const MetricConfig& config) {
  return drift_path_length(series, t, u, 1, window, config);
}

DriftCharacterization characterize(const ResidualSeries& series, Timestamp t, Timestamp u, std::size_t n_steps,
                                   Seconds window, const MetricConfig& config, std::string period_id) {
  DriftCharacterization c;
  c.period_id = std::move(period_id);
  c.start = t;
  c.end = u;
  c.duration = drift_duration(t, u);
  c.magnitude = drift_magnitude(series, t, u, window, config);
  c.path_length = drift_path_length(series, t, u, n_steps, window, config);
  c.n_steps = n_steps;
  c.metric = config.metric;
  c.window = window;
  return c;
}

void write_characterizations_jsonl(std::ostream& out, const std::vector<DriftCharacterization>& rows) {
  for (const auto& c : rows) {
    nlohmann::ordered_json j;
    if (!c.period_id.empty()) j["period_id"] = c.period_id;
    j["start"] = format_rfc3339(c.start);
    j["end"] = format_rfc3339(c.end);
    j["magnitude"] = c.magnitude;
    j["duration_s"] = c.duration.count();
    j["path_length"] = c.path_length;
    j["n_steps"] = c.n_steps;
    j["metric"] = to_string(c.metric);
    j["window_s"] = c.window.count();
    out << j.dump() << '\n';
  }
}

}  // namespace driftbench
