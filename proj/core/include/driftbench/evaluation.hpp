#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driftbench/detectors.hpp"
#include "driftbench/ensemble.hpp"
#include "driftbench/scada.hpp"
#include "driftbench/time.hpp"

namespace driftbench {

enum class PeriodSource { expert, consensus, injected_ground_truth };
std::string to_string(PeriodSource s);
PeriodSource parse_period_source(const std::string& s);

/// A drift period taken as ground truth; both ends inclusive.
struct LabelledPeriod {
  Timestamp start;
  Timestamp end;
  PeriodSource source = PeriodSource::expert;
};

std::vector<LabelledPeriod> periods_from_injections(std::span<const DriftInjection> injections);

/// Identifier of the period-level matching rule implemented by match_triggers.
inline constexpr const char* kPeriodHitPolicy = "period_hit";

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::string policy = kPeriodHitPolicy;
  Seconds tolerance{0};

  ConfusionCounts& operator+=(const ConfusionCounts& other);
  bool operator==(const ConfusionCounts&) const = default;
};

/// A period counts as detected when at least one event falls inside
/// [start - tolerance, end + tolerance]; tp and fn count periods. Events that
/// fall inside no extended period are false positives; repeated hits inside a
/// period are neither. Throws Error{precondition} on overlapping periods.
ConfusionCounts match_triggers(std::span<const LabelledPeriod> periods, std::span<const DetectionEvent> events,
                               Seconds tolerance);

struct Ratios {
  std::optional<double> precision;    // tp / (tp + fp), undefined when no events
  std::optional<double> sensitivity;  // tp / (tp + fn), undefined when no periods
};

Ratios precision_sensitivity(const ConfusionCounts& counts);

struct EvalResult {
  DetectorKind kind = DetectorKind::CUSUM;
  std::optional<double> precision;
  std::optional<double> sensitivity;
  ConfusionCounts counts;
};

EvalResult evaluate(DetectorKind kind, const ConfusionCounts& counts);

struct CorpusEntry {
  std::string series_id;
  ResidualSeries residuals;
  std::vector<LabelledPeriod> periods;
  bool drift_free = false;
};

struct SeriesBreakdown {
  std::string series_id;
  EvalResult result;
};

struct BenchmarkTable {
  std::vector<EvalResult> pooled;  // one row per detector config, counts summed over the corpus
  std::vector<SeriesBreakdown> per_series;
  std::vector<std::optional<double>> macro_precision;  // parallel to `pooled`
  std::vector<std::optional<double>> macro_sensitivity;
};

/// Runs every detector over every series and pools the confusion counts.
BenchmarkTable benchmark_detectors(std::span<const CorpusEntry> corpus, std::span<const DetectorConfig> detectors,
                                   Seconds tolerance);

/// `detector,precision,sensitivity,tp,fp,fn,tolerance_s`; undefined ratios are empty.
void write_eval_csv(std::ostream& out, std::span<const EvalResult> rows);

}  // namespace driftbench
