#include "driftbench/evaluation.hpp"

#include <algorithm>
#include <future>
#include <ostream>

#include "csv.hpp"
#include "driftbench/errors.hpp"

namespace driftbench {

std::string to_string(PeriodSource s) {
  switch (s) {
    case PeriodSource::expert: return "expert";
    case PeriodSource::consensus: return "consensus";
    case PeriodSource::injected_ground_truth: return "ground_truth";
  }
  return {};
}

PeriodSource parse_period_source(const std::string& s) {
  if (s == "expert") return PeriodSource::expert;
  if (s == "consensus") return PeriodSource::consensus;
  if (s == "ground_truth" || s == "injected_ground_truth") return PeriodSource::injected_ground_truth;
  throw Error(ErrorCode::validation, "unknown label source: " + s, "label_source");
}

std::vector<LabelledPeriod> periods_from_injections(std::span<const DriftInjection> injections) {
  std::vector<LabelledPeriod> out;
  for (const auto& inj : injections) out.push_back({inj.start, inj.end, PeriodSource::injected_ground_truth});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  return out;
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  return *this;
}

ConfusionCounts match_triggers(std::span<const LabelledPeriod> periods, std::span<const DetectionEvent> events,
                               Seconds tolerance) {
  if (tolerance < Seconds{0}) throw Error(ErrorCode::validation, "tolerance must be non-negative", "tolerance");
  std::vector<LabelledPeriod> sorted(periods.begin(), periods.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!(sorted[i].start < sorted[i].end)) {
      throw Error(ErrorCode::validation, "labelled period must have start < end", "end");
    }
    if (i > 0 && sorted[i].start < sorted[i - 1].end) {
      throw Error(ErrorCode::precondition, "labelled periods overlap; merge them with consensus first");
    }
  }

  std::vector<bool> detected(sorted.size(), false);
  ConfusionCounts counts;
  counts.tolerance = tolerance;
  for (const auto& e : events) {
    bool inside_any = false;
    // Periods are sorted and disjoint, so extended windows are ordered too.
    auto first = std::lower_bound(sorted.begin(), sorted.end(), e.timestamp - tolerance,
                                  [](const LabelledPeriod& p, Timestamp t) { return p.end < t; });
    for (auto it = first; it != sorted.end() && it->start - tolerance <= e.timestamp; ++it) {
      if (e.timestamp <= it->end + tolerance) {
        inside_any = true;
        detected[static_cast<std::size_t>(it - sorted.begin())] = true;
      }
    }
    if (!inside_any) ++counts.fp;
  }
  counts.tp = static_cast<std::size_t>(std::count(detected.begin(), detected.end(), true));
  counts.fn = sorted.size() - counts.tp;
  return counts;
}

Ratios precision_sensitivity(const ConfusionCounts& c) {
  Ratios r;
  if (c.tp + c.fp > 0) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) r.sensitivity = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return r;
}

EvalResult evaluate(DetectorKind kind, const ConfusionCounts& counts) {
  const auto r = precision_sensitivity(counts);
  return EvalResult{kind, r.precision, r.sensitivity, counts};
}

BenchmarkTable benchmark_detectors(std::span<const CorpusEntry> corpus, std::span<const DetectorConfig> detectors,
                                   Seconds tolerance) {
  if (corpus.empty()) throw Error(ErrorCode::empty_input, "benchmark corpus is empty");
  for (const auto& entry : corpus) {
    if (entry.periods.empty() && !entry.drift_free) {
      throw Error(ErrorCode::precondition,
                  "series '" + entry.series_id + "' has no labelled periods and is not marked drift-free");
    }
  }
  for (const auto& d : detectors) d.validate();

  struct DetectorRun {
    ConfusionCounts pooled;
    std::vector<ConfusionCounts> per_series;
  };
  auto run_one = [&](const DetectorConfig& config) {
    DetectorRun run;
    run.pooled.tolerance = tolerance;
    for (const auto& entry : corpus) {
      const auto events = run_detector(config, entry.residuals);
      auto counts = match_triggers(entry.periods, events, tolerance);
      run.pooled += counts;
      run.per_series.push_back(counts);
    }
    return run;
  };

  std::vector<std::future<DetectorRun>> pending;
  for (const auto& d : detectors) pending.push_back(std::async(std::launch::async, run_one, std::cref(d)));

  BenchmarkTable table;
  for (std::size_t k = 0; k < detectors.size(); ++k) {
    const auto run = pending[k].get();
    const auto kind = detectors[k].kind;
    table.pooled.push_back(evaluate(kind, run.pooled));
    double p_sum = 0.0;
    double s_sum = 0.0;
    std::size_t p_n = 0;
    std::size_t s_n = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      auto row = evaluate(kind, run.per_series[i]);
      if (row.precision) p_sum += *row.precision, ++p_n;
      if (row.sensitivity) s_sum += *row.sensitivity, ++s_n;
      table.per_series.push_back({corpus[i].series_id, std::move(row)});
    }
    table.macro_precision.push_back(p_n ? std::optional<double>(p_sum / static_cast<double>(p_n)) : std::nullopt);
    table.macro_sensitivity.push_back(s_n ? std::optional<double>(s_sum / static_cast<double>(s_n)) : std::nullopt);
  }
  return table;
}

void write_eval_csv(std::ostream& out, std::span<const EvalResult> rows) {
  out << "detector,precision,sensitivity,tp,fp,fn,tolerance_s\n";
  for (const auto& r : rows) {
    out << to_string(r.kind) << ',';
    if (r.precision) out << csv::format_double(*r.precision);
    out << ',';
    if (r.sensitivity) out << csv::format_double(*r.sensitivity);
    out << ',' << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.fn << ',' << r.counts.tolerance.count() << '\n';
  }
}

}  // namespace driftbench
