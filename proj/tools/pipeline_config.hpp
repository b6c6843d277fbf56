#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "driftbench/detectors.hpp"
#include "driftbench/drift_metrics.hpp"
#include "driftbench/ensemble.hpp"
#include "driftbench/scada.hpp"
#include "driftbench/service.hpp"

namespace driftbench::cli {

/// Everything a `--config` file may set. Sections are optional; absent keys
/// keep library defaults. Unknown keys are rejected.
///
///   {
///     "generator":  {"rated_power": 2000, "noise_sd": 40, ...},
///     "injections": [{"kind": "sudden", "target": "power_offset", ...}],
///     "ensemble":   {"batch_size": 4320, "hidden_width": 200, ...},
///     "detectors":  {"CUSUM": {"threshold": 10}, ...},
///     "metrics":    {"bins": 20, "min_samples": 50, "metric": "hellinger"},
///     "evaluation": {"tolerance_s": 0, "label_source": "ground_truth", "overlap_threshold": 0.5}
///   }
struct PipelineConfig {
  GeneratorConfig generator;
  std::optional<std::vector<DriftInjection>> injections;
  EnsembleConfig ensemble;
  std::optional<std::vector<DetectorConfig>> detectors;
  MetricConfig metrics;
  Seconds tolerance{0};
  LabelSource label_source = LabelSource::ground_truth;
  double overlap_threshold = 0.5;
};

PipelineConfig parse_pipeline_config(const std::string& json_text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Up to five drifts spread over the generated span: a sudden power offset,
/// a gradual power-scale ramp, a wind-sensor offset, a power limitation and a
/// recurring offset. Starts are snapped to the 10-minute grid. A drift that
/// would run past the span or into the previous one is left out.
std::vector<DriftInjection> mixed_scenario(const GeneratorConfig& config);

}  // namespace driftbench::cli
