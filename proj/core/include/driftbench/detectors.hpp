#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "driftbench/ensemble.hpp"
#include "driftbench/time.hpp"

namespace driftbench {

enum class DetectorKind { ADWIN, CUSUM, GMA, HDDM_A, HDDM_W, PH, SEED, SeqDrift1, SeqDrift2, STEPD };

inline constexpr std::array<DetectorKind, 10> kAllDetectorKinds{
    DetectorKind::ADWIN, DetectorKind::CUSUM,     DetectorKind::GMA,       DetectorKind::HDDM_A, DetectorKind::HDDM_W,
    DetectorKind::PH,    DetectorKind::SEED,      DetectorKind::SeqDrift1, DetectorKind::SeqDrift2, DetectorKind::STEPD};

std::string to_string(DetectorKind kind);
/// Throws Error{validation} for names outside the ten supported detectors.
DetectorKind parse_detector_kind(const std::string& name);

enum class InputTransform { raw, abs, standardized };
std::string to_string(InputTransform t);
InputTransform parse_input_transform(const std::string& s);

enum class DetectorStatus { stable, warning, drift };
std::string to_string(DetectorStatus s);

/// Description of one tunable detector parameter.
struct ParameterSpec {
  enum class Domain { positive, non_negative, open_unit, half_open_unit, integer, boolean, finite };
  std::string name;
  double default_value = 0.0;
  Domain domain = Domain::positive;
  double integer_min = 1.0;  // integer domain only
  std::string description;
};

/// Parameters accepted by `kind`, with their defaults. Every kind also
/// accepts `warmup`, the number of samples the online standardizer absorbs
/// before the algorithm sees data.
const std::vector<ParameterSpec>& parameter_specs(DetectorKind kind);

struct DetectorConfig {
  DetectorKind kind = DetectorKind::CUSUM;
  InputTransform transform = InputTransform::standardized;
  std::map<std::string, double> params;  // overrides; unspecified names take defaults

  static DetectorConfig defaults(DetectorKind kind);

  /// Resolved value (override or default). Throws Error{config} for unknown names.
  double param(const std::string& name) const;
  /// Throws Error{config} naming the first unknown or out-of-range parameter.
  void validate() const;
};

struct StepResult {
  DetectorStatus status = DetectorStatus::stable;
  double statistic = 0.0;
  std::size_t samples_seen = 0;  // since the last reset, including this sample
};

namespace detail {
struct AlgorithmState;
}

/// Running state of one detector: input transform plus the algorithm's
/// sufficient statistics. After a drift the state resets itself, so the
/// object after a trigger equals a freshly constructed one.
class Detector {
 public:
  explicit Detector(DetectorConfig config);
  Detector(const Detector& other);
  Detector& operator=(const Detector& other);
  Detector(Detector&&) noexcept;
  Detector& operator=(Detector&&) noexcept;
  ~Detector();

  /// Throws Error{input} on non-finite values.
  StepResult step(double value);
  void reset();

  DetectorKind kind() const noexcept { return config_.kind; }
  const DetectorConfig& config() const noexcept { return config_; }
  DetectorStatus status() const noexcept { return status_; }
  std::size_t samples_seen() const noexcept { return samples_seen_; }
  /// Fewest samples since reset before a drift can be reported.
  std::size_t min_samples() const;

  bool operator==(const Detector& other) const;

 private:
  DetectorConfig config_;
  std::unique_ptr<detail::AlgorithmState> state_;
  std::size_t samples_seen_ = 0;
  DetectorStatus status_ = DetectorStatus::stable;
};

Detector make_detector(const DetectorConfig& config);
DetectorStatus detector_step(Detector& state, double value);

struct DetectionEvent {
  DetectorKind kind = DetectorKind::CUSUM;
  Timestamp timestamp;
  std::size_t sample_index = 0;  // counts consumed (non-missing) values only
  double statistic = 0.0;

  bool operator==(const DetectionEvent&) const = default;
};

/// Folds the detector over `values`; `timestamps` must match in length.
std::vector<DetectionEvent> run_detector(const DetectorConfig& config, std::span<const double> values,
                                         std::span<const Timestamp> timestamps);

/// Skips missing residuals. Throws Error{empty_input} if none are present.
std::vector<DetectionEvent> run_detector(const DetectorConfig& config, const ResidualSeries& residuals);

/// `detector,timestamp,sample_index,statistic`
void write_events_csv(std::ostream& out, const std::vector<DetectionEvent>& events);
std::vector<DetectionEvent> read_events_csv(std::istream& in);

/// JSON object keyed by detector name, each value holding named parameters
/// and an optional `transform`. Key order is preserved.
std::vector<DetectorConfig> parse_detector_configs(const std::string& json_text);
std::string detector_configs_to_json(const std::vector<DetectorConfig>& configs);
std::vector<DetectorConfig> default_detector_configs();

}  // namespace driftbench
