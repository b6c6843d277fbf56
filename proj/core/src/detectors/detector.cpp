#include <algorithm>
#include <cmath>

#include "algorithms.hpp"
#include "driftbench/errors.hpp"

namespace driftbench {

namespace detail {

double UnitMap::operator()(double x) const noexcept {
  return std::clamp((x - lower) / (upper - lower), 0.0, 1.0);
}

void RunningMoments::add(double x) noexcept {
  ++n;
  const double d = x - mean;
  mean += d / static_cast<double>(n);
  m2 += d * (x - mean);
}

double RunningMoments::variance() const noexcept {
  return n < 2 ? 0.0 : m2 / static_cast<double>(n - 1);
}

double normal_upper_tail(double z) noexcept { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

Algorithm make_algorithm(const DetectorConfig& c) {
  switch (c.kind) {
    case DetectorKind::ADWIN: return Adwin(c);
    case DetectorKind::CUSUM: return Cusum(c);
    case DetectorKind::GMA: return Gma(c);
    case DetectorKind::HDDM_A: return HddmA(c);
    case DetectorKind::HDDM_W: return HddmW(c);
    case DetectorKind::PH: return PageHinkley(c);
    case DetectorKind::SEED: return Seed(c);
    case DetectorKind::SeqDrift1: return SeqDrift1(c);
    case DetectorKind::SeqDrift2: return SeqDrift2(c);
    case DetectorKind::STEPD: return Stepd(c);
  }
  throw Error(ErrorCode::config, "unknown detector kind");
}

}  // namespace detail

// ---------------------------------------------------------------------------

std::string to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::ADWIN: return "ADWIN";
    case DetectorKind::CUSUM: return "CUSUM";
    case DetectorKind::GMA: return "GMA";
    case DetectorKind::HDDM_A: return "HDDM_A";
    case DetectorKind::HDDM_W: return "HDDM_W";
    case DetectorKind::PH: return "PH";
    case DetectorKind::SEED: return "SEED";
    case DetectorKind::SeqDrift1: return "SeqDrift1";
    case DetectorKind::SeqDrift2: return "SeqDrift2";
    case DetectorKind::STEPD: return "STEPD";
  }
  return {};
}

DetectorKind parse_detector_kind(const std::string& name) {
  for (auto k : kAllDetectorKinds) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::validation, "unknown detector kind: " + name, "detector");
}

std::string to_string(InputTransform t) {
  switch (t) {
    case InputTransform::raw: return "raw";
    case InputTransform::abs: return "abs";
    case InputTransform::standardized: return "standardized";
  }
  return {};
}

InputTransform parse_input_transform(const std::string& s) {
  if (s == "raw") return InputTransform::raw;
  if (s == "abs") return InputTransform::abs;
  if (s == "standardized") return InputTransform::standardized;
  throw Error(ErrorCode::config, "unknown input transform: " + s, "transform");
}

std::string to_string(DetectorStatus s) {
  switch (s) {
    case DetectorStatus::stable: return "stable";
    case DetectorStatus::warning: return "warning";
    case DetectorStatus::drift: return "drift";
  }
  return {};
}

namespace {

using Domain = ParameterSpec::Domain;

ParameterSpec warmup_spec() {
  return {"warmup", 30, Domain::integer, 2, "samples absorbed by the online standardizer before detection starts"};
}

std::vector<ParameterSpec> bounded_specs() {
  return {{"lower", -4.0, Domain::finite, 1, "value mapped to 0 before the bounded-input test"},
          {"upper", 4.0, Domain::finite, 1, "value mapped to 1 before the bounded-input test"}};
}

std::vector<ParameterSpec> build_specs(DetectorKind kind) {
  std::vector<ParameterSpec> s;
  switch (kind) {
    case DetectorKind::ADWIN:
      s = {{"delta", 0.002, Domain::open_unit, 1, "confidence of the cut test"},
           {"clock", 32, Domain::integer, 1, "samples between cut checks"},
           {"max_buckets", 5, Domain::integer, 2, "buckets per exponential-histogram row"},
           {"min_window", 5, Domain::integer, 1, "smallest sub-window considered for a cut"}};
      break;
    case DetectorKind::CUSUM:
      s = {{"drift", 0.5, Domain::non_negative, 1, "allowance nu subtracted from each deviation"},
           {"threshold", 10.0, Domain::positive, 1, "decision threshold h"},
           {"min_instances", 30, Domain::integer, 1, "samples before a drift may be reported"}};
      break;
    case DetectorKind::GMA:
      s = {{"smoothing", 0.05, Domain::open_unit, 1, "weight of the newest sample in the moving average"},
           {"threshold", 4.0, Domain::positive, 1, "control limit in steady-state standard deviations"},
           {"min_instances", 30, Domain::integer, 1, "samples before a drift may be reported"}};
      break;
    case DetectorKind::HDDM_A:
      s = {{"drift_confidence", 0.001, Domain::open_unit, 1, "significance of the drift test"},
           {"warning_confidence", 0.005, Domain::open_unit, 1, "significance of the warning test"},
           {"two_sided", 1, Domain::boolean, 1, "also test for mean decreases"}};
      break;
    case DetectorKind::HDDM_W:
      s = {{"lambda", 0.05, Domain::open_unit, 1, "EWMA weight of the newest sample"},
           {"drift_confidence", 0.001, Domain::open_unit, 1, "significance of the drift test"},
           {"warning_confidence", 0.005, Domain::open_unit, 1, "significance of the warning test"},
           {"two_sided", 1, Domain::boolean, 1, "also test for mean decreases"}};
      break;
    case DetectorKind::PH:
      s = {{"delta", 0.25, Domain::non_negative, 1, "magnitude of change tolerated per sample"},
           {"lambda", 25.0, Domain::positive, 1, "detection threshold"},
           {"alpha", 0.9999, Domain::half_open_unit, 1, "forgetting factor of the cumulative sum"},
           {"min_instances", 30, Domain::integer, 1, "samples before a drift may be reported"}};
      break;
    case DetectorKind::SEED:
      s = {{"delta", 0.05, Domain::open_unit, 1, "confidence of the block-boundary test"},
           {"block_size", 32, Domain::integer, 2, "samples per block"},
           {"epsilon_prime", 0.01, Domain::non_negative, 1, "mean gap under which adjacent blocks merge"},
           {"compression_term", 75, Domain::integer, 2, "block count that triggers compression"}};
      break;
    case DetectorKind::SeqDrift1:
      s = {{"delta", 0.01, Domain::open_unit, 1, "confidence of the sequential test"},
           {"block_size", 200, Domain::integer, 2, "samples in the right repository"}};
      break;
    case DetectorKind::SeqDrift2:
      s = {{"delta", 0.01, Domain::open_unit, 1, "confidence of the sequential test"},
           {"block_size", 200, Domain::integer, 2, "samples in the right repository"},
           {"reservoir_size", 200, Domain::integer, 2, "capacity of the left reservoir"},
           {"seed", 1, Domain::integer, 0, "reservoir sampling seed"}};
      break;
    case DetectorKind::STEPD:
      s = {{"window_size", 30, Domain::integer, 1, "recent window length"},
           {"alpha_drift", 0.003, Domain::open_unit, 1, "significance for drift"},
           {"alpha_warning", 0.05, Domain::open_unit, 1, "significance for warning"}};
      break;
  }
  switch (kind) {
    case DetectorKind::HDDM_A:
    case DetectorKind::HDDM_W:
    case DetectorKind::SeqDrift1:
    case DetectorKind::SeqDrift2:
    case DetectorKind::STEPD: {
      auto b = bounded_specs();
      s.insert(s.end(), b.begin(), b.end());
      break;
    }
    default: break;
  }
  s.push_back(warmup_spec());
  return s;
}

bool in_domain(const ParameterSpec& spec, double v) {
  if (!std::isfinite(v)) return false;
  switch (spec.domain) {
    case Domain::positive: return v > 0.0;
    case Domain::non_negative: return v >= 0.0;
    case Domain::open_unit: return v > 0.0 && v < 1.0;
    case Domain::half_open_unit: return v > 0.0 && v <= 1.0;
    case Domain::integer: return v == std::floor(v) && v >= spec.integer_min;
    case Domain::boolean: return v == 0.0 || v == 1.0;
    case Domain::finite: return true;
  }
  return false;
}

}  // namespace

const std::vector<ParameterSpec>& parameter_specs(DetectorKind kind) {
  static const auto table = [] {
    std::array<std::vector<ParameterSpec>, kAllDetectorKinds.size()> t;
    for (auto k : kAllDetectorKinds) t[static_cast<std::size_t>(k)] = build_specs(k);
    return t;
  }();
  return table[static_cast<std::size_t>(kind)];
}

DetectorConfig DetectorConfig::defaults(DetectorKind kind) {
  DetectorConfig c;
  c.kind = kind;
  return c;
}

double DetectorConfig::param(const std::string& name) const {
  for (const auto& spec : parameter_specs(kind)) {
    if (spec.name != name) continue;
    auto it = params.find(name);
    return it == params.end() ? spec.default_value : it->second;
  }
  throw Error(ErrorCode::config, to_string(kind) + " has no parameter '" + name + "'", name);
}

void DetectorConfig::validate() const {
  const auto& specs = parameter_specs(kind);
  for (const auto& [name, value] : params) {
    auto it = std::find_if(specs.begin(), specs.end(), [&](const ParameterSpec& s) { return s.name == name; });
    if (it == specs.end()) throw Error(ErrorCode::config, to_string(kind) + " has no parameter '" + name + "'", name);
    if (!in_domain(*it, value)) {
      throw Error(ErrorCode::config, to_string(kind) + " parameter '" + name + "' out of range", name);
    }
  }
  for (const auto& spec : specs) {
    if (spec.name == "lower" && !(param("upper") > param("lower"))) {
      throw Error(ErrorCode::config, to_string(kind) + " requires upper > lower", "upper");
    }
  }
}

// ---------------------------------------------------------------------------

Detector::Detector(DetectorConfig config) : config_(std::move(config)) {
  config_.validate();
  state_ = std::make_unique<detail::AlgorithmState>(detail::AlgorithmState{detail::make_algorithm(config_), {}});
}

Detector::Detector(const Detector& other)
    : config_(other.config_),
      state_(std::make_unique<detail::AlgorithmState>(*other.state_)),
      samples_seen_(other.samples_seen_),
      status_(other.status_) {}

Detector& Detector::operator=(const Detector& other) {
  if (this != &other) {
    config_ = other.config_;
    state_ = std::make_unique<detail::AlgorithmState>(*other.state_);
    samples_seen_ = other.samples_seen_;
    status_ = other.status_;
  }
  return *this;
}

Detector::Detector(Detector&&) noexcept = default;
Detector& Detector::operator=(Detector&&) noexcept = default;
Detector::~Detector() = default;

void Detector::reset() {
  state_ = std::make_unique<detail::AlgorithmState>(detail::AlgorithmState{detail::make_algorithm(config_), {}});
  samples_seen_ = 0;
  status_ = DetectorStatus::stable;
}

std::size_t Detector::min_samples() const {
  const std::size_t algo = std::visit([](const auto& a) { return a.min_samples(); }, state_->algorithm);
  if (config_.transform == InputTransform::standardized) {
    return static_cast<std::size_t>(config_.param("warmup")) + algo;
  }
  return algo;
}

bool Detector::operator==(const Detector& other) const {
  return config_.kind == other.config_.kind && config_.transform == other.config_.transform &&
         config_.params == other.config_.params && samples_seen_ == other.samples_seen_ &&
         status_ == other.status_ && *state_ == *other.state_;
}

StepResult Detector::step(double value) {
  if (!std::isfinite(value)) throw Error(ErrorCode::input, "detector input must be finite");
  ++samples_seen_;

  double x = value;
  switch (config_.transform) {
    case InputTransform::raw: break;
    case InputTransform::abs: x = std::abs(value); break;
    case InputTransform::standardized: {
      auto& s = state_->standardizer;
      const auto warmup = static_cast<std::size_t>(config_.param("warmup"));
      if (s.n < warmup) {
        s.add(value);
        status_ = DetectorStatus::stable;
        return {status_, 0.0, samples_seen_};
      }
      const double sd = std::sqrt(s.variance());
      const double scale = std::max(1.0, std::abs(s.mean));
      x = sd > 1e-12 * scale ? (value - s.mean) / sd : 0.0;
      s.add(value);
      break;
    }
  }

  StepResult result;
  result.samples_seen = samples_seen_;
  result.status = std::visit([x](auto& a) { return a.update(x); }, state_->algorithm);
  result.statistic = std::visit([](const auto& a) { return a.statistic(); }, state_->algorithm);
  status_ = result.status;
  if (result.status == DetectorStatus::drift) reset();
  return result;
}

Detector make_detector(const DetectorConfig& config) { return Detector(config); }

DetectorStatus detector_step(Detector& state, double value) { return state.step(value).status; }

std::vector<DetectionEvent> run_detector(const DetectorConfig& config, std::span<const double> values,
                                         std::span<const Timestamp> timestamps) {
  if (values.size() != timestamps.size()) throw Error(ErrorCode::shape, "values and timestamps differ in length");
  Detector detector(config);
  std::vector<DetectionEvent> events;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto r = detector.step(values[i]);
    if (r.status == DetectorStatus::drift) events.push_back({config.kind, timestamps[i], i, r.statistic});
  }
  return events;
}

std::vector<DetectionEvent> run_detector(const DetectorConfig& config, const ResidualSeries& residuals) {
  std::vector<double> values;
  std::vector<Timestamp> times;
  values.reserve(residuals.entries.size());
  times.reserve(residuals.entries.size());
  for (const auto& e : residuals.entries) {
    if (!e.residual) continue;
    values.push_back(*e.residual);
    times.push_back(e.timestamp);
  }
  if (values.empty()) throw Error(ErrorCode::empty_input, "residual series has no present values");
  return run_detector(config, values, times);
}

}  // namespace driftbench
