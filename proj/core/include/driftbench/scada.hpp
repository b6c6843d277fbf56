#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "driftbench/time.hpp"

namespace driftbench {

/// One 10-minute SCADA sample of the power model's predictors and response.
struct ScadaRecord {
  Timestamp timestamp;
  double ambient_temp = 0.0;  // degC
  double wind_speed = 0.0;    // m/s
  double turbulence = 0.0;    // intensity, [0, 1]
  double power = 0.0;         // kW

  bool operator==(const ScadaRecord&) const = default;
};

struct TurbineSeries {
  std::string turbine_id;
  std::vector<ScadaRecord> records;
};

struct ParseResult {
  TurbineSeries series;
  std::size_t dropped_count = 0;
};

/// Reads `timestamp,ambient_temp,wind_speed,turbulence,power`. Rows with
/// unparseable or out-of-range numerics are dropped and counted; the result
/// is sorted by timestamp.
ParseResult parse_scada_csv(std::istream& source, const std::string& turbine_id);
void write_scada_csv(std::ostream& out, const TurbineSeries& series);

// ---------------------------------------------------------------------------
// Synthetic generator

enum class InjectionKind { sudden, gradual, recurring, power_limitation };
enum class InjectionTarget { power_offset, power_scale, sensor_offset };
enum class SensorChannel { ambient_temp, wind_speed, turbulence };

/// A ground-truth drift applied to a generated series over [start, end).
struct DriftInjection {
  InjectionKind kind = InjectionKind::sudden;
  InjectionTarget target = InjectionTarget::power_offset;
  SensorChannel channel = SensorChannel::wind_speed;  // sensor_offset only
  Timestamp start;
  Timestamp end;
  double amplitude = 0.0;
  Seconds period{0};  // recurring only

  bool operator==(const DriftInjection&) const = default;
};

/// Throws Error{validation} if the injection breaks its invariants.
void validate(const DriftInjection& injection);

struct GeneratorConfig {
  double rated_power = 2000.0;  // kW
  double cut_in = 3.0;          // m/s
  double rated_speed = 12.0;    // m/s
  double cut_out = 25.0;        // m/s
  double noise_sd = 40.0;       // kW
  std::uint64_t seed = 1;
  std::size_t n_records = 52560;
  Timestamp start = from_unix(1451606400);  // 2016-01-01T00:00:00Z

  // Weather model.
  double temp_mean = 10.0;          // degC, annual mean
  double temp_amplitude = 10.0;     // degC, seasonal half-swing
  double temp_daily_amplitude = 3.0;
  double temp_noise_sd = 1.0;
  double weibull_shape = 2.0;
  double weibull_scale = 7.5;       // m/s
  double wind_persistence = 0.97;   // AR(1) coefficient of the latent wind process
  double turbulence_base = 0.08;
  double turbulence_low_wind = 0.5;  // extra intensity ~ 1/(v+1)
  double turbulence_noise_sd = 0.02;

  void validate() const;
};

/// Piecewise power curve with a cubic ramp between cut-in and rated speed.
double theoretical_power(double wind_speed, const GeneratorConfig& config);

struct GeneratedSeries {
  TurbineSeries series;
  std::vector<DriftInjection> ground_truth;
};

/// Deterministic for a fixed `config.seed`. Injections are applied to the
/// recorded channels after the physical power is computed, in start order.
GeneratedSeries generate_series(const GeneratorConfig& config, std::vector<DriftInjection> injections,
                                const std::string& turbine_id = "T001");

/// Applies one injection in place; exposed for testing commutativity.
void apply_injection(TurbineSeries& series, const DriftInjection& injection);

void write_injections_jsonl(std::ostream& out, const std::vector<DriftInjection>& injections);
std::vector<DriftInjection> read_injections_jsonl(std::istream& in);

std::string to_string(InjectionKind kind);
std::string to_string(InjectionTarget target);
std::string to_string(SensorChannel channel);
InjectionKind parse_injection_kind(const std::string& s);
InjectionTarget parse_injection_target(const std::string& s);
SensorChannel parse_sensor_channel(const std::string& s);

}  // namespace driftbench
