#include "driftbench/scada.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "csv.hpp"
#include "driftbench/errors.hpp"
#include "driftbench/random.hpp"

namespace driftbench {

namespace {

constexpr std::string_view kHeader = "timestamp,ambient_temp,wind_speed,turbulence,power";

bool record_in_range(const ScadaRecord& r) {
  return r.wind_speed >= 0.0 && r.turbulence >= 0.0 && r.turbulence <= 1.0 && r.power >= 0.0;
}

}  // namespace

ParseResult parse_scada_csv(std::istream& source, const std::string& turbine_id) {
  ParseResult result;
  result.series.turbine_id = turbine_id;

  std::string line;
  if (!std::getline(source, line) || csv::trim(line) != kHeader) {
    throw Error(ErrorCode::format, "expected header '" + std::string(kHeader) + "'");
  }

  while (std::getline(source, line)) {
    auto text = csv::trim(line);
    if (text.empty()) continue;
    auto fields = csv::split(text);
    if (fields.size() != 5) {
      ++result.dropped_count;
      continue;
    }
    ScadaRecord rec;
    try {
      rec.timestamp = parse_rfc3339(csv::trim(fields[0]));
    } catch (const Error&) {
      ++result.dropped_count;
      continue;
    }
    auto temp = csv::parse_finite(fields[1]);
    auto wind = csv::parse_finite(fields[2]);
    auto turb = csv::parse_finite(fields[3]);
    auto power = csv::parse_finite(fields[4]);
    if (!temp || !wind || !turb || !power) {
      ++result.dropped_count;
      continue;
    }
    rec.ambient_temp = *temp;
    rec.wind_speed = *wind;
    rec.turbulence = *turb;
    rec.power = *power;
    if (!record_in_range(rec)) {
      ++result.dropped_count;
      continue;
    }
    result.series.records.push_back(rec);
  }

  auto& records = result.series.records;
  if (records.empty()) throw Error(ErrorCode::empty_input, "no valid SCADA rows");

  std::stable_sort(records.begin(), records.end(),
                   [](const ScadaRecord& a, const ScadaRecord& b) { return a.timestamp < b.timestamp; });
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto gap = records[i].timestamp - records[i - 1].timestamp;
    if (gap == Seconds{0}) {
      throw Error(ErrorCode::duplicate_timestamp,
                  "duplicate timestamp " + format_rfc3339(records[i].timestamp));
    }
    if (gap.count() % kScadaStep.count() != 0) {
      throw Error(ErrorCode::format, "timestamp off the 10-minute grid: " + format_rfc3339(records[i].timestamp));
    }
  }
  return result;
}

void write_scada_csv(std::ostream& out, const TurbineSeries& series) {
  out << kHeader << '\n';
  for (const auto& r : series.records) {
    out << format_rfc3339(r.timestamp) << ',' << csv::format_double(r.ambient_temp) << ','
        << csv::format_double(r.wind_speed) << ',' << csv::format_double(r.turbulence) << ','
        << csv::format_double(r.power) << '\n';
  }
}

// ---------------------------------------------------------------------------

void validate(const DriftInjection& inj) {
  if (!(inj.start < inj.end)) throw Error(ErrorCode::validation, "injection start must precede end", "end");
  if (!std::isfinite(inj.amplitude)) throw Error(ErrorCode::validation, "injection amplitude not finite", "amplitude");
  if (inj.kind == InjectionKind::recurring && inj.period <= Seconds{0}) {
    throw Error(ErrorCode::validation, "recurring injection needs period > 0", "period_s");
  }
  if (inj.kind == InjectionKind::power_limitation && inj.amplitude < 0.0) {
    throw Error(ErrorCode::validation, "power limitation must be non-negative", "amplitude");
  }
}

void GeneratorConfig::validate() const {
  auto bad = [](const char* field, const char* what) {
    throw Error(ErrorCode::config, std::string(field) + ": " + what, field);
  };
  if (!(rated_power > 0.0)) bad("rated_power", "must be > 0");
  if (!(cut_in > 0.0)) bad("cut_in", "must be > 0");
  if (!(rated_speed > cut_in)) bad("rated_speed", "must exceed cut_in");
  if (!(cut_out > rated_speed)) bad("cut_out", "must exceed rated_speed");
  if (!(noise_sd >= 0.0)) bad("noise_sd", "must be >= 0");
  if (n_records == 0) bad("n_records", "must be >= 1");
  if (!(weibull_shape > 0.0) || !(weibull_scale > 0.0)) bad("weibull", "shape and scale must be > 0");
  if (!(wind_persistence >= 0.0 && wind_persistence < 1.0)) bad("wind_persistence", "must be in [0,1)");
}

double theoretical_power(double v, const GeneratorConfig& c) {
  if (v < c.cut_in || v > c.cut_out) return 0.0;
  if (v >= c.rated_speed) return c.rated_power;
  const double lo = c.cut_in * c.cut_in * c.cut_in;
  const double hi = c.rated_speed * c.rated_speed * c.rated_speed;
  return c.rated_power * (v * v * v - lo) / (hi - lo);
}

namespace {

double channel_value(const ScadaRecord& r, SensorChannel ch) {
  switch (ch) {
    case SensorChannel::ambient_temp: return r.ambient_temp;
    case SensorChannel::wind_speed: return r.wind_speed;
    case SensorChannel::turbulence: return r.turbulence;
  }
  return 0.0;
}

void set_channel(ScadaRecord& r, SensorChannel ch, double v) {
  switch (ch) {
    case SensorChannel::ambient_temp: r.ambient_temp = v; break;
    case SensorChannel::wind_speed: r.wind_speed = std::max(0.0, v); break;
    case SensorChannel::turbulence: r.turbulence = std::clamp(v, 0.0, 1.0); break;
  }
}

}  // namespace

void apply_injection(TurbineSeries& series, const DriftInjection& inj) {
  const double span = static_cast<double>((inj.end - inj.start).count());
  for (auto& r : series.records) {
    if (r.timestamp < inj.start || r.timestamp >= inj.end) continue;
    if (inj.kind == InjectionKind::power_limitation) {
      r.power = std::min(r.power, inj.amplitude);
      continue;
    }
    double effect = inj.amplitude;
    if (inj.kind == InjectionKind::gradual) {
      effect *= static_cast<double>((r.timestamp - inj.start).count()) / span;
    } else if (inj.kind == InjectionKind::recurring) {
      const auto phase = (r.timestamp - inj.start).count() % inj.period.count();
      if (2 * phase >= inj.period.count()) effect = 0.0;
    }
    switch (inj.target) {
      case InjectionTarget::power_offset: r.power = std::max(0.0, r.power + effect); break;
      case InjectionTarget::power_scale: r.power = std::max(0.0, r.power * (1.0 + effect)); break;
      case InjectionTarget::sensor_offset: set_channel(r, inj.channel, channel_value(r, inj.channel) + effect); break;
    }
  }
}

GeneratedSeries generate_series(const GeneratorConfig& config, std::vector<DriftInjection> injections,
                                const std::string& turbine_id) {
  config.validate();
  const Timestamp first = config.start;
  const Timestamp end = first + kScadaStep * static_cast<std::int64_t>(config.n_records);
  for (const auto& inj : injections) {
    validate(inj);
    if (inj.start < first || inj.end > end) {
      throw Error(ErrorCode::range, "injection outside generated span: " + format_rfc3339(inj.start) + " .. " +
                                        format_rfc3339(inj.end));
    }
  }

  GeneratedSeries out;
  out.series.turbine_id = turbine_id;
  out.series.records.reserve(config.n_records);

  Rng weather(mix_seed(config.seed, 1));
  Rng noise(mix_seed(config.seed, 2));
  const double phi = config.wind_persistence;
  const double innovation = std::sqrt(1.0 - phi * phi);
  double latent = weather.normal();
  constexpr double kYear = 365.25 * 86400.0;
  constexpr double kDay = 86400.0;

  for (std::size_t i = 0; i < config.n_records; ++i) {
    ScadaRecord r;
    r.timestamp = first + kScadaStep * static_cast<std::int64_t>(i);
    const double elapsed = static_cast<double>((r.timestamp - first).count());
    r.ambient_temp = config.temp_mean - config.temp_amplitude * std::cos(2.0 * std::numbers::pi * elapsed / kYear) -
                     config.temp_daily_amplitude * std::cos(2.0 * std::numbers::pi * elapsed / kDay) +
                     config.temp_noise_sd * weather.normal();

    if (i > 0) latent = phi * latent + innovation * weather.normal();
    // Gaussian copula onto the Weibull marginal.
    const double u = std::clamp(0.5 * std::erfc(-latent / std::numbers::sqrt2), 1e-12, 1.0 - 1e-12);
    r.wind_speed = config.weibull_scale * std::pow(-std::log1p(-u), 1.0 / config.weibull_shape);

    r.turbulence = std::clamp(config.turbulence_base + config.turbulence_low_wind / (r.wind_speed + 1.0) +
                                  config.turbulence_noise_sd * weather.normal(),
                              0.01, 1.0);

    const double ideal = theoretical_power(r.wind_speed, config);
    const double relative = r.turbulence * config.noise_sd / config.rated_power;
    r.power = std::max(0.0, ideal * (1.0 + relative * noise.normal()) + config.noise_sd * noise.normal());
    out.series.records.push_back(r);
  }

  std::stable_sort(injections.begin(), injections.end(),
                   [](const DriftInjection& a, const DriftInjection& b) { return a.start < b.start; });
  for (const auto& inj : injections) apply_injection(out.series, inj);
  out.ground_truth = std::move(injections);
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(InjectionKind kind) {
  switch (kind) {
    case InjectionKind::sudden: return "sudden";
    case InjectionKind::gradual: return "gradual";
    case InjectionKind::recurring: return "recurring";
    case InjectionKind::power_limitation: return "power_limitation";
  }
  return {};
}

std::string to_string(InjectionTarget target) {
  switch (target) {
    case InjectionTarget::power_offset: return "power_offset";
    case InjectionTarget::power_scale: return "power_scale";
    case InjectionTarget::sensor_offset: return "sensor_offset";
  }
  return {};
}

std::string to_string(SensorChannel channel) {
  switch (channel) {
    case SensorChannel::ambient_temp: return "ambient_temp";
    case SensorChannel::wind_speed: return "wind_speed";
    case SensorChannel::turbulence: return "turbulence";
  }
  return {};
}

InjectionKind parse_injection_kind(const std::string& s) {
  if (s == "sudden") return InjectionKind::sudden;
  if (s == "gradual") return InjectionKind::gradual;
  if (s == "recurring") return InjectionKind::recurring;
  if (s == "power_limitation") return InjectionKind::power_limitation;
  throw Error(ErrorCode::format, "unknown injection kind: " + s, "kind");
}

InjectionTarget parse_injection_target(const std::string& s) {
  if (s == "power_offset") return InjectionTarget::power_offset;
  if (s == "power_scale") return InjectionTarget::power_scale;
  if (s == "sensor_offset") return InjectionTarget::sensor_offset;
  throw Error(ErrorCode::format, "unknown injection target: " + s, "target");
}

SensorChannel parse_sensor_channel(const std::string& s) {
  if (s == "ambient_temp") return SensorChannel::ambient_temp;
  if (s == "wind_speed") return SensorChannel::wind_speed;
  if (s == "turbulence") return SensorChannel::turbulence;
  throw Error(ErrorCode::format, "unknown sensor channel: " + s, "channel");
}

void write_injections_jsonl(std::ostream& out, const std::vector<DriftInjection>& injections) {
  for (const auto& inj : injections) {
    nlohmann::json j;
    j["kind"] = to_string(inj.kind);
    j["target"] = to_string(inj.target);
    if (inj.target == InjectionTarget::sensor_offset) j["channel"] = to_string(inj.channel);
    j["start"] = format_rfc3339(inj.start);
    j["end"] = format_rfc3339(inj.end);
    j["amplitude"] = inj.amplitude;
    j["period_s"] = inj.period.count();
    out << j.dump() << '\n';
  }
}

std::vector<DriftInjection> read_injections_jsonl(std::istream& in) {
  std::vector<DriftInjection> out;
  std::string line;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      DriftInjection inj;
      inj.kind = parse_injection_kind(j.at("kind").get<std::string>());
      inj.target = parse_injection_target(j.value("target", std::string("power_offset")));
      if (j.contains("channel")) inj.channel = parse_sensor_channel(j.at("channel").get<std::string>());
      inj.start = parse_rfc3339(j.at("start").get<std::string>());
      inj.end = parse_rfc3339(j.at("end").get<std::string>());
      inj.amplitude = j.at("amplitude").get<double>();
      inj.period = Seconds{j.value("period_s", std::int64_t{0})};
      validate(inj);
      out.push_back(inj);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::format, std::string("bad injection record: ") + e.what());
    }
  }
  return out;
}

}  // namespace driftbench
