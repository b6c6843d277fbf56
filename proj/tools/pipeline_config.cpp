#include "pipeline_config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "driftbench/errors.hpp"

namespace driftbench::cli {

using json = nlohmann::json;

namespace {

double number(const json& v, const std::string& key) {
  if (!v.is_number()) throw Error(ErrorCode::config, key + " must be a number", key);
  return v.get<double>();
}

std::size_t count(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw Error(ErrorCode::config, key + " must be a non-negative integer", key);
  }
  return v.get<std::size_t>();
}

std::string text(const json& v, const std::string& key) {
  if (!v.is_string()) throw Error(ErrorCode::config, key + " must be a string", key);
  return v.get<std::string>();
}

void apply_generator(GeneratorConfig& g, const json& section) {
  for (const auto& [key, v] : section.items()) {
    if (key == "rated_power") g.rated_power = number(v, key);
    else if (key == "cut_in") g.cut_in = number(v, key);
    else if (key == "rated_speed") g.rated_speed = number(v, key);
    else if (key == "cut_out") g.cut_out = number(v, key);
    else if (key == "noise_sd") g.noise_sd = number(v, key);
    else if (key == "seed") g.seed = count(v, key);
    else if (key == "n_records") g.n_records = count(v, key);
    else if (key == "start") {
      try {
        g.start = parse_rfc3339(text(v, key));
      } catch (const Error&) {
        throw Error(ErrorCode::config, "generator.start must be an RFC 3339 UTC timestamp", key);
      }
    }
    else if (key == "temp_mean") g.temp_mean = number(v, key);
    else if (key == "temp_amplitude") g.temp_amplitude = number(v, key);
    else if (key == "temp_daily_amplitude") g.temp_daily_amplitude = number(v, key);
    else if (key == "temp_noise_sd") g.temp_noise_sd = number(v, key);
    else if (key == "weibull_shape") g.weibull_shape = number(v, key);
    else if (key == "weibull_scale") g.weibull_scale = number(v, key);
    else if (key == "wind_persistence") g.wind_persistence = number(v, key);
    else if (key == "turbulence_base") g.turbulence_base = number(v, key);
    else if (key == "turbulence_low_wind") g.turbulence_low_wind = number(v, key);
    else if (key == "turbulence_noise_sd") g.turbulence_noise_sd = number(v, key);
    else throw Error(ErrorCode::config, "unknown generator key: " + key, key);
  }
  g.validate();
}

void apply_ensemble(EnsembleConfig& c, const json& section) {
  for (const auto& [key, v] : section.items()) {
    if (key == "batch_size") c.batch_size = count(v, key);
    else if (key == "validation_fraction") c.validation_fraction = number(v, key);
    else if (key == "bins") c.bins = count(v, key);
    else if (key == "min_occupancy") c.min_occupancy = count(v, key);
    else if (key == "rejection_rmse") c.rejection_rmse = number(v, key);
    else if (key == "hidden_width") c.elm.hidden_width = count(v, key);
    else if (key == "ridge_lambda") c.elm.ridge_lambda = number(v, key);
    else if (key == "activation") {
      const auto a = text(v, key);
      if (a == "sigmoid") c.elm.activation = Activation::sigmoid;
      else if (a == "tanh") c.elm.activation = Activation::tanh;
      else throw Error(ErrorCode::config, "activation must be sigmoid or tanh", key);
    } else if (key == "predictors") {
      if (!v.is_array()) throw Error(ErrorCode::config, "predictors must be an array", key);
      c.predictors.clear();
      for (const auto& p : v) c.predictors.push_back(parse_predictor(text(p, key)));
    } else {
      throw Error(ErrorCode::config, "unknown ensemble key: " + key, key);
    }
  }
  c.elm.input_dim = c.predictors.size();
  c.validate();
}

void apply_metrics(MetricConfig& m, const json& section) {
  for (const auto& [key, v] : section.items()) {
    if (key == "bins") m.bins = count(v, key);
    else if (key == "min_samples") m.min_samples = count(v, key);
    else if (key == "metric") m.metric = parse_distance_metric(text(v, key));
    else throw Error(ErrorCode::config, "unknown metrics key: " + key, key);
  }
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::config, "config must be a JSON object");

  PipelineConfig c;
  for (const auto& [key, section] : doc.items()) {
    if (key == "injections") {
      if (!section.is_array()) throw Error(ErrorCode::config, "injections must be an array", key);
      std::ostringstream lines;
      for (const auto& item : section) lines << item.dump() << '\n';
      std::istringstream in(lines.str());
      c.injections = read_injections_jsonl(in);
      continue;
    }
    if (key == "detectors") {
      c.detectors = parse_detector_configs(section.dump());
      continue;
    }
    if (!section.is_object()) throw Error(ErrorCode::config, key + " must be an object", key);
    if (key == "generator") {
      apply_generator(c.generator, section);
    } else if (key == "ensemble") {
      apply_ensemble(c.ensemble, section);
    } else if (key == "metrics") {
      apply_metrics(c.metrics, section);
    } else if (key == "evaluation") {
      for (const auto& [k, v] : section.items()) {
        if (k == "tolerance_s") c.tolerance = Seconds{static_cast<long long>(count(v, k))};
        else if (k == "label_source") c.label_source = parse_label_source(text(v, k));
        else if (k == "overlap_threshold") c.overlap_threshold = number(v, k);
        else throw Error(ErrorCode::config, "unknown evaluation key: " + k, k);
      }
    } else {
      throw Error(ErrorCode::config, "unknown config section: " + key, key);
    }
  }
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::config, "cannot read config file: " + path.string(), "config");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_pipeline_config(ss.str());
}

std::vector<DriftInjection> mixed_scenario(const GeneratorConfig& g) {
  const auto span = static_cast<double>(g.n_records);
  auto at = [&](double fraction) {
    const auto idx = static_cast<std::int64_t>(fraction * span);
    return g.start + kScadaStep * idx;
  };
  const Seconds day{86400};
  auto fits = [&](Timestamp end) { return end <= g.start + kScadaStep * static_cast<std::int64_t>(g.n_records); };

  std::vector<DriftInjection> out;
  auto add = [&](InjectionKind kind, InjectionTarget target, double fraction, Seconds length, double amplitude,
                 Seconds period = Seconds{0}, SensorChannel channel = SensorChannel::wind_speed) {
    DriftInjection inj;
    inj.kind = kind;
    inj.target = target;
    inj.channel = channel;
    inj.start = at(fraction);
    inj.end = inj.start + length;
    inj.amplitude = amplitude;
    inj.period = period;
    if (fits(inj.end) && (out.empty() || out.back().end <= inj.start)) out.push_back(inj);
  };
  add(InjectionKind::sudden, InjectionTarget::power_offset, 0.20, 7 * day, -200.0);
  add(InjectionKind::gradual, InjectionTarget::power_scale, 0.40, 14 * day, -0.15);
  add(InjectionKind::sudden, InjectionTarget::sensor_offset, 0.60, 10 * day, 1.0, Seconds{0}, SensorChannel::wind_speed);
  add(InjectionKind::power_limitation, InjectionTarget::power_offset, 0.75, 5 * day, 0.6 * g.rated_power);
  add(InjectionKind::recurring, InjectionTarget::power_offset, 0.90, 6 * day, -250.0, day);
  return out;
}

}  // namespace driftbench::cli
