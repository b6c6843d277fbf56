#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "csv.hpp"
#include "driftbench/detectors.hpp"
#include "driftbench/errors.hpp"

namespace driftbench {

namespace {
constexpr std::string_view kEventsHeader = "detector,timestamp,sample_index,statistic";
}

void write_events_csv(std::ostream& out, const std::vector<DetectionEvent>& events) {
  out << kEventsHeader << '\n';
  for (const auto& e : events) {
    out << to_string(e.kind) << ',' << format_rfc3339(e.timestamp) << ',' << e.sample_index << ','
        << csv::format_double(e.statistic) << '\n';
  }
}

std::vector<DetectionEvent> read_events_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || csv::trim(line) != kEventsHeader) {
    throw Error(ErrorCode::format, "expected header '" + std::string(kEventsHeader) + "'");
  }
  std::vector<DetectionEvent> events;
  while (std::getline(in, line)) {
    auto text = csv::trim(line);
    if (text.empty()) continue;
    auto f = csv::split(text);
    if (f.size() != 4) throw Error(ErrorCode::format, "event row needs 4 fields");
    DetectionEvent e;
    e.kind = parse_detector_kind(std::string(csv::trim(f[0])));
    e.timestamp = parse_rfc3339(csv::trim(f[1]));
    auto idx = csv::parse_finite(f[2]);
    auto stat = csv::parse_finite(f[3]);
    if (!idx || !stat || *idx < 0) throw Error(ErrorCode::format, "bad event row: " + std::string(text));
    e.sample_index = static_cast<std::size_t>(*idx);
    e.statistic = *stat;
    events.push_back(e);
  }
  return events;
}

std::vector<DetectorConfig> parse_detector_configs(const std::string& json_text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::format, std::string("detector config is not valid JSON: ") + e.what());
  }
  if (doc.is_object() && doc.contains("detectors")) doc = doc["detectors"];
  if (!doc.is_object()) throw Error(ErrorCode::format, "detector config must be an object keyed by detector kind");

  std::vector<DetectorConfig> out;
  for (const auto& [name, body] : doc.items()) {
    DetectorConfig c;
    c.kind = parse_detector_kind(name);
    if (!body.is_null()) {
      if (!body.is_object()) throw Error(ErrorCode::format, name + ": parameters must be an object", name);
      for (const auto& [key, value] : body.items()) {
        if (key == "transform") {
          if (!value.is_string()) throw Error(ErrorCode::config, name + ": transform must be a string", "transform");
          c.transform = parse_input_transform(value.get<std::string>());
        } else if (value.is_number()) {
          c.params[key] = value.get<double>();
        } else if (value.is_boolean()) {
          c.params[key] = value.get<bool>() ? 1.0 : 0.0;
        } else {
          throw Error(ErrorCode::config, name + ": parameter '" + key + "' must be numeric", key);
        }
      }
    }
    c.validate();
    out.push_back(std::move(c));
  }
  return out;
}

std::string detector_configs_to_json(const std::vector<DetectorConfig>& configs) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& c : configs) {
    nlohmann::ordered_json body;
    body["transform"] = to_string(c.transform);
    for (const auto& spec : parameter_specs(c.kind)) body[spec.name] = c.param(spec.name);
    doc[to_string(c.kind)] = body;
  }
  return doc.dump(2);
}

std::vector<DetectorConfig> default_detector_configs() {
  std::vector<DetectorConfig> out;
  for (auto k : kAllDetectorKinds) out.push_back(DetectorConfig::defaults(k));
  return out;
}

}  // namespace driftbench
