#include "driftbench/service.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "driftbench/downsample.hpp"
#include "driftbench/errors.hpp"

namespace driftbench {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::not_found, "missing file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::io, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::vector<std::string> stems_with_extension(const fs::path& dir, const std::string& ext) {
  std::vector<std::string> out;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

ojson event_to_json(const DetectionEvent& e) {
  ojson j;
  j["timestamp"] = format_rfc3339(e.timestamp);
  j["sample_index"] = e.sample_index;
  j["statistic"] = e.statistic;
  return j;
}

}  // namespace

void validate_identifier(const std::string& value, const std::string& field) {
  const bool ok = !value.empty() && value.size() <= 128 && value.front() != '.' &&
                  std::all_of(value.begin(), value.end(), [](char c) {
                    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                           c == '-' || c == '.';
                  });
  if (!ok) throw Error(ErrorCode::validation, field + " must match [A-Za-z0-9_.-]+", field);
}

fs::path DataDir::series(const std::string& turbine) const { return root_ / "series" / (turbine + ".csv"); }
fs::path DataDir::ground_truth(const std::string& turbine) const {
  return root_ / "ground_truth" / (turbine + ".jsonl");
}
fs::path DataDir::model(const std::string& turbine, const std::string& model) const {
  return root_ / "models" / turbine / (model + ".ens");
}
fs::path DataDir::residuals(const std::string& turbine, const std::string& model) const {
  return root_ / "residuals" / turbine / (model + ".csv");
}
fs::path DataDir::run(const std::string& run_id) const { return runs_dir() / (run_id + ".json"); }

std::vector<std::string> DataDir::turbines() const {
  auto ids = stems_with_extension(root_ / "series", ".csv");
  std::error_code ec;
  if (fs::is_directory(root_ / "residuals", ec)) {
    for (const auto& entry : fs::directory_iterator(root_ / "residuals")) {
      if (entry.is_directory()) ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::vector<std::string> DataDir::models(const std::string& turbine) const {
  return stems_with_extension(root_ / "residuals" / turbine, ".csv");
}

std::string to_string(LabelSource s) {
  switch (s) {
    case LabelSource::expert: return "expert";
    case LabelSource::consensus: return "consensus";
    case LabelSource::ground_truth: return "ground_truth";
  }
  return {};
}

LabelSource parse_label_source(const std::string& s) {
  if (s == "expert") return LabelSource::expert;
  if (s == "consensus") return LabelSource::consensus;
  if (s == "ground_truth") return LabelSource::ground_truth;
  throw Error(ErrorCode::validation, "label_source must be expert, consensus or ground_truth", "label_source");
}

std::string run_to_json(const DetectRun& run) {
  ojson j;
  j["run_id"] = run.run_id;
  j["turbine_id"] = run.turbine_id;
  j["model_id"] = run.model_id;
  j["status"] = run.status;
  j["detectors"] = ojson::parse(detector_configs_to_json(run.detectors));
  ojson events = ojson::object();
  for (const auto& [kind, list] : run.events) {
    ojson arr = ojson::array();
    for (const auto& e : list) arr.push_back(event_to_json(e));
    events[to_string(kind)] = arr;
  }
  j["events"] = events;
  return j.dump(2) + "\n";
}

DetectRun run_from_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::format, std::string("run file is not valid JSON: ") + e.what());
  }
  DetectRun run;
  try {
    run.run_id = j.at("run_id").get<std::string>();
    run.turbine_id = j.at("turbine_id").get<std::string>();
    run.model_id = j.at("model_id").get<std::string>();
    run.status = j.value("status", std::string("completed"));
    run.detectors = parse_detector_configs(j.at("detectors").dump());
    for (const auto& d : run.detectors) {
      std::vector<DetectionEvent> list;
      const auto key = to_string(d.kind);
      if (j.at("events").contains(key)) {
        for (const auto& e : j.at("events").at(key)) {
          DetectionEvent ev;
          ev.kind = d.kind;
          ev.timestamp = parse_rfc3339(e.at("timestamp").get<std::string>());
          ev.sample_index = e.at("sample_index").get<std::size_t>();
          ev.statistic = e.at("statistic").get<double>();
          list.push_back(ev);
        }
      }
      run.events.emplace_back(d.kind, std::move(list));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::format, std::string("malformed run file: ") + e.what());
  }
  return run;
}

Service::Service(ServiceConfig config) : config_(std::move(config)), data_(config_.data_dir) {
  std::error_code ec;
  if (!fs::is_directory(config_.data_dir, ec)) {
    throw Error(ErrorCode::config, "data directory does not exist: " + config_.data_dir.string(), "data_dir");
  }
  if (!config_.read_only) {
    const auto probe = config_.data_dir / ".write_probe";
    std::ofstream out(probe);
    if (!out) throw Error(ErrorCode::config, "data directory is not writable: " + config_.data_dir.string(), "data_dir");
    out.close();
    fs::remove(probe, ec);
  }
  labels_ = std::make_unique<LabelStore>(config_.data_dir);

  std::ifstream keys(data_.idempotency_log());
  std::string line;
  while (std::getline(keys, line)) {
    if (line.empty()) continue;
    try {
      const auto j = ojson::parse(line);
      idempotency_[j.at("key").get<std::string>()] = {j.at("kind").get<std::string>(), j.at("id").get<std::string>()};
    } catch (const nlohmann::json::exception&) {
      // torn trailing line from an interrupted write; the call was never acknowledged
    }
  }
  for (const auto& id : stems_with_extension(data_.runs_dir(), ".json")) {
    unsigned long long n = 0;
    if (std::sscanf(id.c_str(), "run-%llu", &n) == 1) next_run_ = std::max<std::uint64_t>(next_run_, n + 1);
  }
}

Service::~Service() = default;

void Service::require_writable() const {
  if (config_.read_only) throw Error(ErrorCode::forbidden, "service is in read-only mode");
}

std::vector<TurbineInfo> Service::turbines() const {
  std::vector<TurbineInfo> out;
  for (const auto& id : data_.turbines()) {
    std::error_code ec;
    out.push_back({id, data_.models(id), fs::exists(data_.ground_truth(id), ec)});
  }
  return out;
}

std::shared_ptr<const ResidualSeries> Service::residuals(const std::string& turbine_id,
                                                         const std::string& model_id) const {
  validate_identifier(turbine_id, "turbine_id");
  validate_identifier(model_id, "model_id");
  const auto path = data_.residuals(turbine_id, model_id);
  std::error_code ec;
  const auto mtime = fs::last_write_time(path, ec);
  if (ec) throw Error(ErrorCode::not_found, "no residuals for turbine '" + turbine_id + "' model '" + model_id + "'");
  {
    std::lock_guard lock(cache_mutex_);
    auto it = cache_.find(path);
    if (it != cache_.end() && it->second.first == mtime) return it->second.second;
  }
  std::ifstream in(path, std::ios::binary);
  auto series = std::make_shared<const ResidualSeries>(read_residuals_csv(in, turbine_id));
  std::lock_guard lock(cache_mutex_);
  cache_[path] = {mtime, series};
  return series;
}

ResidualPage Service::get_residuals(const ResidualQuery& q) const {
  if (q.from && q.to && !(*q.from < *q.to)) throw Error(ErrorCode::validation, "from must be before to", "to");
  if (q.max_points && *q.max_points < 3) {
    throw Error(ErrorCode::validation, "max_points must be at least 3", "max_points");
  }
  const auto series = residuals(q.turbine_id, q.model_id);

  ResidualPage page;
  page.turbine_id = q.turbine_id;
  page.model_id = q.model_id;
  const auto& entries = series->entries;
  auto lo = entries.begin();
  auto hi = entries.end();
  if (q.from) {
    lo = std::lower_bound(entries.begin(), entries.end(), *q.from,
                          [](const ResidualEntry& e, Timestamp t) { return e.timestamp < t; });
  }
  if (q.to) {
    hi = std::lower_bound(lo, entries.end(), *q.to, [](const ResidualEntry& e, Timestamp t) { return e.timestamp < t; });
  }
  const std::span<const ResidualEntry> range(lo, hi);
  page.points_in_range = range.size();
  if (!q.max_points || range.size() <= *q.max_points) {
    page.points.assign(range.begin(), range.end());
  } else {
    std::vector<double> x(range.size());
    std::vector<std::optional<double>> y(range.size());
    for (std::size_t i = 0; i < range.size(); ++i) {
      x[i] = static_cast<double>(to_unix(range[i].timestamp));
      y[i] = range[i].residual;
    }
    for (auto i : lttb_select(x, y, *q.max_points)) page.points.push_back(range[i]);
    page.downsampled = true;
  }

  const Timestamp range_from = q.from ? *q.from : (entries.empty() ? Timestamp{} : entries.front().timestamp);
  const Timestamp range_to = q.to ? *q.to : (entries.empty() ? Timestamp{} : entries.back().timestamp + kScadaStep);
  if (q.overlay_labels) {
    LabelFilter f;
    f.turbine_id = q.turbine_id;
    f.model_id = q.model_id;
    f.from = range_from;
    f.to = range_to;
    page.labels = labels_->query(f);
  }
  if (q.overlay_events) {
    page.run_id = q.run_id ? q.run_id : latest_run(q.turbine_id, q.model_id);
    page.events.emplace();
    if (page.run_id) {
      const auto run = load_run(*page.run_id);
      if (run.turbine_id != q.turbine_id || run.model_id != q.model_id) {
        throw Error(ErrorCode::validation, "run " + *page.run_id + " belongs to a different turbine/model", "run_id");
      }
      for (const auto& [kind, list] : run.events) {
        std::vector<DetectionEvent> in_range;
        for (const auto& e : list) {
          if (e.timestamp >= range_from && e.timestamp < range_to) in_range.push_back(e);
        }
        page.events->emplace_back(kind, std::move(in_range));
      }
    }
  }
  return page;
}

void Service::remember_key(const std::string& key, const std::string& kind, const std::string& id) {
  ojson j;
  j["key"] = key;
  j["kind"] = kind;
  j["id"] = id;
  std::ofstream out(data_.idempotency_log(), std::ios::app | std::ios::binary);
  out << j.dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::io, "cannot record idempotency key");
  idempotency_[key] = {kind, id};
}

Idempotent<DriftLabel> Service::post_label(DriftLabel label, const std::optional<std::string>& idempotency_key) {
  require_writable();
  validate_label(label);
  label.created_at = std::chrono::floor<Seconds>(std::chrono::system_clock::now());

  if (!idempotency_key) {
    label.label_id = labels_->append(label);
    return {label, false};
  }
  std::lock_guard lock(idempotency_mutex_);
  auto it = idempotency_.find(*idempotency_key);
  if (it != idempotency_.end()) {
    if (it->second.first != "label") {
      throw Error(ErrorCode::validation, "idempotency key already used for another operation", "idempotency_key");
    }
    auto stored = labels_->find(it->second.second);
    if (!stored) throw Error(ErrorCode::not_found, "label for idempotency key is missing");
    return {*stored, true};
  }
  label.label_id = labels_->append(label);
  remember_key(*idempotency_key, "label", label.label_id);
  return {label, false};
}

Idempotent<DetectRun> Service::post_detect(const std::string& turbine_id, const std::string& model_id,
                                           const std::vector<DetectorConfig>& detectors,
                                           const std::optional<std::string>& idempotency_key) {
  require_writable();
  for (std::size_t i = 0; i < detectors.size(); ++i) {
    detectors[i].validate();
    for (std::size_t k = 0; k < i; ++k) {
      if (detectors[k].kind == detectors[i].kind) {
        throw Error(ErrorCode::validation, "detector listed twice: " + to_string(detectors[i].kind), "detectors");
      }
    }
  }

  std::unique_lock key_lock(idempotency_mutex_, std::defer_lock);
  if (idempotency_key) {
    key_lock.lock();
    auto it = idempotency_.find(*idempotency_key);
    if (it != idempotency_.end()) {
      if (it->second.first != "run") {
        throw Error(ErrorCode::validation, "idempotency key already used for another operation", "idempotency_key");
      }
      return {load_run(it->second.second), true};
    }
  }

  const auto series = residuals(turbine_id, model_id);
  DetectRun run;
  run.turbine_id = turbine_id;
  run.model_id = model_id;
  run.detectors = detectors;
  for (const auto& d : detectors) run.events.emplace_back(d.kind, run_detector(d, *series));

  {
    std::lock_guard lock(runs_mutex_);
    char id[32];
    std::snprintf(id, sizeof id, "run-%06llu", static_cast<unsigned long long>(next_run_++));
    run.run_id = id;
    write_file_atomic(data_.run(run.run_id), run_to_json(run));
  }
  if (idempotency_key) remember_key(*idempotency_key, "run", run.run_id);
  return {run, false};
}

DetectRun Service::load_run(const std::string& run_id) const {
  validate_identifier(run_id, "run_id");
  const auto path = data_.run(run_id);
  std::error_code ec;
  if (!fs::exists(path, ec)) throw Error(ErrorCode::not_found, "unknown run: " + run_id);
  return run_from_json(read_file(path));
}

std::optional<std::string> Service::latest_run(const std::string& turbine_id, const std::string& model_id) const {
  auto ids = stems_with_extension(data_.runs_dir(), ".json");
  for (auto it = ids.rbegin(); it != ids.rend(); ++it) {
    const auto run = load_run(*it);
    if (run.turbine_id == turbine_id && run.model_id == model_id) return run.run_id;
  }
  return std::nullopt;
}

std::vector<LabelledPeriod> Service::labelled_periods(const std::string& turbine_id, const std::string& model_id,
                                                      const EvaluateRequest& request) const {
  std::vector<LabelledPeriod> periods;
  if (request.source == LabelSource::ground_truth) {
    const auto path = data_.ground_truth(turbine_id);
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::precondition, "no ground truth for turbine '" + turbine_id + "'");
    const auto injections = read_injections_jsonl(in);
    return periods_from_injections(injections);
  }
  LabelFilter f;
  f.turbine_id = turbine_id;
  f.model_id = model_id;
  if (request.expert_id) f.expert_id = request.expert_id;
  const auto labels = labels_->query(f);
  if (request.source == LabelSource::expert) {
    for (const auto& l : labels) periods.push_back({l.start, l.end, PeriodSource::expert});
  } else {
    for (const auto& c : consensus(labels, request.overlap_threshold)) {
      periods.push_back({c.start, c.end, PeriodSource::consensus});
    }
  }
  return periods;
}

EvaluateResponse Service::post_evaluate(const EvaluateRequest& request) const {
  if (request.tolerance < Seconds{0}) throw Error(ErrorCode::validation, "tolerance must be non-negative", "tolerance_s");
  const auto run = load_run(request.run_id);
  const auto periods = labelled_periods(run.turbine_id, run.model_id, request);
  if (periods.empty()) {
    throw Error(ErrorCode::precondition, "no labelled periods available for run " + request.run_id);
  }
  EvaluateResponse resp;
  resp.run_id = run.run_id;
  resp.source = request.source;
  resp.n_periods = periods.size();
  for (const auto& [kind, events] : run.events) {
    resp.rows.push_back(evaluate(kind, match_triggers(periods, events, request.tolerance)));
  }
  return resp;
}

}  // namespace driftbench
