#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "driftbench/detectors.hpp"
#include "driftbench/ensemble.hpp"
#include "driftbench/evaluation.hpp"
#include "driftbench/label_store.hpp"
#include "driftbench/scada.hpp"
#include "driftbench/time.hpp"

namespace driftbench {

/// File layout shared by the CLI and the HTTP service.
///
///   series/<turbine>.csv                 SCADA records
///   ground_truth/<turbine>.jsonl         injected drift periods
///   models/<turbine>/<model>.ens         trained ensembles
///   residuals/<turbine>/<model>.csv      ensemble residuals
///   runs/<run_id>.json                   persisted detector runs
///   labels.jsonl, experts.json           label store
///   idempotency.jsonl                    idempotency keys of mutating calls
class DataDir {
 public:
  explicit DataDir(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path series(const std::string& turbine) const;
  std::filesystem::path ground_truth(const std::string& turbine) const;
  std::filesystem::path model(const std::string& turbine, const std::string& model) const;
  std::filesystem::path residuals(const std::string& turbine, const std::string& model) const;
  std::filesystem::path runs_dir() const { return root_ / "runs"; }
  std::filesystem::path run(const std::string& run_id) const;
  std::filesystem::path idempotency_log() const { return root_ / "idempotency.jsonl"; }

  /// Turbine ids with a series file, sorted.
  std::vector<std::string> turbines() const;
  /// Model ids with residuals for `turbine`, sorted.
  std::vector<std::string> models(const std::string& turbine) const;

 private:
  std::filesystem::path root_;
};

/// Identifiers become path components; only [A-Za-z0-9_.-] is accepted and
/// the value may not start with a dot. Throws Error{validation}.
void validate_identifier(const std::string& value, const std::string& field);

struct ServiceConfig {
  std::string listen = "127.0.0.1:8080";
  std::filesystem::path data_dir;
  bool read_only = false;
};

struct TurbineInfo {
  std::string turbine_id;
  std::vector<std::string> models;
  bool has_ground_truth = false;
};

struct ResidualQuery {
  std::string turbine_id;
  std::string model_id;
  std::optional<Timestamp> from;  // inclusive
  std::optional<Timestamp> to;    // exclusive
  std::optional<std::size_t> max_points;
  bool overlay_labels = false;
  bool overlay_events = false;
  std::optional<std::string> run_id;  // events overlay; latest run for the model when absent
};

struct ResidualPage {
  std::string turbine_id;
  std::string model_id;
  std::vector<ResidualEntry> points;
  std::size_t points_in_range = 0;
  bool downsampled = false;
  std::optional<std::vector<DriftLabel>> labels;
  std::optional<std::string> run_id;
  std::optional<std::vector<std::pair<DetectorKind, std::vector<DetectionEvent>>>> events;
};

struct DetectRun {
  std::string run_id;
  std::string turbine_id;
  std::string model_id;
  std::string status = "completed";
  std::vector<DetectorConfig> detectors;
  std::vector<std::pair<DetectorKind, std::vector<DetectionEvent>>> events;  // parallel to detectors
};

std::string run_to_json(const DetectRun& run);
DetectRun run_from_json(const std::string& text);

enum class LabelSource { expert, consensus, ground_truth };
std::string to_string(LabelSource s);
LabelSource parse_label_source(const std::string& s);

struct EvaluateRequest {
  std::string run_id;
  LabelSource source = LabelSource::ground_truth;
  Seconds tolerance{0};
  double overlap_threshold = 0.5;            // consensus source only
  std::optional<std::string> expert_id;      // expert source only
};

struct EvaluateResponse {
  std::string run_id;
  LabelSource source = LabelSource::ground_truth;
  std::size_t n_periods = 0;
  std::vector<EvalResult> rows;
};

template <typename T>
struct Idempotent {
  T value;
  bool replayed = false;
};

/// Pipeline operations over a data directory. Thread-safe.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();

  const ServiceConfig& config() const { return config_; }
  const DataDir& data() const { return data_; }
  LabelStore& labels() { return *labels_; }

  std::vector<TurbineInfo> turbines() const;
  ResidualPage get_residuals(const ResidualQuery& query) const;

  /// `label.label_id` and `label.created_at` are assigned here.
  Idempotent<DriftLabel> post_label(DriftLabel label, const std::optional<std::string>& idempotency_key = {});
  Idempotent<DetectRun> post_detect(const std::string& turbine_id, const std::string& model_id,
                                    const std::vector<DetectorConfig>& detectors,
                                    const std::optional<std::string>& idempotency_key = {});
  EvaluateResponse post_evaluate(const EvaluateRequest& request) const;

  DetectRun load_run(const std::string& run_id) const;
  std::vector<LabelledPeriod> labelled_periods(const std::string& turbine_id, const std::string& model_id,
                                               const EvaluateRequest& request) const;
  std::shared_ptr<const ResidualSeries> residuals(const std::string& turbine_id, const std::string& model_id) const;

 private:
  std::optional<std::string> latest_run(const std::string& turbine_id, const std::string& model_id) const;
  void remember_key(const std::string& key, const std::string& kind, const std::string& id);
  void require_writable() const;

  ServiceConfig config_;
  DataDir data_;
  std::unique_ptr<LabelStore> labels_;

  std::mutex idempotency_mutex_;
  std::map<std::string, std::pair<std::string, std::string>> idempotency_;  // key -> (kind, id)

  mutable std::mutex runs_mutex_;
  std::uint64_t next_run_ = 1;

  mutable std::mutex cache_mutex_;
  mutable std::map<std::filesystem::path, std::pair<std::filesystem::file_time_type, std::shared_ptr<const ResidualSeries>>>
      cache_;
};

}  // namespace driftbench
