#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftbench/time.hpp"

namespace driftbench {

enum class DriftType { sudden, gradual, recurring, unknown };
enum class DriftCause { sensor_miscalibration, maintenance_action, power_limitation, wear, other };
enum class Confidence { low, medium, high };

inline constexpr std::size_t kDriftCauseCount = 5;

std::string to_string(DriftType t);
std::string to_string(DriftCause c);
std::string to_string(Confidence c);
DriftType parse_drift_type(std::string_view s);
DriftCause parse_drift_cause(std::string_view s);
Confidence parse_confidence(std::string_view s);

struct DriftLabel {
  std::string label_id;
  std::string turbine_id;
  std::string model_id;
  Timestamp start;
  Timestamp end;
  DriftType drift_type = DriftType::unknown;
  DriftCause cause = DriftCause::other;
  int severity = 1;
  Confidence confidence = Confidence::medium;
  std::string expert_id;
  Timestamp created_at;
  std::string note;
  std::optional<std::string> supersedes;

  bool operator==(const DriftLabel&) const = default;
};

/// Throws Error{validation} naming the first offending field.
void validate_label(const DriftLabel& label);

/// Canonical single-line JSON; the stored log bytes are exactly this.
std::string to_json_line(const DriftLabel& label);

/// Parses a label object. With `require_assigned` false, label_id and
/// created_at may be absent (they are assigned by the store/service).
DriftLabel parse_label_json(std::string_view text, bool require_assigned = true);

struct ExpertInfo {
  std::string expert_id;
  std::string display_name;

  bool operator==(const ExpertInfo&) const = default;
};

struct LabelFilter {
  std::optional<std::string> turbine_id;
  std::optional<std::string> model_id;
  std::optional<std::string> expert_id;
  std::optional<Timestamp> from;  // labels ending after `from`
  std::optional<Timestamp> to;    // labels starting before `to`
  std::optional<DriftCause> cause;

  bool matches(const DriftLabel& label) const;
};

/// Append-only label log (`labels.jsonl`) and expert registry
/// (`experts.json`) inside one directory. Appends are serialized and fsynced
/// before returning; readers get a consistent snapshot.
class LabelStore {
 public:
  explicit LabelStore(std::filesystem::path directory);
  ~LabelStore();
  LabelStore(const LabelStore&) = delete;
  LabelStore& operator=(const LabelStore&) = delete;

  /// Assigns label_id (sequential) and returns it. created_at is kept as given.
  std::string append(DriftLabel label);

  std::vector<DriftLabel> query(const LabelFilter& filter = {}) const;
  std::optional<DriftLabel> find(const std::string& label_id) const;
  std::size_t size() const;

  void register_expert(const ExpertInfo& expert);
  std::vector<ExpertInfo> experts() const;
  bool has_expert(const std::string& expert_id) const;

  const std::filesystem::path& directory() const { return directory_; }
  std::filesystem::path log_path() const { return directory_ / "labels.jsonl"; }
  std::filesystem::path experts_path() const { return directory_ / "experts.json"; }

 private:
  struct Impl;
  std::filesystem::path directory_;
  std::unique_ptr<Impl> impl_;
};

std::vector<ExpertInfo> read_experts_file(const std::filesystem::path& path);
void write_experts_file(const std::filesystem::path& path, std::span<const ExpertInfo> experts);

struct ConsensusPeriod {
  Timestamp start;
  Timestamp end;
  std::vector<std::string> expert_ids;  // sorted, distinct
  std::vector<std::string> label_ids;   // sorted
  std::array<std::size_t, kDriftCauseCount> cause_votes{};
  DriftCause cause = DriftCause::other;
  bool cause_tied = false;
  int severity = 1;

  std::size_t support() const { return expert_ids.size(); }
  bool operator==(const ConsensusPeriod&) const = default;
};

double jaccard(Timestamp a_start, Timestamp a_end, Timestamp b_start, Timestamp b_end);

/// Merges intervals whose Jaccard overlap is at least `overlap_threshold`
/// until no pair of merged periods qualifies. Each period carries the union
/// interval, the distinct supporting experts, the majority cause (ties
/// resolved to the first cause in enum order and flagged) and the maximum
/// severity. Output is ordered by start.
std::vector<ConsensusPeriod> consensus(std::span<const DriftLabel> labels, double overlap_threshold);
std::vector<ConsensusPeriod> consensus(std::span<const ConsensusPeriod> periods, double overlap_threshold);

/// Writes `labels` as JSON lines.
void write_labels_jsonl(std::ostream& out, std::span<const DriftLabel> labels);

}  // namespace driftbench
