#include "driftbench/label_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <mutex>
#include <ostream>
#include <shared_mutex>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "driftbench/errors.hpp"

namespace driftbench {

using ojson = nlohmann::ordered_json;

namespace {

constexpr std::array<const char*, 4> kTypeNames{"sudden", "gradual", "recurring", "unknown"};
constexpr std::array<const char*, kDriftCauseCount> kCauseNames{"sensor_miscalibration", "maintenance_action",
                                                                 "power_limitation", "wear", "other"};
constexpr std::array<const char*, 3> kConfidenceNames{"low", "medium", "high"};

template <typename Enum, std::size_t N>
Enum parse_name(std::string_view s, const std::array<const char*, N>& names, const char* field) {
  for (std::size_t i = 0; i < N; ++i) {
    if (s == names[i]) return static_cast<Enum>(i);
  }
  throw Error(ErrorCode::validation, std::string("unknown ") + field + ": " + std::string(s), field);
}

const ojson& require(const ojson& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) throw Error(ErrorCode::validation, std::string("missing field: ") + field, field);
  return *it;
}

std::string require_string(const ojson& obj, const char* field) {
  const auto& v = require(obj, field);
  if (!v.is_string()) throw Error(ErrorCode::validation, std::string(field) + " must be a string", field);
  return v.get<std::string>();
}

Timestamp require_time(const ojson& obj, const char* field) {
  const auto text = require_string(obj, field);
  try {
    return parse_rfc3339(text);
  } catch (const Error&) {
    throw Error(ErrorCode::validation, std::string(field) + " must be an RFC 3339 UTC timestamp", field);
  }
}

ojson to_json(const DriftLabel& l) {
  ojson j;
  j["label_id"] = l.label_id;
  j["turbine_id"] = l.turbine_id;
  j["model_id"] = l.model_id;
  j["start"] = format_rfc3339(l.start);
  j["end"] = format_rfc3339(l.end);
  j["drift_type"] = to_string(l.drift_type);
  j["cause"] = to_string(l.cause);
  j["severity"] = l.severity;
  j["confidence"] = to_string(l.confidence);
  j["expert_id"] = l.expert_id;
  j["created_at"] = format_rfc3339(l.created_at);
  j["note"] = l.note;
  if (l.supersedes) j["supersedes"] = *l.supersedes;
  return j;
}

void fsync_directory(const std::filesystem::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

}  // namespace

std::string to_string(DriftType t) { return kTypeNames[static_cast<std::size_t>(t)]; }
std::string to_string(DriftCause c) { return kCauseNames[static_cast<std::size_t>(c)]; }
std::string to_string(Confidence c) { return kConfidenceNames[static_cast<std::size_t>(c)]; }
DriftType parse_drift_type(std::string_view s) { return parse_name<DriftType>(s, kTypeNames, "drift_type"); }
DriftCause parse_drift_cause(std::string_view s) { return parse_name<DriftCause>(s, kCauseNames, "cause"); }
Confidence parse_confidence(std::string_view s) {
  return parse_name<Confidence>(s, kConfidenceNames, "confidence");
}

void validate_label(const DriftLabel& l) {
  if (l.turbine_id.empty()) throw Error(ErrorCode::validation, "turbine_id must not be empty", "turbine_id");
  if (l.model_id.empty()) throw Error(ErrorCode::validation, "model_id must not be empty", "model_id");
  if (l.expert_id.empty()) throw Error(ErrorCode::validation, "expert_id must not be empty", "expert_id");
  if (!(l.start < l.end)) throw Error(ErrorCode::validation, "end must be after start", "end");
  if (l.severity < 1 || l.severity > 5) throw Error(ErrorCode::validation, "severity must be in 1..5", "severity");
}

std::string to_json_line(const DriftLabel& label) { return to_json(label).dump(); }

DriftLabel parse_label_json(std::string_view text, bool require_assigned) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::format, std::string("label is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::format, "label must be a JSON object");

  DriftLabel l;
  if (require_assigned || j.contains("label_id")) l.label_id = require_string(j, "label_id");
  l.turbine_id = require_string(j, "turbine_id");
  l.model_id = require_string(j, "model_id");
  l.start = require_time(j, "start");
  l.end = require_time(j, "end");
  l.drift_type = parse_drift_type(require_string(j, "drift_type"));
  l.cause = parse_drift_cause(require_string(j, "cause"));
  const auto& sev = require(j, "severity");
  if (!sev.is_number_integer()) throw Error(ErrorCode::validation, "severity must be an integer", "severity");
  const auto severity = sev.get<long long>();
  if (severity < 1 || severity > 5) throw Error(ErrorCode::validation, "severity must be in 1..5", "severity");
  l.severity = static_cast<int>(severity);
  l.confidence = parse_confidence(require_string(j, "confidence"));
  l.expert_id = require_string(j, "expert_id");
  if (require_assigned || j.contains("created_at")) l.created_at = require_time(j, "created_at");
  if (j.contains("note")) l.note = require_string(j, "note");
  if (j.contains("supersedes") && !j["supersedes"].is_null()) l.supersedes = require_string(j, "supersedes");
  validate_label(l);
  return l;
}

bool LabelFilter::matches(const DriftLabel& l) const {
  if (turbine_id && l.turbine_id != *turbine_id) return false;
  if (model_id && l.model_id != *model_id) return false;
  if (expert_id && l.expert_id != *expert_id) return false;
  if (cause && l.cause != *cause) return false;
  if (from && !(l.end > *from)) return false;
  if (to && !(l.start < *to)) return false;
  return true;
}

std::vector<ExpertInfo> read_experts_file(const std::filesystem::path& path) {
  std::vector<ExpertInfo> out;
  std::ifstream in(path);
  if (!in) return out;
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::format, "experts file is not valid JSON: " + path.string());
  }
  const ojson& list = j.is_object() && j.contains("experts") ? j["experts"] : j;
  if (!list.is_array()) throw Error(ErrorCode::format, "experts file must hold an array: " + path.string());
  for (const auto& e : list) {
    if (!e.is_object()) throw Error(ErrorCode::format, "expert entry must be an object");
    ExpertInfo info{require_string(e, "expert_id"), e.value("display_name", std::string{})};
    for (const auto& seen : out) {
      if (seen.expert_id == info.expert_id) {
        throw Error(ErrorCode::validation, "duplicate expert_id: " + info.expert_id, "expert_id");
      }
    }
    out.push_back(std::move(info));
  }
  return out;
}

void write_experts_file(const std::filesystem::path& path, std::span<const ExpertInfo> experts) {
  ojson list = ojson::array();
  for (const auto& e : experts) list.push_back({{"expert_id", e.expert_id}, {"display_name", e.display_name}});
  ojson doc;
  doc["experts"] = list;
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + tmp.string());
    out << doc.dump(2) << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::io, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
  fsync_directory(path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

struct LabelStore::Impl {
  mutable std::shared_mutex mutex;
  std::vector<DriftLabel> labels;  // log order
  std::vector<ExpertInfo> experts;
  int fd = -1;
};

LabelStore::LabelStore(std::filesystem::path directory)
    : directory_(std::move(directory)), impl_(std::make_unique<Impl>()) {
  std::error_code ec;
  std::filesystem::create_directories(directory_, ec);
  if (!std::filesystem::is_directory(directory_)) {
    throw Error(ErrorCode::io, "label store directory unavailable: " + directory_.string());
  }
  impl_->experts = read_experts_file(experts_path());

  const auto path = log_path();
  std::uintmax_t good_bytes = 0;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < content.size()) {
      const auto nl = content.find('\n', pos);
      if (nl == std::string::npos) break;  // torn final write, never acknowledged
      ++line_no;
      const std::string_view line(content.data() + pos, nl - pos);
      if (!line.empty()) {
        try {
          impl_->labels.push_back(parse_label_json(line, true));
        } catch (const Error& e) {
          throw Error(ErrorCode::format,
                      "label log line " + std::to_string(line_no) + " is corrupt: " + std::string(e.what()));
        }
      }
      pos = nl + 1;
    }
    good_bytes = pos;
    if (good_bytes != content.size()) std::filesystem::resize_file(path, good_bytes);
  }
  impl_->fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (impl_->fd < 0) throw Error(ErrorCode::io, "cannot open label log: " + path.string());
}

LabelStore::~LabelStore() {
  if (impl_ && impl_->fd >= 0) ::close(impl_->fd);
}

std::string LabelStore::append(DriftLabel label) {
  validate_label(label);
  std::unique_lock lock(impl_->mutex);
  if (std::none_of(impl_->experts.begin(), impl_->experts.end(),
                   [&](const ExpertInfo& e) { return e.expert_id == label.expert_id; })) {
    throw Error(ErrorCode::authorization, "unknown expert_id: " + label.expert_id, "expert_id");
  }
  if (label.supersedes &&
      std::none_of(impl_->labels.begin(), impl_->labels.end(),
                   [&](const DriftLabel& l) { return l.label_id == *label.supersedes; })) {
    throw Error(ErrorCode::validation, "supersedes refers to an unknown label: " + *label.supersedes, "supersedes");
  }
  char id[32];
  std::snprintf(id, sizeof id, "lbl-%06zu", impl_->labels.size() + 1);
  label.label_id = id;

  const auto line = to_json_line(label) + '\n';
  std::size_t written = 0;
  while (written < line.size()) {
    const auto n = ::write(impl_->fd, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::io, std::string("label log write failed: ") + std::strerror(errno));
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(impl_->fd) != 0) throw Error(ErrorCode::io, "label log fsync failed");
  impl_->labels.push_back(label);
  return label.label_id;
}

std::vector<DriftLabel> LabelStore::query(const LabelFilter& filter) const {
  std::vector<DriftLabel> out;
  {
    std::shared_lock lock(impl_->mutex);
    for (const auto& l : impl_->labels) {
      if (filter.matches(l)) out.push_back(l);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  return out;
}

std::optional<DriftLabel> LabelStore::find(const std::string& label_id) const {
  std::shared_lock lock(impl_->mutex);
  for (const auto& l : impl_->labels) {
    if (l.label_id == label_id) return l;
  }
  return std::nullopt;
}

std::size_t LabelStore::size() const {
  std::shared_lock lock(impl_->mutex);
  return impl_->labels.size();
}

void LabelStore::register_expert(const ExpertInfo& expert) {
  if (expert.expert_id.empty()) throw Error(ErrorCode::validation, "expert_id must not be empty", "expert_id");
  std::unique_lock lock(impl_->mutex);
  for (const auto& e : impl_->experts) {
    if (e.expert_id == expert.expert_id) {
      throw Error(ErrorCode::validation, "expert_id already registered: " + expert.expert_id, "expert_id");
    }
  }
  auto next = impl_->experts;
  next.push_back(expert);
  write_experts_file(experts_path(), next);
  impl_->experts = std::move(next);
}

std::vector<ExpertInfo> LabelStore::experts() const {
  std::shared_lock lock(impl_->mutex);
  return impl_->experts;
}

bool LabelStore::has_expert(const std::string& expert_id) const {
  std::shared_lock lock(impl_->mutex);
  return std::any_of(impl_->experts.begin(), impl_->experts.end(),
                     [&](const ExpertInfo& e) { return e.expert_id == expert_id; });
}

double jaccard(Timestamp a_start, Timestamp a_end, Timestamp b_start, Timestamp b_end) {
  const auto inter = std::min(a_end, b_end) - std::max(a_start, b_start);
  const auto uni = std::max(a_end, b_end) - std::min(a_start, b_start);
  if (inter <= Seconds{0} || uni <= Seconds{0}) return 0.0;
  return static_cast<double>(inter.count()) / static_cast<double>(uni.count());
}

namespace {

void finalize(ConsensusPeriod& p) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kDriftCauseCount; ++c) {
    if (p.cause_votes[c] > p.cause_votes[best]) best = c;
  }
  p.cause = static_cast<DriftCause>(best);
  p.cause_tied = std::count(p.cause_votes.begin(), p.cause_votes.end(), p.cause_votes[best]) > 1;
}

template <typename T>
void merge_sorted_unique(std::vector<T>& into, const std::vector<T>& from) {
  std::vector<T> out;
  std::set_union(into.begin(), into.end(), from.begin(), from.end(), std::back_inserter(out));
  into = std::move(out);
}

std::vector<ConsensusPeriod> merge_clusters(std::vector<ConsensusPeriod> clusters, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::validation, "overlap_threshold must be in [0, 1]", "overlap_threshold");
  }
  bool merged = true;
  while (merged) {
    merged = false;
    std::sort(clusters.begin(), clusters.end(),
              [](const auto& a, const auto& b) { return std::tie(a.start, a.end) < std::tie(b.start, b.end); });
    for (std::size_t i = 0; i < clusters.size() && !merged; ++i) {
      for (std::size_t k = i + 1; k < clusters.size(); ++k) {
        auto& a = clusters[i];
        const auto& b = clusters[k];
        if (b.start >= a.end) break;
        if (jaccard(a.start, a.end, b.start, b.end) < threshold) continue;
        a.start = std::min(a.start, b.start);
        a.end = std::max(a.end, b.end);
        merge_sorted_unique(a.expert_ids, b.expert_ids);
        merge_sorted_unique(a.label_ids, b.label_ids);
        for (std::size_t c = 0; c < kDriftCauseCount; ++c) a.cause_votes[c] += b.cause_votes[c];
        a.severity = std::max(a.severity, b.severity);
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(k));
        merged = true;
        break;
      }
    }
  }
  for (auto& c : clusters) finalize(c);
  return clusters;
}

}  // namespace

std::vector<ConsensusPeriod> consensus(std::span<const DriftLabel> labels, double overlap_threshold) {
  std::vector<ConsensusPeriod> clusters;
  for (const auto& l : labels) {
    ConsensusPeriod p;
    p.start = l.start;
    p.end = l.end;
    p.expert_ids = {l.expert_id};
    p.label_ids = {l.label_id};
    p.cause_votes[static_cast<std::size_t>(l.cause)] = 1;
    p.severity = l.severity;
    clusters.push_back(std::move(p));
  }
  return merge_clusters(std::move(clusters), overlap_threshold);
}

std::vector<ConsensusPeriod> consensus(std::span<const ConsensusPeriod> periods, double overlap_threshold) {
  return merge_clusters(std::vector<ConsensusPeriod>(periods.begin(), periods.end()), overlap_threshold);
}

void write_labels_jsonl(std::ostream& out, std::span<const DriftLabel> labels) {
  for (const auto& l : labels) out << to_json_line(l) << '\n';
}

}  // namespace driftbench
