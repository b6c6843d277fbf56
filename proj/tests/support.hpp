#pragma once

#include <atomic>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "driftbench/ensemble.hpp"
#include "driftbench/time.hpp"

namespace testing {

inline const driftbench::Timestamp kEpoch = driftbench::parse_rfc3339("2016-01-01T00:00:00Z");

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("driftbench-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

/// Residual series on the 10-minute grid; nullopt values become gaps.
inline driftbench::ResidualSeries residual_series(const std::vector<std::optional<double>>& values,
                                                  driftbench::Timestamp start = kEpoch) {
  driftbench::ResidualSeries s;
  s.turbine_id = "T";
  for (std::size_t i = 0; i < values.size(); ++i) {
    driftbench::ResidualEntry e;
    e.timestamp = start + driftbench::kScadaStep * static_cast<std::int64_t>(i);
    e.residual = values[i];
    e.actual = values[i].value_or(0.0);
    if (values[i]) {
      e.predicted = 0.0;
      e.n_members = 1;
    }
    s.entries.push_back(e);
  }
  return s;
}

inline std::vector<std::optional<double>> gaussian(std::size_t n, std::uint64_t seed, double mean = 0.0,
                                                   double sd = 1.0) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> dist(mean, sd);
  std::vector<std::optional<double>> out(n);
  for (auto& v : out) v = dist(eng);
  return out;
}

}  // namespace testing
