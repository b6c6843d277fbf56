#pragma once

// Internal algorithm states behind driftbench::Detector. Each struct is a
// value type: constructing it from a resolved config yields the reset state,
// and equality compares every sufficient statistic.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <variant>
#include <vector>

#include "driftbench/detectors.hpp"
#include "driftbench/random.hpp"

namespace driftbench::detail {

/// Maps a value from [lower, upper] onto [0, 1], clamping outliers.
struct UnitMap {
  double lower = -4.0;
  double upper = 4.0;
  double operator()(double x) const noexcept;
  bool operator==(const UnitMap&) const = default;
};

/// Welford running mean and variance.
struct RunningMoments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) noexcept;
  double variance() const noexcept;  // sample variance, 0 for n < 2
  bool operator==(const RunningMoments&) const = default;
};

struct Adwin {
  struct Bucket {
    double total = 0.0;
    double variance = 0.0;
    bool operator==(const Bucket&) const = default;
  };
  double delta;
  std::size_t clock;
  std::size_t max_buckets;
  std::size_t min_window;
  std::vector<std::deque<Bucket>> rows;  // rows[i] holds buckets of 2^i items, newest first
  std::size_t width = 0;
  double total = 0.0;
  double variance = 0.0;  // sum of squared deviations
  std::size_t ticks = 0;
  double last_difference = 0.0;

  explicit Adwin(const DetectorConfig& c);
  DetectorStatus update(double x);
  double statistic() const noexcept { return last_difference; }
  std::size_t min_samples() const noexcept { return clock; }
  bool operator==(const Adwin&) const = default;

 private:
  void insert(double x);
  void compress();
  bool detect_cut();
};

struct Cusum {
  double drift;
  double threshold;
  std::size_t min_instances;
  std::size_t n = 0;
  double upper = 0.0;
  double lower = 0.0;

  explicit Cusum(const DetectorConfig& c);
  DetectorStatus update(double x);
  double statistic() const noexcept { return upper > lower ? upper : lower; }
  std::size_t min_samples() const noexcept { return min_instances; }
  bool operator==(const Cusum&) const = default;
};

struct PageHinkley {
  double delta;
  double lambda;
  double alpha;
  std::size_t min_instances;
  RunningMoments moments;
  double sum_up = 0.0;
  double min_up = 0.0;
  double sum_down = 0.0;
  double max_down = 0.0;

  explicit PageHinkley(const DetectorConfig& c);
  DetectorStatus update(double x);
  double statistic() const noexcept;
  std::size_t min_samples() const noexcept { return min_instances; }
  bool operator==(const PageHinkley&) const = default;
};

struct Gma {
  double smoothing;
  double threshold;
  std::size_t min_instances;
  RunningMoments moments;
  double average = 0.0;
  double last_score = 0.0;

  explicit Gma(const DetectorConfig& c);
  DetectorStatus update(double x);
  double statistic() const noexcept { return last_score; }
  std::size_t min_samples() const noexcept { return min_instances; }
  bool operator==(const Gma&) const = default;
};

struct HddmA {
  double drift_confidence;
  double warning_confidence;
  bool two_sided;
  UnitMap map;
  double n = 0.0;
  double sum = 0.0;
  double n_min = 0.0;
  double sum_min = 0.0;
  double n_max = 0.0;
  double sum_max = 0.0;
  double last_gap = 0.0;

  explicit HddmA(const DetectorConfig& c);
  DetectorStatus update(double x);
  double statistic() const noexcept { return last_gap; }
  std::size_t min_samples() const noexcept { return 2; }
  bool operator==(const HddmA&) const = default;
};

struct HddmW {
  struct Sample {
    bool empty = true;
    double ewma = 0.0;
    double bounded_condition = 1.0;
    bool operator==(const Sample&) const = default;
  };
  double lambda;
  double drift_confidence;
  double warning_confidence;
  bool two_sided;
  UnitMap map;
  Sample total;
  Sample incr_reference, incr_recent;
  Sample decr_reference, decr_recent;
  double incr_cut = std::numeric_limits<double>::infinity();
  double decr_cut = -std::numeric_limits<double>::infinity();
  double last_gap = 0.0;

  explicit HddmW(const DetectorConfig& c);
  DetectorStatus update(double x);
  double statistic() const noexcept { return last_gap; }
  std::size_t min_samples() const noexcept { return 2; }
  bool operator==(const HddmW&) const = default;
};

struct Stepd {
  std::size_t window;
  double alpha_drift;
  double alpha_warning;
  UnitMap map;
  std::deque<double> recent;
  double recent_sum = 0.0;
  double older_n = 0.0;
  double older_sum = 0.0;
  double last_z = 0.0;

  explicit Stepd(const DetectorConfig& c);
  DetectorStatus update(double x);
  double statistic() const noexcept { return last_z; }
  std::size_t min_samples() const noexcept { return 2 * window; }
  bool operator==(const Stepd&) const = default;
};

struct Seed {
  struct Block {
    double n = 0.0;
    double total = 0.0;
    double m2 = 0.0;  // sum of squared deviations about the block mean
    bool operator==(const Block&) const = default;
  };
  double delta;
  std::size_t block_size;
  double epsilon_prime;
  std::size_t compression_term;
  std::vector<Block> blocks;  // oldest first
  Block filling;
  double last_difference = 0.0;

  explicit Seed(const DetectorConfig& c);
  DetectorStatus update(double x);
  double statistic() const noexcept { return last_difference; }
  std::size_t min_samples() const noexcept { return 2 * block_size; }
  bool operator==(const Seed&) const = default;

 private:
  bool detect();
  void compress();
};

struct SeqDrift1 {
  double delta;
  std::size_t block_size;
  UnitMap map;
  RunningMoments left;
  std::vector<double> right;
  std::size_t tests = 0;
  double last_difference = 0.0;

  explicit SeqDrift1(const DetectorConfig& c);
  DetectorStatus update(double x);
  double statistic() const noexcept { return last_difference; }
  std::size_t min_samples() const noexcept { return 2 * block_size; }
  bool operator==(const SeqDrift1&) const = default;
};

struct SeqDrift2 {
  double delta;
  std::size_t block_size;
  std::size_t reservoir_size;
  UnitMap map;
  Rng rng;
  std::vector<double> reservoir;
  std::size_t left_seen = 0;
  std::vector<double> right;
  std::size_t tests = 0;
  double last_difference = 0.0;

  explicit SeqDrift2(const DetectorConfig& c);
  DetectorStatus update(double x);
  double statistic() const noexcept { return last_difference; }
  std::size_t min_samples() const noexcept { return 2 * block_size; }
  bool operator==(const SeqDrift2&) const = default;
};

using Algorithm = std::variant<Adwin, Cusum, Gma, HddmA, HddmW, PageHinkley, Seed, SeqDrift1, SeqDrift2, Stepd>;

Algorithm make_algorithm(const DetectorConfig& config);

struct AlgorithmState {
  Algorithm algorithm;
  RunningMoments standardizer;
  bool operator==(const AlgorithmState&) const = default;
};

/// Upper-tail probability of the standard normal.
double normal_upper_tail(double z) noexcept;

}  // namespace driftbench::detail
