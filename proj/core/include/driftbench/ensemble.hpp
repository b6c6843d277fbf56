#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "driftbench/elm.hpp"
#include "driftbench/scada.hpp"

namespace driftbench {

/// A contiguous block of series rows; row indices are absolute.
struct Batch {
  std::size_t index = 0;
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> validation_rows;

  std::size_t size() const noexcept { return end - begin; }
};

/// Contiguous non-overlapping batches in time order. A trailing partial batch
/// is kept only when it holds at least half of `batch_size` rows. Validation
/// rows are drawn uniformly without replacement inside each batch.
std::vector<Batch> partition_batches(std::size_t n_rows, std::size_t batch_size, double validation_fraction,
                                     std::uint64_t seed);

/// Axis-aligned occupancy gate: a point is certain when every coordinate lies
/// inside the training range and lands in a bin holding at least
/// `min_occupancy` training samples. Bins are [e_k, e_{k+1}) except the last,
/// which is closed; a value exactly on an interior edge belongs to the upper bin.
class CertaintyFilter {
 public:
  struct Dimension {
    double min = 0.0;
    double max = 0.0;
    std::vector<double> edges;          // bins + 1 entries, strictly increasing (empty if degenerate)
    std::vector<std::size_t> counts;    // one per bin (single entry if degenerate)
    bool operator==(const Dimension&) const = default;
  };

  static constexpr double kDegenerateTolerance = 1e-9;

  CertaintyFilter() = default;
  CertaintyFilter(std::vector<Dimension> dims, std::size_t bins, std::size_t min_occupancy);

  static CertaintyFilter build(const Eigen::MatrixXd& x_train, std::size_t bins, std::size_t min_occupancy);

  bool is_certain(std::span<const double> x) const;
  /// Bin holding `value` in dimension `dim`, or nullopt when out of range.
  std::optional<std::size_t> bin_of(std::size_t dim, double value) const;

  std::size_t input_dim() const noexcept { return dims_.size(); }
  std::size_t bins() const noexcept { return bins_; }
  std::size_t min_occupancy() const noexcept { return min_occupancy_; }
  const std::vector<Dimension>& dimensions() const noexcept { return dims_; }

  bool operator==(const CertaintyFilter&) const = default;

 private:
  std::vector<Dimension> dims_;
  std::size_t bins_ = 0;
  std::size_t min_occupancy_ = 1;
};

enum class Predictor { ambient_temp, wind_speed, turbulence };

std::string to_string(Predictor p);
Predictor parse_predictor(const std::string& s);

/// Member ELM settings used by default: wider and less regularized than the
/// standalone ELM defaults.
inline ElmParams default_member_params() {
  ElmParams p;
  p.hidden_width = 200;
  p.ridge_lambda = 1e-5;
  return p;
}

struct EnsembleConfig {
  std::size_t batch_size = 4320;  // one month of 10-minute rows
  double validation_fraction = 0.2;
  std::size_t bins = 20;
  std::size_t min_occupancy = 20;
  double rejection_rmse = std::numeric_limits<double>::infinity();
  ElmParams elm = default_member_params();
  std::vector<Predictor> predictors{Predictor::ambient_temp, Predictor::wind_speed, Predictor::turbulence};

  void validate() const;
};

struct EnsembleMember {
  ElmModel model;
  CertaintyFilter filter;
  double validation_rmse = 0.0;
  double weight = 0.0;  // unnormalized, 1 / max(validation_rmse, 1e-6)
  std::size_t batch_index = 0;
};

inline constexpr double kRmseFloor = 1e-6;
inline constexpr const char* kInverseRmseRule = "inverse_validation_rmse";

inline double member_weight(double validation_rmse) { return 1.0 / std::max(validation_rmse, kRmseFloor); }

struct EnsembleModel {
  std::vector<Predictor> predictors;
  std::vector<EnsembleMember> members;
  std::string combination_rule = kInverseRmseRule;
};

Eigen::MatrixXd predictor_matrix(const TurbineSeries& series, std::span<const Predictor> predictors);
Eigen::VectorXd power_vector(const TurbineSeries& series);

/// One ELM and certainty filter per batch, weighted by inverse validation RMSE.
/// Members above `rejection_rmse` are dropped; throws Error{no_usable_model}
/// when none remain.
EnsembleModel train_ensemble(const TurbineSeries& series, const EnsembleConfig& config, std::uint64_t seed);

struct CombinedPrediction {
  std::optional<double> value;
  std::size_t n_contributing = 0;
};

/// Weighted mean of the member predictions whose gate is open, with the
/// weights renormalized over that subset.
CombinedPrediction combine_predictions(std::span<const double> predictions, std::span<const double> weights,
                                       std::span<const bool> certain);

/// Normalized weights over all members (every member treated as certain).
std::vector<double> normalized_weights(const EnsembleModel& model);

struct ResidualEntry {
  Timestamp timestamp;
  double actual = 0.0;
  std::optional<double> predicted;
  std::optional<double> residual;
  std::size_t n_members = 0;

  bool operator==(const ResidualEntry&) const = default;
};

struct ResidualSeries {
  std::string turbine_id;
  std::vector<ResidualEntry> entries;

  std::size_t count_present() const;
};

ResidualSeries ensemble_residuals(const EnsembleModel& model, const TurbineSeries& series);

void save_ensemble(std::ostream& out, const EnsembleModel& model);
EnsembleModel load_ensemble(std::istream& in);

/// `timestamp,actual,predicted,residual,n_members`, empty fields for missing.
void write_residuals_csv(std::ostream& out, const ResidualSeries& residuals);
ResidualSeries read_residuals_csv(std::istream& in, const std::string& turbine_id = {});

}  // namespace driftbench
