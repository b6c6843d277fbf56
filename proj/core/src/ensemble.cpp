#include "driftbench/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "binary_io.hpp"
#include "driftbench/errors.hpp"
#include "driftbench/random.hpp"

namespace driftbench {

std::vector<Batch> partition_batches(std::size_t n_rows, std::size_t batch_size, double validation_fraction,
                                     std::uint64_t seed) {
  if (batch_size < 20) throw Error(ErrorCode::config, "batch_size must be >= 20", "batch_size");
  if (!(validation_fraction > 0.0 && validation_fraction < 0.5)) {
    throw Error(ErrorCode::config, "validation_fraction must lie in (0, 0.5)", "validation_fraction");
  }
  if (2 * n_rows < batch_size) {
    throw Error(ErrorCode::insufficient_data, "series shorter than half a batch (" + std::to_string(n_rows) +
                                                  " rows, batch_size " + std::to_string(batch_size) + ")");
  }

  std::vector<Batch> batches;
  for (std::size_t begin = 0; begin < n_rows; begin += batch_size) {
    const std::size_t end = std::min(n_rows, begin + batch_size);
    if (2 * (end - begin) < batch_size) break;

    Batch batch;
    batch.index = batches.size();
    batch.begin = begin;
    batch.end = end;
    const std::size_t size = end - begin;
    auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(size)));
    n_val = std::clamp<std::size_t>(n_val, 1, size - 2);

    std::vector<std::size_t> rows(size);
    std::iota(rows.begin(), rows.end(), begin);
    Rng rng(mix_seed(seed, 0x5A11 + batch.index));
    for (std::size_t i = 0; i < n_val; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(size - i));
      std::swap(rows[i], rows[j]);
    }
    batch.validation_rows.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_val));
    batch.train_rows.assign(rows.begin() + static_cast<std::ptrdiff_t>(n_val), rows.end());
    std::sort(batch.validation_rows.begin(), batch.validation_rows.end());
    std::sort(batch.train_rows.begin(), batch.train_rows.end());
    batches.push_back(std::move(batch));
  }
  return batches;
}

// ---------------------------------------------------------------------------

CertaintyFilter::CertaintyFilter(std::vector<Dimension> dims, std::size_t bins, std::size_t min_occupancy)
    : dims_(std::move(dims)), bins_(bins), min_occupancy_(min_occupancy) {
  if (bins_ < 2) throw Error(ErrorCode::config, "certainty filter needs at least 2 bins", "bins");
  for (const auto& d : dims_) {
    const bool degenerate = d.edges.empty();
    if (degenerate ? d.counts.size() != 1 : (d.edges.size() != bins_ + 1 || d.counts.size() != bins_)) {
      throw Error(ErrorCode::shape, "certainty filter bin layout inconsistent");
    }
    for (std::size_t k = 1; k < d.edges.size(); ++k) {
      if (!(d.edges[k] > d.edges[k - 1])) throw Error(ErrorCode::format, "certainty filter edges not increasing");
    }
  }
}

CertaintyFilter CertaintyFilter::build(const Eigen::MatrixXd& x_train, std::size_t bins, std::size_t min_occupancy) {
  if (x_train.rows() == 0) throw Error(ErrorCode::empty_input, "certainty filter needs training rows");
  if (bins < 2) throw Error(ErrorCode::config, "certainty filter needs at least 2 bins", "bins");

  std::vector<Dimension> dims(static_cast<std::size_t>(x_train.cols()));
  for (Eigen::Index k = 0; k < x_train.cols(); ++k) {
    auto& dim = dims[static_cast<std::size_t>(k)];
    dim.min = x_train.col(k).minCoeff();
    dim.max = x_train.col(k).maxCoeff();
    const double width = (dim.max - dim.min) / static_cast<double>(bins);
    bool degenerate = !(dim.max > dim.min);
    if (!degenerate) {
      dim.edges.resize(bins + 1);
      for (std::size_t b = 0; b < bins; ++b) dim.edges[b] = dim.min + width * static_cast<double>(b);
      dim.edges[bins] = dim.max;
      for (std::size_t b = 1; b <= bins; ++b) degenerate = degenerate || !(dim.edges[b] > dim.edges[b - 1]);
    }
    if (degenerate) {
      dim.edges.clear();
      dim.counts.assign(1, static_cast<std::size_t>(x_train.rows()));
    } else {
      dim.counts.assign(bins, 0);
    }
  }

  CertaintyFilter filter(std::move(dims), bins, min_occupancy);
  for (Eigen::Index k = 0; k < x_train.cols(); ++k) {
    auto& dim = filter.dims_[static_cast<std::size_t>(k)];
    if (dim.edges.empty()) continue;
    for (Eigen::Index r = 0; r < x_train.rows(); ++r) {
      ++dim.counts[*filter.bin_of(static_cast<std::size_t>(k), x_train(r, k))];
    }
  }
  return filter;
}

std::optional<std::size_t> CertaintyFilter::bin_of(std::size_t dim, double value) const {
  const auto& d = dims_.at(dim);
  if (d.edges.empty()) {
    if (std::abs(value - d.min) <= kDegenerateTolerance) return 0;
    return std::nullopt;
  }
  if (!(value >= d.min && value <= d.max)) return std::nullopt;
  auto it = std::upper_bound(d.edges.begin(), d.edges.end(), value);
  auto idx = static_cast<std::size_t>(std::distance(d.edges.begin(), it)) - 1;
  return std::min(idx, bins_ - 1);
}

bool CertaintyFilter::is_certain(std::span<const double> x) const {
  if (x.size() != dims_.size()) throw Error(ErrorCode::shape, "certainty query dimension mismatch");
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    auto bin = bin_of(k, x[k]);
    if (!bin || dims_[k].counts[*bin] < min_occupancy_) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

std::string to_string(Predictor p) {
  switch (p) {
    case Predictor::ambient_temp: return "ambient_temp";
    case Predictor::wind_speed: return "wind_speed";
    case Predictor::turbulence: return "turbulence";
  }
  return {};
}

Predictor parse_predictor(const std::string& s) {
  if (s == "ambient_temp") return Predictor::ambient_temp;
  if (s == "wind_speed") return Predictor::wind_speed;
  if (s == "turbulence") return Predictor::turbulence;
  throw Error(ErrorCode::config, "unknown predictor: " + s, "predictors");
}

void EnsembleConfig::validate() const {
  if (batch_size < 20) throw Error(ErrorCode::config, "batch_size must be >= 20", "batch_size");
  if (!(validation_fraction > 0.0 && validation_fraction < 0.5)) {
    throw Error(ErrorCode::config, "validation_fraction must lie in (0, 0.5)", "validation_fraction");
  }
  if (bins < 2) throw Error(ErrorCode::config, "bins must be >= 2", "bins");
  if (predictors.empty()) throw Error(ErrorCode::config, "at least one predictor required", "predictors");
  if (!(rejection_rmse > 0.0)) throw Error(ErrorCode::config, "rejection_rmse must be > 0", "rejection_rmse");
}

Eigen::MatrixXd predictor_matrix(const TurbineSeries& series, std::span<const Predictor> predictors) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(series.records.size()), static_cast<Eigen::Index>(predictors.size()));
  for (std::size_t i = 0; i < series.records.size(); ++i) {
    const auto& r = series.records[i];
    for (std::size_t k = 0; k < predictors.size(); ++k) {
      double v = 0.0;
      switch (predictors[k]) {
        case Predictor::ambient_temp: v = r.ambient_temp; break;
        case Predictor::wind_speed: v = r.wind_speed; break;
        case Predictor::turbulence: v = r.turbulence; break;
      }
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
    }
  }
  return x;
}

Eigen::VectorXd power_vector(const TurbineSeries& series) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(series.records.size()));
  for (std::size_t i = 0; i < series.records.size(); ++i) y[static_cast<Eigen::Index>(i)] = series.records[i].power;
  return y;
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& v, const std::vector<std::size_t>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(rows[i])];
  return out;
}

}  // namespace

EnsembleModel train_ensemble(const TurbineSeries& series, const EnsembleConfig& config, std::uint64_t seed) {
  config.validate();
  const auto batches =
      partition_batches(series.records.size(), config.batch_size, config.validation_fraction, seed);
  const Eigen::MatrixXd x = predictor_matrix(series, config.predictors);
  const Eigen::VectorXd y = power_vector(series);

  auto train_member = [&](const Batch& batch) {
    ElmParams params = config.elm;
    params.input_dim = config.predictors.size();
    params.seed = mix_seed(seed, 0xE1E0 + batch.index);
    const auto x_train = take_rows(x, batch.train_rows);
    auto model = train_elm(x_train, take_rows(y, batch.train_rows), params);
    const double rmse = validation_rmse(model, take_rows(x, batch.validation_rows), take_rows(y, batch.validation_rows));
    auto filter = CertaintyFilter::build(x_train, config.bins, config.min_occupancy);
    return EnsembleMember{std::move(model), std::move(filter), rmse, member_weight(rmse), batch.index};
  };

  std::vector<std::future<EnsembleMember>> pending;
  pending.reserve(batches.size());
  for (const auto& batch : batches) pending.push_back(std::async(std::launch::async, train_member, std::cref(batch)));

  EnsembleModel ensemble;
  ensemble.predictors = config.predictors;
  for (auto& f : pending) {
    auto member = f.get();
    if (member.validation_rmse <= config.rejection_rmse) ensemble.members.push_back(std::move(member));
  }
  if (ensemble.members.empty()) {
    throw Error(ErrorCode::no_usable_model, "every ensemble member exceeded the rejection threshold");
  }
  return ensemble;
}

CombinedPrediction combine_predictions(std::span<const double> predictions, std::span<const double> weights,
                                       std::span<const bool> certain) {
  if (predictions.size() != weights.size() || predictions.size() != certain.size()) {
    throw Error(ErrorCode::shape, "combination inputs disagree in length");
  }
  double num = 0.0;
  double den = 0.0;
  CombinedPrediction out;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!certain[i]) continue;
    num += weights[i] * predictions[i];
    den += weights[i];
    ++out.n_contributing;
  }
  if (out.n_contributing > 0) out.value = num / den;
  return out;
}

std::vector<double> normalized_weights(const EnsembleModel& model) {
  double total = 0.0;
  for (const auto& m : model.members) total += m.weight;
  std::vector<double> out;
  for (const auto& m : model.members) out.push_back(m.weight / total);
  return out;
}

std::size_t ResidualSeries::count_present() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const ResidualEntry& e) { return e.residual.has_value(); }));
}

ResidualSeries ensemble_residuals(const EnsembleModel& model, const TurbineSeries& series) {
  const Eigen::MatrixXd x = predictor_matrix(series, model.predictors);
  const auto n = static_cast<std::size_t>(x.rows());
  const std::size_t m = model.members.size();

  std::vector<Eigen::VectorXd> member_predictions(m);
  std::vector<std::vector<bool>> member_certain(m, std::vector<bool>(n));
  std::vector<double> weights(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& member = model.members[j];
    if (member.filter.input_dim() != static_cast<std::size_t>(x.cols())) {
      throw Error(ErrorCode::shape, "series predictors do not match ensemble input dimension");
    }
    member_predictions[j] = member.model.predict(x);
    weights[j] = member.weight;
    std::vector<double> row(static_cast<std::size_t>(x.cols()));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < row.size(); ++k) row[k] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      member_certain[j][i] = member.filter.is_certain(row);
    }
  }

  ResidualSeries out;
  out.turbine_id = series.turbine_id;
  out.entries.reserve(n);
  std::vector<double> preds(m);
  auto certain = std::make_unique<bool[]>(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      preds[j] = member_predictions[j][static_cast<Eigen::Index>(i)];
      certain[j] = member_certain[j][i];
    }
    const auto combined = combine_predictions(preds, weights, std::span<const bool>(certain.get(), m));
    ResidualEntry e;
    e.timestamp = series.records[i].timestamp;
    e.actual = series.records[i].power;
    e.n_members = combined.n_contributing;
    if (combined.value) {
      e.predicted = *combined.value;
      e.residual = e.actual - *combined.value;
    }
    out.entries.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kEnsembleMagic[9] = "DBENSMBL";
constexpr std::uint64_t kEnsembleVersion = 1;

void save_filter(std::ostream& out, const CertaintyFilter& f) {
  using namespace binary;
  write_u64(out, f.bins());
  write_u64(out, f.min_occupancy());
  write_u64(out, f.input_dim());
  for (const auto& d : f.dimensions()) {
    write_f64(out, d.min);
    write_f64(out, d.max);
    write_u64(out, d.edges.size());
    for (double e : d.edges) write_f64(out, e);
    write_u64(out, d.counts.size());
    for (auto c : d.counts) write_u64(out, c);
  }
}

CertaintyFilter load_filter(std::istream& in) {
  using namespace binary;
  const auto bins = read_u64(in);
  const auto min_occ = read_u64(in);
  const auto dims = read_u64(in);
  if (dims > 4096 || bins > (1u << 20)) throw Error(ErrorCode::format, "implausible filter layout");
  std::vector<CertaintyFilter::Dimension> out(dims);
  for (auto& d : out) {
    d.min = read_f64(in);
    d.max = read_f64(in);
    d.edges.resize(read_u64(in));
    for (auto& e : d.edges) e = read_f64(in);
    d.counts.resize(read_u64(in));
    for (auto& c : d.counts) c = read_u64(in);
  }
  return CertaintyFilter(std::move(out), bins, min_occ);
}

}  // namespace

void save_ensemble(std::ostream& out, const EnsembleModel& model) {
  using namespace binary;
  write_magic(out, kEnsembleMagic);
  write_u64(out, kEnsembleVersion);
  write_u64(out, model.predictors.size());
  for (auto p : model.predictors) write_u64(out, static_cast<std::uint64_t>(p));
  write_u64(out, model.combination_rule.size());
  out.write(model.combination_rule.data(), static_cast<std::streamsize>(model.combination_rule.size()));
  write_u64(out, model.members.size());
  for (const auto& m : model.members) {
    write_u64(out, m.batch_index);
    write_f64(out, m.validation_rmse);
    write_f64(out, m.weight);
    save_filter(out, m.filter);
    save_elm(out, m.model);
  }
}

EnsembleModel load_ensemble(std::istream& in) {
  using namespace binary;
  expect_magic(in, kEnsembleMagic);
  if (read_u64(in) != kEnsembleVersion) throw Error(ErrorCode::format, "unsupported ensemble file version");
  EnsembleModel model;
  const auto n_pred = read_u64(in);
  if (n_pred > 3) throw Error(ErrorCode::format, "too many predictors in ensemble file");
  for (std::uint64_t i = 0; i < n_pred; ++i) {
    const auto p = read_u64(in);
    if (p > 2) throw Error(ErrorCode::format, "unknown predictor id");
    model.predictors.push_back(static_cast<Predictor>(p));
  }
  const auto rule_len = read_u64(in);
  if (rule_len > 256) throw Error(ErrorCode::format, "implausible rule name");
  model.combination_rule.resize(rule_len);
  if (!in.read(model.combination_rule.data(), static_cast<std::streamsize>(rule_len))) {
    throw Error(ErrorCode::format, "truncated ensemble file");
  }
  const auto n_members = read_u64(in);
  if (n_members > 1'000'000) throw Error(ErrorCode::format, "implausible member count");
  for (std::uint64_t i = 0; i < n_members; ++i) {
    const auto batch_index = read_u64(in);
    const double rmse = read_f64(in);
    const double weight = read_f64(in);
    auto filter = load_filter(in);
    auto elm = load_elm(in);
    model.members.push_back(EnsembleMember{std::move(elm), std::move(filter), rmse, weight, batch_index});
  }
  return model;
}

}  // namespace driftbench
