#include "driftbench/elm.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "binary_io.hpp"
#include "driftbench/errors.hpp"
#include "driftbench/random.hpp"

namespace driftbench {

namespace {

constexpr char kElmMagic[9] = "DBELM\0\0\0";
constexpr std::uint64_t kElmVersion = 1;

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace

void ElmParams::validate() const {
  if (hidden_width < 1) throw Error(ErrorCode::config, "hidden_width must be >= 1", "hidden_width");
  if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda)) {
    throw Error(ErrorCode::config, "ridge_lambda must be finite and >= 0", "ridge_lambda");
  }
  if (input_dim < 1) throw Error(ErrorCode::config, "input_dim must be >= 1", "input_dim");
}

double apply_activation(Activation a, double z) noexcept {
  if (a == Activation::tanh) return std::tanh(z);
  return 1.0 / (1.0 + std::exp(-z));
}

Eigen::MatrixXd InputScaler::apply(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd z = x.rowwise() - mean.transpose();
  return z.array().rowwise() / sd.transpose().array();
}

ElmModel::ElmModel(ElmParams params, InputScaler scaler, Eigen::MatrixXd input_weights, Eigen::VectorXd biases,
                   Eigen::VectorXd output_weights)
    : params_(params),
      scaler_(std::move(scaler)),
      input_weights_(std::move(input_weights)),
      biases_(std::move(biases)),
      output_weights_(std::move(output_weights)) {
  params_.validate();
  const auto L = static_cast<Eigen::Index>(params_.hidden_width);
  const auto d = static_cast<Eigen::Index>(params_.input_dim);
  if (input_weights_.rows() != L || input_weights_.cols() != d || biases_.size() != L ||
      output_weights_.size() != L + 1 || scaler_.mean.size() != d || scaler_.sd.size() != d) {
    throw Error(ErrorCode::shape, "ELM component dimensions disagree with params");
  }
  if (!all_finite(input_weights_) || !biases_.allFinite() || !output_weights_.allFinite() ||
      !scaler_.mean.allFinite() || !scaler_.sd.allFinite() || (scaler_.sd.array() <= 0.0).any()) {
    throw Error(ErrorCode::format, "ELM model has non-finite entries or non-positive scaler sd");
  }
}

Eigen::MatrixXd ElmModel::hidden(const Eigen::MatrixXd& x) const {
  if (x.cols() != static_cast<Eigen::Index>(params_.input_dim)) {
    throw Error(ErrorCode::shape, "predictor matrix has " + std::to_string(x.cols()) + " columns, model expects " +
                                      std::to_string(params_.input_dim));
  }
  const auto L = input_weights_.rows();
  Eigen::MatrixXd h(x.rows(), L + 1);
  Eigen::MatrixXd pre = scaler_.apply(x) * input_weights_.transpose();
  pre.rowwise() += biases_.transpose();
  const auto act = params_.activation;
  h.leftCols(L) = pre.unaryExpr([act](double z) { return apply_activation(act, z); });
  h.col(L).setOnes();
  return h;
}

Eigen::VectorXd ElmModel::predict(const Eigen::MatrixXd& x) const {
  if (x.rows() == 0) {
    if (x.cols() != static_cast<Eigen::Index>(params_.input_dim) && x.cols() != 0) {
      throw Error(ErrorCode::shape, "predictor matrix column count mismatch");
    }
    return Eigen::VectorXd(0);
  }
  return hidden(x) * output_weights_;
}

double ElmModel::predict_one(const double* row) const {
  const auto d = input_weights_.cols();
  const auto L = input_weights_.rows();
  double acc = output_weights_[L];
  for (Eigen::Index j = 0; j < L; ++j) {
    double z = biases_[j];
    for (Eigen::Index k = 0; k < d; ++k) z += input_weights_(j, k) * ((row[k] - scaler_.mean[k]) / scaler_.sd[k]);
    acc += output_weights_[j] * apply_activation(params_.activation, z);
  }
  return acc;
}

ElmModel train_elm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ElmParams& params) {
  params.validate();
  const auto n = x.rows();
  const auto d = static_cast<Eigen::Index>(params.input_dim);
  if (n < 2) throw Error(ErrorCode::insufficient_data, "ELM training needs at least 2 rows");
  if (x.cols() != d) throw Error(ErrorCode::shape, "predictor columns do not match input_dim");
  if (y.size() != n) throw Error(ErrorCode::shape, "response length does not match predictor rows");
  if (!x.allFinite() || !y.allFinite()) throw Error(ErrorCode::input, "training data has non-finite entries");

  InputScaler scaler;
  scaler.mean = x.colwise().mean().transpose();
  scaler.sd.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const double var = (x.col(k).array() - scaler.mean[k]).square().mean();
    const double sd = std::sqrt(var);
    scaler.sd[k] = sd > 0.0 ? sd : 1.0;
  }

  const auto L = static_cast<Eigen::Index>(params.hidden_width);
  Rng rng(params.seed);
  Eigen::MatrixXd w(L, d);
  for (Eigen::Index j = 0; j < L; ++j)
    for (Eigen::Index k = 0; k < d; ++k) w(j, k) = rng.uniform(-1.0, 1.0);
  Eigen::VectorXd b(L);
  for (Eigen::Index j = 0; j < L; ++j) b[j] = rng.uniform(-1.0, 1.0);

  // Placeholder output layer so the hidden map can be evaluated.
  ElmModel shell(params, scaler, w, b, Eigen::VectorXd::Zero(L + 1));
  const Eigen::MatrixXd h = shell.hidden(x);

  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(L + 1, params.ridge_lambda);
  penalty[L] = 0.0;

  Eigen::MatrixXd gram = h.transpose() * h;
  gram.diagonal() += penalty;
  const Eigen::VectorXd rhs = h.transpose() * y;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  Eigen::VectorXd beta;
  bool stable = ldlt.info() == Eigen::Success && ldlt.isPositive();
  if (stable) {
    const auto diag = ldlt.vectorD().cwiseAbs();
    stable = diag.minCoeff() > diag.maxCoeff() * 1e-13;
  }
  if (stable) {
    beta = ldlt.solve(rhs);
  } else {
    // Minimum-norm least squares on the penalty-augmented system.
    Eigen::MatrixXd aug(n + L + 1, L + 1);
    aug.topRows(n) = h;
    aug.bottomRows(L + 1) = penalty.cwiseSqrt().asDiagonal();
    Eigen::VectorXd target = Eigen::VectorXd::Zero(n + L + 1);
    target.head(n) = y;
    beta = aug.completeOrthogonalDecomposition().solve(target);
  }
  return ElmModel(params, std::move(scaler), std::move(w), std::move(b), std::move(beta));
}

double validation_rmse(const ElmModel& model, const Eigen::MatrixXd& x_val, const Eigen::VectorXd& y_val) {
  if (x_val.rows() == 0) throw Error(ErrorCode::empty_input, "validation set is empty");
  if (y_val.size() != x_val.rows()) throw Error(ErrorCode::shape, "validation response length mismatch");
  const Eigen::VectorXd err = model.predict(x_val) - y_val;
  return std::sqrt(err.squaredNorm() / static_cast<double>(err.size()));
}

void save_elm(std::ostream& out, const ElmModel& model) {
  using namespace binary;
  write_magic(out, kElmMagic);
  write_u64(out, kElmVersion);
  const auto& p = model.params();
  write_u64(out, p.hidden_width);
  write_u64(out, p.activation == Activation::tanh ? 1 : 0);
  write_f64(out, p.ridge_lambda);
  write_u64(out, p.input_dim);
  write_u64(out, p.seed);
  write_vector(out, model.scaler().mean);
  write_vector(out, model.scaler().sd);
  write_matrix(out, model.input_weights());
  write_vector(out, model.biases());
  write_vector(out, model.output_weights());
}

ElmModel load_elm(std::istream& in) {
  using namespace binary;
  expect_magic(in, kElmMagic);
  const auto version = read_u64(in);
  if (version != kElmVersion) throw Error(ErrorCode::format, "unsupported ELM file version " + std::to_string(version));
  ElmParams p;
  p.hidden_width = read_u64(in);
  p.activation = read_u64(in) == 1 ? Activation::tanh : Activation::sigmoid;
  p.ridge_lambda = read_f64(in);
  p.input_dim = read_u64(in);
  p.seed = read_u64(in);
  InputScaler scaler;
  scaler.mean = read_vector(in);
  scaler.sd = read_vector(in);
  auto w = read_matrix(in);
  auto b = read_vector(in);
  auto beta = read_vector(in);
  return ElmModel(p, std::move(scaler), std::move(w), std::move(b), std::move(beta));
}

}  // namespace driftbench
