#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>

#include <Eigen/Core>

namespace driftbench {

enum class Activation { sigmoid, tanh };

struct ElmParams {
  std::size_t hidden_width = 100;
  Activation activation = Activation::sigmoid;
  double ridge_lambda = 1e-3;
  std::size_t input_dim = 3;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const ElmParams&) const = default;
};

/// Per-column standardization learned from the training predictors.
struct InputScaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;  // all > 0

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

/// Single-hidden-layer extreme learning machine regressor.
///
/// Hidden weights and biases are random and fixed; only the output layer is
/// fitted. The hidden layer carries one extra constant unit (last entry of
/// `output_weights()`) that is excluded from the ridge penalty, so a constant
/// response is reproduced exactly.
class ElmModel {
 public:
  ElmModel(ElmParams params, InputScaler scaler, Eigen::MatrixXd input_weights, Eigen::VectorXd biases,
           Eigen::VectorXd output_weights);

  const ElmParams& params() const noexcept { return params_; }
  const InputScaler& scaler() const noexcept { return scaler_; }
  /// L x d
  const Eigen::MatrixXd& input_weights() const noexcept { return input_weights_; }
  const Eigen::VectorXd& biases() const noexcept { return biases_; }
  /// L + 1 entries; the last multiplies the constant unit.
  const Eigen::VectorXd& output_weights() const noexcept { return output_weights_; }

  /// n x (L + 1) hidden activations including the constant unit.
  Eigen::MatrixXd hidden(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
  double predict_one(const double* row) const;

 private:
  ElmParams params_;
  InputScaler scaler_;
  Eigen::MatrixXd input_weights_;
  Eigen::VectorXd biases_;
  Eigen::VectorXd output_weights_;
};

/// Fits output weights by ridge regression on the random hidden layer. With
/// `ridge_lambda == 0` and a rank-deficient hidden matrix the minimum-norm
/// least-squares solution is used instead.
ElmModel train_elm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ElmParams& params);

double validation_rmse(const ElmModel& model, const Eigen::MatrixXd& x_val, const Eigen::VectorXd& y_val);

double apply_activation(Activation a, double z) noexcept;

void save_elm(std::ostream& out, const ElmModel& model);
ElmModel load_elm(std::istream& in);

}  // namespace driftbench
