#include "tsinterp/linear_model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "tsinterp/errors.hpp"

namespace tsinterp {

ReferenceLinearModel::ReferenceLinearModel(ModelShape shape, std::vector<double> weights,
                                           std::vector<double> bias, double ridge)
    : shape_(shape), weights_(std::move(weights)), bias_(std::move(bias)), ridge_(ridge) {
  if (weights_.size() != shape_.output_size() * shape_.cells() || bias_.size() != shape_.output_size()) {
    throw ValidationError("linear model parameters do not match shape " + shape_.describe());
  }
}

std::vector<Grid> ReferenceLinearModel::predict(std::span<const ModelInput> batch) const {
  std::vector<Grid> out;
  out.reserve(batch.size());
  const std::size_t D = shape_.cells();
  for (const auto& in : batch) {
    check_input_shape(shape_, in);
    Grid y(shape_.outputs, shape_.horizon);
    const auto x = in.past.flat();
    for (std::size_t k = 0; k < shape_.output_size(); ++k) {
      const double* w = weights_.data() + k * D;
      double acc = bias_[k];
      for (std::size_t d = 0; d < D; ++d) acc += w[d] * x[d];
      y[k] = acc;
    }
    out.push_back(std::move(y));
  }
  return out;
}

Grid ReferenceLinearModel::gradient(const ModelInput& input, OutputIndex index) const {
  check_input_shape(shape_, input);
  check_output_index(shape_, index);
  Grid g(shape_.features, shape_.lookback);
  const std::size_t k = index.output * shape_.horizon + index.step;
  for (std::size_t d = 0; d < shape_.cells(); ++d) g[d] = weights_[k * shape_.cells() + d];
  return g;
}

double ReferenceLinearModel::weight(OutputIndex index, std::size_t j, std::size_t l) const {
  const std::size_t k = index.output * shape_.horizon + index.step;
  return weights_[k * shape_.cells() + j * shape_.lookback + l];
}

LinearFit fit_linear(std::span<const WindowedInstance> train, double lambda,
                     std::span<const double> instance_weights) {
  if (train.empty()) throw ValidationError("fit_linear needs at least one instance");
  if (!(lambda >= 0.0)) throw ValidationError("ridge penalty must be non-negative");
  if (!instance_weights.empty() && instance_weights.size() != train.size()) {
    throw ValidationError("instance weight count does not match the training set");
  }
  const auto& first = train.front();
  ModelShape shape{first.input.past.rows(), first.input.past.cols(), first.targets.cols(),
                   first.targets.rows(), first.input.known_future.rows()};
  const std::size_t N = train.size();
  const std::size_t D = shape.cells();
  const std::size_t K = shape.output_size();

  Eigen::MatrixXd X(N, D);
  Eigen::MatrixXd Y(N, K);
  Eigen::VectorXd w(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto& inst = train[i];
    if (inst.input.past.rows() != shape.features || inst.input.past.cols() != shape.lookback ||
        inst.targets.rows() != shape.outputs || inst.targets.cols() != shape.horizon) {
      throw ValidationError("training instances do not share one window shape");
    }
    for (std::size_t d = 0; d < D; ++d) X(i, d) = inst.input.past[d];
    for (std::size_t k = 0; k < K; ++k) Y(i, k) = inst.targets[k];
    const double wi = instance_weights.empty() ? 1.0 : instance_weights[i];
    if (!(wi > 0.0)) throw ValidationError("instance weights must be positive");
    w(i) = wi;
  }
  w /= w.sum();

  const Eigen::RowVectorXd x_mean = w.transpose() * X;
  const Eigen::RowVectorXd y_mean = w.transpose() * Y;
  const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
  const Eigen::MatrixXd Yc = Y.rowwise() - y_mean;
  Eigen::MatrixXd A = Xc.transpose() * w.asDiagonal() * Xc;
  A.diagonal().array() += lambda;
  const Eigen::MatrixXd B = Xc.transpose() * w.asDiagonal() * Yc;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  // LDLT solves through zero pivots, so check the pivots as well as rcond.
  const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
  const double pivot_ratio = pivots.size() == 0 ? 1.0 : pivots.minCoeff() / std::max(pivots.maxCoeff(), 1e-300);
  if (ldlt.info() != Eigen::Success || !(pivot_ratio > 1e-13) || !(ldlt.rcond() > 1e-13)) {
    throw NumericError("singular normal equations in fit_linear (rcond=" +
                       std::to_string(std::min(ldlt.rcond(), pivot_ratio)) + "); use a ridge penalty lambda > 0");
  }
  const Eigen::MatrixXd Wt = ldlt.solve(B);  // D x K
  const Eigen::RowVectorXd b = y_mean - x_mean * Wt;

  std::vector<double> weights(K * D), bias(K);
  for (std::size_t k = 0; k < K; ++k) {
    bias[k] = b(k);
    for (std::size_t d = 0; d < D; ++d) weights[k * D + d] = Wt(d, k);
  }
  ReferenceLinearModel model(shape, std::move(weights), std::move(bias), lambda);

  const Eigen::MatrixXd resid = (X * Wt).rowwise() + b - Y;
  const double loss = (resid.array().square().rowwise().sum().matrix().transpose() * w)(0) /
                      static_cast<double>(K);
  if (!std::isfinite(loss)) throw NumericError("fit_linear produced a non-finite training loss");
  return {std::move(model), loss};
}

}  // namespace tsinterp
