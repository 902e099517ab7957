#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tsinterp/oracle.hpp"

namespace tsinterp {

/// Affine forecaster y[o, tau] = <W[o, tau], X> + b[o, tau]. Ignores the
/// known-future block.
class ReferenceLinearModel final : public ForecastOracle {
 public:
  /// weights: O*tau_max*J*L values, layout [o][tau][j][l]; bias: O*tau_max.
  ReferenceLinearModel(ModelShape shape, std::vector<double> weights, std::vector<double> bias,
                       double ridge = 0.0);

  ModelShape shape() const override { return shape_; }
  std::vector<Grid> predict(std::span<const ModelInput> batch) const override;
  bool has_exact_gradient() const override { return true; }
  Grid gradient(const ModelInput& input, OutputIndex index) const override;

  double weight(OutputIndex index, std::size_t j, std::size_t l) const;
  std::span<const double> weights() const { return weights_; }
  std::span<const double> bias() const { return bias_; }
  double ridge() const { return ridge_; }

 private:
  ModelShape shape_;
  std::vector<double> weights_;
  std::vector<double> bias_;
  double ridge_;
};

struct LinearFit {
  ReferenceLinearModel model;
  double train_loss;  // mean squared error over all outputs
};

/// Ridge regression per output: minimizes the (weighted) mean squared error
/// plus lambda * ||W||^2; the bias is not penalized. `instance_weights`,
/// when non-empty, must have one positive entry per instance.
/// Throws NumericError for a singular system (advises lambda > 0).
LinearFit fit_linear(std::span<const WindowedInstance> train, double lambda,
                     std::span<const double> instance_weights = {});

}  // namespace tsinterp
