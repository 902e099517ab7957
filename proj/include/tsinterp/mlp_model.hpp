#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tsinterp/oracle.hpp"

namespace tsinterp {

/// One hidden tanh layer over the flattened J x L lookback:
/// y = V tanh(U x + a) + c. Ignores the known-future block.
class ReferenceMLP final : public ForecastOracle {
 public:
  struct Parameters {
    std::size_t hidden = 0;
    std::vector<double> input_weights;   // hidden x (J*L)
    std::vector<double> input_bias;      // hidden
    std::vector<double> output_weights;  // (O*tau_max) x hidden
    std::vector<double> output_bias;     // O*tau_max
  };

  ReferenceMLP(ModelShape shape, Parameters params);
  /// Seeded Glorot-uniform initialization, zero biases.
  static ReferenceMLP initialized(ModelShape shape, std::size_t hidden, std::uint64_t seed);

  ModelShape shape() const override { return shape_; }
  std::vector<Grid> predict(std::span<const ModelInput> batch) const override;
  bool has_exact_gradient() const override { return true; }
  Grid gradient(const ModelInput& input, OutputIndex index) const override;
  std::vector<Grid> jacobian(const ModelInput& input) const override;

  const Parameters& parameters() const { return params_; }

 private:
  std::vector<double> hidden_activations(const ModelInput& input) const;

  ModelShape shape_;
  Parameters params_;
};

struct MlpHyperparams {
  std::size_t hidden = 64;
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
};

struct MlpFit {
  ReferenceMLP model;
  double train_loss;
  std::vector<double> loss_history;  // per epoch
};

/// Mini-batch Adam on mean squared error. Deterministic given the seed
/// (initialization and per-epoch shuffling). Throws NumericError naming the
/// epoch if the loss becomes non-finite.
MlpFit fit_mlp(std::span<const WindowedInstance> train, const MlpHyperparams& hp, std::uint64_t seed);

/// Mean squared error of an oracle over instances (all outputs).
double mean_squared_error(const ForecastOracle& oracle, std::span<const WindowedInstance> data);

}  // namespace tsinterp
