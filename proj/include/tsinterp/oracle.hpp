#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tsinterp/grid.hpp"
#include "tsinterp/windows.hpp"

namespace tsinterp {

struct ModelShape {
  std::size_t features = 0;      // J
  std::size_t lookback = 0;      // L
  std::size_t horizon = 0;       // tau_max
  std::size_t outputs = 1;       // O
  std::size_t known_future = 0;  // J_known

  std::size_t cells() const { return features * lookback; }
  std::size_t output_size() const { return outputs * horizon; }
  std::string describe() const;
  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

struct OutputIndex {
  std::size_t output = 0;
  std::size_t step = 0;
};

/// Black-box forecaster: f(X_t) -> O x tau_max.
///
/// Implementations must be deterministic within a process and must return
/// exactly one O x tau_max grid per input. Reference models are safe for
/// concurrent callers; external handles serialize internally.
class ForecastOracle {
 public:
  virtual ~ForecastOracle() = default;

  virtual ModelShape shape() const = 0;
  virtual std::vector<Grid> predict(std::span<const ModelInput> batch) const = 0;

  virtual bool has_exact_gradient() const { return false; }
  /// d f[o, tau] / d past[j, l]. The base implementation throws.
  virtual Grid gradient(const ModelInput& input, OutputIndex index) const;
  /// All O*tau_max gradients, index o * tau_max + tau.
  virtual std::vector<Grid> jacobian(const ModelInput& input) const;
};

/// Throws ValidationError unless the input matches the oracle's J, L, J_known, tau_max.
void check_input_shape(const ModelShape& shape, const ModelInput& input);
void check_output_index(const ModelShape& shape, OutputIndex index);

Grid predict_one(const ForecastOracle& oracle, const ModelInput& input);

/// Splits large batches into chunks of at most `max_batch` before calling predict.
std::vector<Grid> predict_chunked(const ForecastOracle& oracle, std::span<const ModelInput> inputs,
                                  std::size_t max_batch = 512);

constexpr double kDefaultFiniteDiffEps = 1e-4;

/// Central differences (f(x + eps e) - f(x - eps e)) / (2 eps) per lookback
/// cell, from one batch of 2 J L evaluations.
Grid finite_diff_gradient(const ForecastOracle& oracle, const ModelInput& input, OutputIndex index,
                          double eps = kDefaultFiniteDiffEps);
std::vector<Grid> finite_diff_jacobian(const ForecastOracle& oracle, const ModelInput& input,
                                       double eps = kDefaultFiniteDiffEps);

/// Exact jacobian when the oracle has one, finite differences otherwise.
std::vector<Grid> output_jacobian(const ForecastOracle& oracle, const ModelInput& input,
                                  double eps = kDefaultFiniteDiffEps);

/// Always returns the same output. Useful as a null model.
class ConstantOracle final : public ForecastOracle {
 public:
  ConstantOracle(ModelShape shape, double value) : shape_(shape), value_(value) {}
  ModelShape shape() const override { return shape_; }
  std::vector<Grid> predict(std::span<const ModelInput> batch) const override;
  bool has_exact_gradient() const override { return true; }
  Grid gradient(const ModelInput& input, OutputIndex index) const override;

 private:
  ModelShape shape_;
  double value_;
};

}  // namespace tsinterp
