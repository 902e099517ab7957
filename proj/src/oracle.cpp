#include "tsinterp/oracle.hpp"

#include <cmath>

#include "tsinterp/errors.hpp"

namespace tsinterp {

std::string ModelShape::describe() const {
  return "J=" + std::to_string(features) + " L=" + std::to_string(lookback) +
         " tau_max=" + std::to_string(horizon) + " O=" + std::to_string(outputs) +
         " J_known=" + std::to_string(known_future);
}

Grid ForecastOracle::gradient(const ModelInput&, OutputIndex) const {
  throw ValidationError("oracle has no exact gradient; use finite_diff_gradient");
}

std::vector<Grid> ForecastOracle::jacobian(const ModelInput& input) const {
  const auto s = shape();
  std::vector<Grid> out;
  out.reserve(s.output_size());
  for (std::size_t o = 0; o < s.outputs; ++o) {
    for (std::size_t h = 0; h < s.horizon; ++h) out.push_back(gradient(input, {o, h}));
  }
  return out;
}

void check_input_shape(const ModelShape& shape, const ModelInput& input) {
  if (input.past.rows() != shape.features || input.past.cols() != shape.lookback) {
    throw ValidationError("input lookback block is " + std::to_string(input.past.rows()) + "x" +
                          std::to_string(input.past.cols()) + ", model expects " +
                          std::to_string(shape.features) + "x" + std::to_string(shape.lookback));
  }
  if (input.known_future.rows() != shape.known_future ||
      (shape.known_future > 0 && input.known_future.cols() != shape.horizon)) {
    throw ValidationError("input known-future block is " + std::to_string(input.known_future.rows()) +
                          "x" + std::to_string(input.known_future.cols()) + ", model expects " +
                          std::to_string(shape.known_future) + "x" + std::to_string(shape.horizon));
  }
}

void check_output_index(const ModelShape& shape, OutputIndex index) {
  if (index.output >= shape.outputs || index.step >= shape.horizon) {
    throw std::out_of_range("output index (" + std::to_string(index.output) + ", " +
                            std::to_string(index.step) + ") outside " + std::to_string(shape.outputs) +
                            "x" + std::to_string(shape.horizon));
  }
}

Grid predict_one(const ForecastOracle& oracle, const ModelInput& input) {
  auto out = oracle.predict(std::span<const ModelInput>(&input, 1));
  return std::move(out.at(0));
}

std::vector<Grid> predict_chunked(const ForecastOracle& oracle, std::span<const ModelInput> inputs,
                                  std::size_t max_batch) {
  std::vector<Grid> out;
  out.reserve(inputs.size());
  if (max_batch == 0) max_batch = inputs.size();
  for (std::size_t i = 0; i < inputs.size(); i += max_batch) {
    auto part = oracle.predict(inputs.subspan(i, std::min(max_batch, inputs.size() - i)));
    for (auto& g : part) out.push_back(std::move(g));
  }
  return out;
}

std::vector<Grid> finite_diff_jacobian(const ForecastOracle& oracle, const ModelInput& input,
                                       double eps) {
  if (!(eps > 0.0)) throw ValidationError("finite-difference step must be positive");
  const auto s = oracle.shape();
  check_input_shape(s, input);
  const std::size_t J = input.past.rows();
  const std::size_t L = input.past.cols();
  std::vector<ModelInput> perturbed;
  perturbed.reserve(2 * J * L);
  for (std::size_t c = 0; c < J * L; ++c) {
    perturbed.push_back(input);
    perturbed.back().past[c] += eps;
    perturbed.push_back(input);
    perturbed.back().past[c] -= eps;
  }
  const auto outputs = predict_chunked(oracle, perturbed);
  std::vector<Grid> jac(s.output_size(), Grid(J, L));
  for (std::size_t c = 0; c < J * L; ++c) {
    const Grid& up = outputs[2 * c];
    const Grid& down = outputs[2 * c + 1];
    for (std::size_t k = 0; k < s.output_size(); ++k) {
      if (!std::isfinite(up[k]) || !std::isfinite(down[k])) {
        throw NumericError("non-finite model output while perturbing cell (feature " +
                           std::to_string(c / L) + ", position " + std::to_string(c % L) + ")");
      }
      jac[k][c] = (up[k] - down[k]) / (2.0 * eps);
    }
  }
  return jac;
}

Grid finite_diff_gradient(const ForecastOracle& oracle, const ModelInput& input, OutputIndex index,
                          double eps) {
  const auto s = oracle.shape();
  check_output_index(s, index);
  auto jac = finite_diff_jacobian(oracle, input, eps);
  return std::move(jac[index.output * s.horizon + index.step]);
}

std::vector<Grid> output_jacobian(const ForecastOracle& oracle, const ModelInput& input, double eps) {
  if (oracle.has_exact_gradient()) return oracle.jacobian(input);
  return finite_diff_jacobian(oracle, input, eps);
}

std::vector<Grid> ConstantOracle::predict(std::span<const ModelInput> batch) const {
  std::vector<Grid> out;
  for (const auto& in : batch) {
    check_input_shape(shape_, in);
    out.emplace_back(shape_.outputs, shape_.horizon, value_);
  }
  return out;
}

Grid ConstantOracle::gradient(const ModelInput& input, OutputIndex index) const {
  check_input_shape(shape_, input);
  check_output_index(shape_, index);
  return Grid(shape_.features, shape_.lookback, 0.0);
}

}  // namespace tsinterp
