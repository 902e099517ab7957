#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tsinterp/baseline.hpp"
#include "tsinterp/oracle.hpp"

namespace tsinterp {

enum class Method {
  feature_ablation,
  feature_permutation,
  morris_sensitivity,
  feature_occlusion,
  augmented_feature_occlusion,
  integrated_gradients,
  gradient_shap,
};

inline constexpr Method kAllMethods[] = {
    Method::feature_ablation,    Method::feature_permutation,          Method::morris_sensitivity,
    Method::feature_occlusion,   Method::augmented_feature_occlusion, Method::integrated_gradients,
    Method::gradient_shap,
};

std::string_view to_string(Method m);
std::string_view display_name(Method m);
Method parse_method(std::string_view text);
/// Perturbation methods store |output change| and are non-negative.
bool is_perturbation_method(Method m);

struct TensorShape {
  std::size_t outputs = 0;
  std::size_t horizon = 0;
  std::size_t features = 0;
  std::size_t lookback = 0;

  std::size_t size() const { return outputs * horizon * features * lookback; }
  std::size_t cells() const { return features * lookback; }
  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

/// Importance matrix phi of shape O x tau_max x J x L for one instance.
struct AttributionTensor {
  TensorShape shape;
  std::vector<double> values;
  std::string method;
  std::string entity;
  std::string anchor;  // formatted anchor time

  AttributionTensor() = default;
  AttributionTensor(TensorShape s, std::string method_name)
      : shape(s), values(s.size(), 0.0), method(std::move(method_name)) {}

  std::size_t offset(std::size_t o, std::size_t tau, std::size_t j, std::size_t l) const {
    return ((o * shape.horizon + tau) * shape.features + j) * shape.lookback + l;
  }
  double& at(std::size_t o, std::size_t tau, std::size_t j, std::size_t l) { return values[offset(o, tau, j, l)]; }
  double at(std::size_t o, std::size_t tau, std::size_t j, std::size_t l) const {
    return values[offset(o, tau, j, l)];
  }
  /// The J*L cell scores for output (o, tau).
  std::span<const double> slice(std::size_t o, std::size_t tau) const {
    return std::span<const double>(values).subspan((o * shape.horizon + tau) * shape.cells(), shape.cells());
  }
};

TensorShape tensor_shape(const ModelShape& shape);

/// Mask one lookback cell at a time, or a whole feature row at once (every
/// position of that row then carries the feature-level score).
enum class Granularity { cell, feature };

/// |f(X) - f(X with cell (j, l) replaced)| from one batch of J*L + 1
/// evaluations. Replacement values come from `baseline` drawn with `seed`.
AttributionTensor feature_ablation(const ForecastOracle& oracle, const ModelInput& input,
                                   const BaselineGenerator& baseline, std::uint64_t seed = 0,
                                   Granularity granularity = Granularity::cell);

/// Literal two-pass evaluation of the masking relevance for one cell.
Grid brute_force_relevance(const ForecastOracle& oracle, const ModelInput& input, std::size_t feature,
                           std::size_t position, double baseline_value);

/// For each cell, shuffles its values across the batch with a seeded
/// permutation and scores |original - shuffled| per instance. Needs B >= 2.
std::vector<AttributionTensor> feature_permutation(const ForecastOracle& oracle,
                                                   std::span<const ModelInput> batch, std::uint64_t seed);
/// Same with explicit per-cell permutations (cell index j*L + l -> permutation of 0..B-1).
std::vector<AttributionTensor> feature_permutation(const ForecastOracle& oracle,
                                                   std::span<const ModelInput> batch,
                                                   std::span<const std::vector<std::size_t>> permutations);

struct FeatureBounds {
  double lower = 0.0;
  double upper = 1.0;
};

/// Per-feature [min, max] of the present values of each named feature in
/// `training`; degenerate ranges are widened to [v - 1, v + 1].
std::vector<FeatureBounds> feature_bounds(const TimeSeriesPanel& training,
                                          std::span<const std::string> feature_names);

struct MorrisConfig {
  enum class Start { instance, grid };

  std::size_t trajectories = 10;
  std::size_t levels = 4;
  /// Step as a fraction of each feature's range; default levels / (2 (levels - 1)).
  std::optional<double> delta;
  std::vector<FeatureBounds> bounds;  // one per lookback feature row
  /// `instance` starts every trajectory at the explained input; `grid` starts
  /// at a random point of the levels grid over the bounds.
  Start start = Start::instance;
  std::uint64_t seed = 0;

  double step_fraction() const;
  void validate(std::size_t features) const;
};

struct MorrisTrajectory {
  std::vector<ModelInput> points;  // J*L + 1 points, consecutive ones differ in one cell
  std::vector<std::size_t> cells;  // cell moved between points[i] and points[i+1]
  std::vector<double> steps;       // signed change applied to that cell
};

/// The one-at-a-time design used by morris_sensitivity (exposed for checks).
std::vector<MorrisTrajectory> morris_design(const ModelInput& input, const MorrisConfig& config);

/// mu_star per (o, tau, j, l): mean over trajectories of |elementary effect|,
/// EE = (f(X') - f(X)) / (x'_{j,l} - x_{j,l}). r (J L + 1) evaluations.
AttributionTensor morris_sensitivity(const ForecastOracle& oracle, const ModelInput& input,
                                     const MorrisConfig& config);

/// Feature ablation with fresh N(0, 1) counterfactuals (standardized space).
AttributionTensor feature_occlusion(const ForecastOracle& oracle, const ModelInput& input,
                                    std::uint64_t seed, Granularity granularity = Granularity::cell);

/// Feature ablation with counterfactuals bootstrapped from training values of
/// the same feature. `bootstrap` must be a bootstrap generator.
AttributionTensor augmented_feature_occlusion(const ForecastOracle& oracle, const ModelInput& input,
                                              const BaselineGenerator& bootstrap, std::uint64_t seed,
                                              Granularity granularity = Granularity::cell);

/// Quadrature for the integrated-gradients path integral over [0, 1].
enum class PathRule { gauss_legendre, riemann_midpoint };

PathRule parse_path_rule(std::string_view text);
std::string_view to_string(PathRule rule);

struct QuadratureRule {
  std::vector<double> nodes;    // in (0, 1)
  std::vector<double> weights;  // sum to 1
};

/// m-point rule on [0, 1]: Gauss-Legendre (exact for polynomials of degree
/// 2m - 1) or the midpoint rule with nodes (s - 1/2) / m.
QuadratureRule path_quadrature(PathRule rule, std::size_t m);

struct IntegratedGradientsConfig {
  std::size_t steps = 50;
  PathRule rule = PathRule::gauss_legendre;
  double fd_eps = kDefaultFiniteDiffEps;  // used when the oracle has no exact gradient
};

/// (x - x0) * sum_s w_s grad f(x0 + t_s (x - x0)) over the quadrature nodes t_s.
AttributionTensor integrated_gradients(const ForecastOracle& oracle, const ModelInput& input,
                                       const Grid& baseline, const IntegratedGradientsConfig& config = {});

struct GradientShapConfig {
  std::size_t samples = 20;
  double noise = 0.1;
  std::uint64_t seed = 0;
  double fd_eps = kDefaultFiniteDiffEps;
};

/// Mean over samples of (x - x0_s) * grad f at x0_s + u (x - x0_s) + noise,
/// with x0_s drawn from `baseline` and u ~ U[0, 1].
AttributionTensor gradient_shap(const ForecastOracle& oracle, const ModelInput& input,
                                const BaselineGenerator& baseline, const GradientShapConfig& config);

}  // namespace tsinterp
