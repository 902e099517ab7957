#include "tsinterp/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsinterp/errors.hpp"

namespace tsinterp {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::feature_ablation: return "feature_ablation";
    case Method::feature_permutation: return "feature_permutation";
    case Method::morris_sensitivity: return "morris_sensitivity";
    case Method::feature_occlusion: return "feature_occlusion";
    case Method::augmented_feature_occlusion: return "augmented_feature_occlusion";
    case Method::integrated_gradients: return "integrated_gradients";
    case Method::gradient_shap: return "gradient_shap";
  }
  return "?";
}

std::string_view display_name(Method m) {
  switch (m) {
    case Method::feature_ablation: return "Feature Ablation";
    case Method::feature_permutation: return "Feature Permutation";
    case Method::morris_sensitivity: return "Morris Sensitivity";
    case Method::feature_occlusion: return "Feature Occlusion";
    case Method::augmented_feature_occlusion: return "Augmented F.O.";
    case Method::integrated_gradients: return "Integrated Gradients";
    case Method::gradient_shap: return "Gradient Shap";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  for (Method m : kAllMethods) {
    if (text == to_string(m)) return m;
  }
  static constexpr std::pair<std::string_view, Method> kShort[] = {
      {"FA", Method::feature_ablation},    {"FP", Method::feature_permutation},
      {"MS", Method::morris_sensitivity},  {"FO", Method::feature_occlusion},
      {"AFO", Method::augmented_feature_occlusion}, {"IG", Method::integrated_gradients},
      {"GS", Method::gradient_shap},
  };
  for (const auto& [name, m] : kShort) {
    if (text == name) return m;
  }
  throw ValidationError("unknown attribution method '" + std::string(text) + "'");
}

bool is_perturbation_method(Method m) {
  return m != Method::integrated_gradients && m != Method::gradient_shap;
}

TensorShape tensor_shape(const ModelShape& s) { return {s.outputs, s.horizon, s.features, s.lookback}; }

namespace {

void require_finite(const Grid& g, const char* what) {
  for (double v : g.flat()) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite model output during ") + what);
  }
}

}  // namespace

AttributionTensor feature_ablation(const ForecastOracle& oracle, const ModelInput& input,
                                   const BaselineGenerator& baseline, std::uint64_t seed,
                                   Granularity granularity) {
  const auto s = oracle.shape();
  check_input_shape(s, input);
  const std::size_t J = s.features, L = s.lookback;
  const Grid replacement = baseline.draw_grid(J, L, seed);

  std::vector<ModelInput> batch;
  batch.push_back(input);
  if (granularity == Granularity::cell) {
    for (std::size_t c = 0; c < J * L; ++c) {
      batch.push_back(input);
      batch.back().past[c] = replacement[c];
    }
  } else {
    for (std::size_t j = 0; j < J; ++j) {
      batch.push_back(input);
      for (std::size_t l = 0; l < L; ++l) batch.back().past(j, l) = replacement(j, l);
    }
  }
  const auto out = predict_chunked(oracle, batch);
  for (const auto& g : out) require_finite(g, "feature ablation");

  AttributionTensor phi(tensor_shape(s), "feature_ablation");
  for (std::size_t o = 0; o < s.outputs; ++o) {
    for (std::size_t h = 0; h < s.horizon; ++h) {
      const double base = out[0](o, h);
      for (std::size_t j = 0; j < J; ++j) {
        for (std::size_t l = 0; l < L; ++l) {
          const std::size_t row = granularity == Granularity::cell ? 1 + j * L + l : 1 + j;
          phi.at(o, h, j, l) = std::abs(base - out[row](o, h));
        }
      }
    }
  }
  return phi;
}

Grid brute_force_relevance(const ForecastOracle& oracle, const ModelInput& input, std::size_t feature,
                           std::size_t position, double baseline_value) {
  const Grid original = predict_one(oracle, input);
  ModelInput masked = input;
  masked.past(feature, position) = baseline_value;
  const Grid changed = predict_one(oracle, masked);
  Grid phi(original.rows(), original.cols());
  for (std::size_t k = 0; k < phi.size(); ++k) phi[k] = std::abs(original[k] - changed[k]);
  return phi;
}

std::vector<AttributionTensor> feature_permutation(const ForecastOracle& oracle,
                                                   std::span<const ModelInput> batch, std::uint64_t seed) {
  if (batch.size() < 2) {
    throw ValidationError("feature permutation needs a batch of at least 2 instances, got " +
                          std::to_string(batch.size()));
  }
  const auto s = oracle.shape();
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> perms(s.cells(), std::vector<std::size_t>(batch.size()));
  for (auto& p : perms) {
    std::iota(p.begin(), p.end(), std::size_t{0});
    std::shuffle(p.begin(), p.end(), rng);
  }
  return feature_permutation(oracle, batch, perms);
}

std::vector<AttributionTensor> feature_permutation(const ForecastOracle& oracle,
                                                   std::span<const ModelInput> batch,
                                                   std::span<const std::vector<std::size_t>> permutations) {
  const std::size_t B = batch.size();
  if (B < 2) {
    throw ValidationError("feature permutation needs a batch of at least 2 instances, got " + std::to_string(B));
  }
  const auto s = oracle.shape();
  const std::size_t D = s.cells();
  if (permutations.size() != D) throw ValidationError("need one permutation per lookback cell");
  for (const auto& p : permutations) {
    std::vector<std::size_t> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted.size() != B || sorted[i] != i) throw ValidationError("invalid permutation for feature permutation");
    }
  }
  for (const auto& in : batch) check_input_shape(s, in);

  // Row layout: B originals, then for each instance its D shuffled variants.
  std::vector<ModelInput> inputs(batch.begin(), batch.end());
  inputs.reserve(B + B * D);
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t c = 0; c < D; ++c) {
      inputs.push_back(batch[i]);
      inputs.back().past[c] = batch[permutations[c][i]].past[c];
    }
  }
  const auto out = predict_chunked(oracle, inputs);
  for (const auto& g : out) require_finite(g, "feature permutation");

  std::vector<AttributionTensor> result;
  result.reserve(B);
  for (std::size_t i = 0; i < B; ++i) {
    AttributionTensor phi(tensor_shape(s), "feature_permutation");
    for (std::size_t o = 0; o < s.outputs; ++o) {
      for (std::size_t h = 0; h < s.horizon; ++h) {
        const double base = out[i](o, h);
        for (std::size_t c = 0; c < D; ++c) {
          phi.at(o, h, c / s.lookback, c % s.lookback) = std::abs(base - out[B + i * D + c](o, h));
        }
      }
    }
    result.push_back(std::move(phi));
  }
  return result;
}

std::vector<FeatureBounds> feature_bounds(const TimeSeriesPanel& training,
                                          std::span<const std::string> feature_names) {
  std::vector<FeatureBounds> out;
  for (const auto& name : feature_names) {
    const auto f = training.feature_index(name);
    if (!f) throw ValidationError("feature '" + name + "' is absent from the training panel");
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t e = 0; e < training.entity_count(); ++e) {
      for (std::size_t t = 0; t < training.time_count(); ++t) {
        if (!training.is_present(e, *f, t)) continue;
        lo = std::min(lo, training.value(e, *f, t));
        hi = std::max(hi, training.value(e, *f, t));
      }
    }
    if (!std::isfinite(lo)) throw ValidationError("feature '" + name + "' has no training values");
    if (!(hi > lo)) {
      lo -= 1.0;
      hi += 1.0;
    }
    out.push_back({lo, hi});
  }
  return out;
}

double MorrisConfig::step_fraction() const {
  if (delta) return *delta;
  const double p = static_cast<double>(levels);
  return p / (2.0 * (p - 1.0));
}

void MorrisConfig::validate(std::size_t features) const {
  if (trajectories < 1) throw ValidationError("Morris needs at least one trajectory");
  if (levels < 2) throw ValidationError("Morris needs at least two levels");
  const double d = step_fraction();
  if (!(d > 0.0 && d <= 1.0)) throw ValidationError("Morris step must lie in (0, 1] of the feature range");
  if (bounds.size() != features) {
    throw ValidationError("Morris needs bounds for each of the " + std::to_string(features) + " feature rows, got " +
                          std::to_string(bounds.size()));
  }
  for (const auto& b : bounds) {
    if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || !(b.upper > b.lower)) {
      throw ValidationError("Morris bounds must be finite with lower < upper");
    }
  }
}

std::vector<MorrisTrajectory> morris_design(const ModelInput& input, const MorrisConfig& config) {
  const std::size_t J = input.past.rows(), L = input.past.cols(), D = J * L;
  config.validate(J);
  const double frac = config.step_fraction();
  const double p1 = static_cast<double>(config.levels - 1);
  constexpr double kTol = 1e-12;

  std::vector<MorrisTrajectory> design;
  design.reserve(config.trajectories);
  for (std::size_t r = 0; r < config.trajectories; ++r) {
    Rng rng(derive_seed(config.seed, "morris", r));
    ModelInput x = input;
    if (config.start == MorrisConfig::Start::grid) {
      std::vector<std::size_t> feasible;
      for (std::size_t i = 0; i < config.levels; ++i) {
        const double lv = static_cast<double>(i) / p1;
        if (lv + frac <= 1.0 + kTol || lv - frac >= -kTol) feasible.push_back(i);
      }
      std::uniform_int_distribution<std::size_t> pick(0, feasible.size() - 1);
      for (std::size_t c = 0; c < D; ++c) {
        const auto& b = config.bounds[c / L];
        x.past[c] = b.lower + static_cast<double>(feasible[pick(rng)]) / p1 * (b.upper - b.lower);
      }
    }
    std::vector<std::size_t> order(D);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    MorrisTrajectory traj;
    traj.points.reserve(D + 1);
    traj.points.push_back(x);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t c : order) {
      const auto& b = config.bounds[c / L];
      const double range = b.upper - b.lower;
      const double step = frac * range;
      const double slack = kTol * range;
      double dir = coin(rng) ? 1.0 : -1.0;
      const double cur = x.past[c];
      const bool up_ok = cur + step <= b.upper + slack;
      const bool down_ok = cur - step >= b.lower - slack;
      if (dir > 0 && !up_ok && down_ok) dir = -1.0;
      if (dir < 0 && !down_ok && up_ok) dir = 1.0;
      x.past[c] = cur + dir * step;
      traj.cells.push_back(c);
      traj.steps.push_back(x.past[c] - cur);
      traj.points.push_back(x);
    }
    design.push_back(std::move(traj));
  }
  return design;
}

AttributionTensor morris_sensitivity(const ForecastOracle& oracle, const ModelInput& input,
                                     const MorrisConfig& config) {
  const auto s = oracle.shape();
  check_input_shape(s, input);
  const auto design = morris_design(input, config);
  AttributionTensor phi(tensor_shape(s), "morris_sensitivity");
  const double inv_r = 1.0 / static_cast<double>(design.size());
  for (const auto& traj : design) {
    const auto out = predict_chunked(oracle, traj.points);
    for (const auto& g : out) require_finite(g, "Morris sensitivity");
    for (std::size_t i = 0; i < traj.cells.size(); ++i) {
      const std::size_t c = traj.cells[i];
      const double step = traj.steps[i];
      for (std::size_t o = 0; o < s.outputs; ++o) {
        for (std::size_t h = 0; h < s.horizon; ++h) {
          const double ee = (out[i + 1](o, h) - out[i](o, h)) / step;
          phi.at(o, h, c / s.lookback, c % s.lookback) += std::abs(ee) * inv_r;
        }
      }
    }
  }
  return phi;
}

AttributionTensor feature_occlusion(const ForecastOracle& oracle, const ModelInput& input,
                                    std::uint64_t seed, Granularity granularity) {
  auto phi = feature_ablation(oracle, input, BaselineGenerator::gaussian(0.0, 1.0), seed, granularity);
  phi.method = "feature_occlusion";
  return phi;
}

AttributionTensor augmented_feature_occlusion(const ForecastOracle& oracle, const ModelInput& input,
                                              const BaselineGenerator& bootstrap, std::uint64_t seed,
                                              Granularity granularity) {
  if (bootstrap.kind() != BaselineGenerator::Kind::bootstrap) {
    throw ValidationError("augmented feature occlusion needs a bootstrap baseline over training data");
  }
  auto phi = feature_ablation(oracle, input, bootstrap, seed, granularity);
  phi.method = "augmented_feature_occlusion";
  return phi;
}

PathRule parse_path_rule(std::string_view text) {
  if (text == "gauss_legendre" || text == "gauss-legendre") return PathRule::gauss_legendre;
  if (text == "riemann_midpoint" || text == "riemann-midpoint" || text == "midpoint") return PathRule::riemann_midpoint;
  throw ValidationError("unknown integration rule '" + std::string(text) +
                        "' (expected gauss_legendre or riemann_midpoint)");
}

std::string_view to_string(PathRule rule) {
  return rule == PathRule::gauss_legendre ? "gauss_legendre" : "riemann_midpoint";
}

QuadratureRule path_quadrature(PathRule rule, std::size_t m) {
  if (m < 1) throw ValidationError("path quadrature needs at least one node");
  QuadratureRule q{std::vector<double>(m), std::vector<double>(m)};
  if (rule == PathRule::riemann_midpoint) {
    for (std::size_t s = 0; s < m; ++s) {
      q.nodes[s] = (static_cast<double>(s) + 0.5) / static_cast<double>(m);
      q.weights[s] = 1.0 / static_cast<double>(m);
    }
    return q;
  }
  // Newton iteration on the Legendre polynomial P_m, roots mapped to [0, 1].
  const double pi = std::acos(-1.0);
  const double md = static_cast<double>(m);
  for (std::size_t i = 0; i < (m + 1) / 2; ++i) {
    double x = std::cos(pi * (static_cast<double>(i) + 0.75) / (md + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= m; ++k) {
        const double kd = static_cast<double>(k);
        const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
        p0 = p1;
        p1 = p2;
      }
      dp = md * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Node x in [-1, 1] maps to (1 - x) / 2 so nodes come out increasing.
    q.nodes[i] = 0.5 * (1.0 - x);
    q.nodes[m - 1 - i] = 0.5 * (1.0 + x);
    q.weights[i] = q.weights[m - 1 - i] = 0.5 * w;
  }
  return q;
}

AttributionTensor integrated_gradients(const ForecastOracle& oracle, const ModelInput& input,
                                       const Grid& baseline, const IntegratedGradientsConfig& config) {
  const auto s = oracle.shape();
  check_input_shape(s, input);
  if (config.steps < 1) throw ValidationError("integrated gradients needs at least one step");
  if (!baseline.same_shape(input.past)) throw ValidationError("IG baseline shape does not match the input");
  const std::size_t D = s.cells();
  const std::size_t K = s.output_size();
  const auto quad = path_quadrature(config.rule, config.steps);
  std::vector<double> sum(K * D, 0.0);
  ModelInput point = input;
  for (std::size_t step = 0; step < config.steps; ++step) {
    const double alpha = quad.nodes[step];
    for (std::size_t c = 0; c < D; ++c) point.past[c] = baseline[c] + alpha * (input.past[c] - baseline[c]);
    const auto jac = output_jacobian(oracle, point, config.fd_eps);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t c = 0; c < D; ++c) {
        const double g = jac[k][c];
        if (!std::isfinite(g)) {
          throw NumericError("non-finite gradient at integrated-gradients step " + std::to_string(step + 1));
        }
        sum[k * D + c] += quad.weights[step] * g;
      }
    }
  }
  AttributionTensor phi(tensor_shape(s), "integrated_gradients");
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t c = 0; c < D; ++c) {
      phi.values[k * D + c] = (input.past[c] - baseline[c]) * sum[k * D + c];
    }
  }
  return phi;
}

AttributionTensor gradient_shap(const ForecastOracle& oracle, const ModelInput& input,
                                const BaselineGenerator& baseline, const GradientShapConfig& config) {
  const auto s = oracle.shape();
  check_input_shape(s, input);
  if (config.samples < 1) throw ValidationError("gradient shap needs at least one sample");
  if (!(config.noise >= 0.0)) throw ValidationError("gradient shap noise must be non-negative");
  const std::size_t J = s.features, L = s.lookback, D = s.cells(), K = s.output_size();
  Rng rng(config.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  AttributionTensor phi(tensor_shape(s), "gradient_shap");
  const double inv_n = 1.0 / static_cast<double>(config.samples);
  ModelInput point = input;
  for (std::size_t n = 0; n < config.samples; ++n) {
    const Grid x0 = baseline.draw_grid(J, L, rng);
    const double u = unif(rng);
    for (std::size_t c = 0; c < D; ++c) {
      const double eps = config.noise > 0.0 ? config.noise * noise(rng) : 0.0;
      point.past[c] = x0[c] + u * (input.past[c] - x0[c]) + eps;
    }
    const auto jac = output_jacobian(oracle, point, config.fd_eps);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t c = 0; c < D; ++c) {
        const double g = jac[k][c];
        if (!std::isfinite(g)) throw NumericError("non-finite gradient at gradient-shap sample " + std::to_string(n));
        phi.values[k * D + c] += (input.past[c] - x0[c]) * g * inv_n;
      }
    }
  }
  return phi;
}

}  // namespace tsinterp
