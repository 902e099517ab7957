#include "tsinterp/synthetic.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "tsinterp/errors.hpp"
#include "tsinterp/rng.hpp"

namespace tsinterp {

SyntheticTruthTask generate_synthetic_truth(const SyntheticConfig& config) {
  const std::size_t G = config.weights.size();
  if (G == 0) throw ValidationError("synthetic task needs at least one group weight");
  for (double w : config.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("planted weights must be finite and nonnegative");
  }
  std::vector<double> amplitudes = config.amplitudes.empty() ? std::vector<double>(G, 1.0) : config.amplitudes;
  if (amplitudes.size() != G) throw ValidationError("synthetic task needs one amplitude per group");
  for (double a : amplitudes) {
    if (!(a > 0.0)) throw ValidationError("group amplitudes must be positive");
  }
  if (!(config.noise >= 0.0)) throw ValidationError("noise level must be nonnegative");
  if (config.lookback == 0 || config.horizon == 0) throw ValidationError("lookback and horizon must be positive");
  if (config.horizon > config.lookback) {
    throw ValidationError("synthetic task requires horizon <= lookback so every target lag is visible");
  }
  if (config.entities == 0 || config.time_steps == 0) throw ValidationError("synthetic task needs data");
  if (!(config.switch_probability >= 0.0 && config.switch_probability <= 1.0)) {
    throw ValidationError("switch probability must lie in [0, 1]");
  }
  TimePoint start;
  if (!parse_time(config.start_date, start)) throw ValidationError("cannot parse start date " + config.start_date);

  const std::size_t T = config.time_steps, lag = config.lookback;
  auto h = [&](double x) { return config.nonlinear ? std::tanh(x) : x; };

  std::vector<FeatureSpec> schema;
  SyntheticTruthTask task;
  for (std::size_t g = 0; g < G; ++g) {
    task.group_features.push_back("group_" + std::to_string(g + 1));
    schema.push_back({task.group_features.back(), FeatureRole::dynamic});
  }
  schema.push_back({"cases", FeatureRole::target});

  std::vector<std::string> entities;
  for (std::size_t e = 0; e < config.entities; ++e) entities.push_back("entity_" + std::to_string(e + 1));
  std::vector<TimePoint> times;
  for (std::size_t t = 0; t < T; ++t) times.push_back(start + std::chrono::days(t));
  task.panel = TimeSeriesPanel(entities, times, schema);

  std::bernoulli_distribution flip(config.switch_probability);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Entities come in mirrored pairs (the second negates the first's group
  // series), so every feature has cross-sectional mean zero at every step.
  std::vector<std::vector<double>> x;
  for (std::size_t e = 0; e < config.entities; ++e) {
    Rng rng(derive_seed(config.seed, "synthetic", e));
    // Steps [-lag, T) so every target in range has its lagged inputs.
    if (e % 2 == 0) {
      x.assign(G, std::vector<double>(T + lag));
      for (std::size_t g = 0; g < G; ++g) {
        double z = coin(rng) ? 1.0 : -1.0;
        for (std::size_t s = 0; s < T + lag; ++s) {
          if (s > 0 && flip(rng)) z = -z;
          x[g][s] = amplitudes[g] * z;
        }
      }
    } else {
      for (auto& series : x)
        for (auto& v : series) v = -v;
    }
    for (std::size_t t = 0; t < T; ++t) {
      double y = 0.0;
      for (std::size_t g = 0; g < G; ++g) {
        task.panel.set(e, g, t, x[g][t + lag]);
        y += config.weights[g] * h(x[g][t]);
      }
      if (config.noise > 0.0) y += config.noise * normal(rng);
      task.panel.set(e, G, t, y);
    }
  }

  task.weights = config.weights;
  task.noise = config.noise;
  task.lag = lag;
  for (std::size_t g = 0; g < G; ++g) task.planted_influence.push_back(config.weights[g] * std::abs(h(amplitudes[g])));
  double total = 0.0;
  for (double v : task.planted_influence) total += v;
  if (!(total > 0.0)) throw ValidationError("at least one planted weight must be positive");
  for (double v : task.planted_influence) task.planted_shares.push_back(v / total);

  task.truth.groups = task.group_features;
  // Weeks start on the Monday on or before the first date.
  const auto first_day = std::chrono::floor<std::chrono::days>(start);
  const unsigned weekday = std::chrono::weekday(first_day).iso_encoding();  // Monday = 1
  TimePoint week = TimePoint(first_day - std::chrono::days(weekday - 1));
  while (week <= times.back()) {
    task.truth.periods.push_back(week);
    week += std::chrono::days(7);
  }
  task.truth.counts = Grid(task.truth.periods.size(), G);
  for (std::size_t p = 0; p < task.truth.periods.size(); ++p)
    for (std::size_t g = 0; g < G; ++g) task.truth.counts(p, g) = task.planted_influence[g];
  return task;
}

}  // namespace tsinterp
