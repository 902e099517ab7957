#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tsinterp/groundtruth.hpp"
#include "tsinterp/panel.hpp"

namespace tsinterp {

struct SyntheticConfig {
  /// Planted nonnegative weight per group feature; the group count is its size.
  std::vector<double> weights{0.5, 0.3, 0.2};
  /// Amplitude of each group series (default 1 for every group).
  std::vector<double> amplitudes;
  std::size_t lookback = 14;
  std::size_t horizon = 14;
  std::size_t entities = 4;
  std::size_t time_steps = 200;
  double noise = 0.0;
  /// Per-step probability that a group series switches sign.
  double switch_probability = 0.3;
  /// Passes every lagged group value through tanh before weighting.
  bool nonlinear = false;
  std::uint64_t seed = 7;
  /// First date of the daily axis; defaults to Monday 2021-01-04.
  std::string start_date = "2021-01-04";
};

/// Daily panel with group features x_g = a_g * z_g, where each z_g is a
/// persistent random +-1 sequence, and target
///   y[s] = sum_g w_g h(x_g[s - lookback]) + noise * N(0, 1),
/// with h the identity (or tanh). A forecast of y at t + 1 + tau therefore
/// depends only on lookback position tau of every group row, and every
/// group's contribution to the target has constant magnitude w_g |h(a_g)|.
/// Entities 2k and 2k+1 carry opposite group series, so with an even entity
/// count every feature's cross-sectional mean is exactly zero.
struct SyntheticTruthTask {
  TimeSeriesPanel panel;
  std::vector<std::string> group_features;
  std::vector<double> weights;
  std::vector<double> planted_influence;  // w_g |h(a_g)|
  std::vector<double> planted_shares;     // l1-normalized influence
  double noise = 0.0;
  std::size_t lag = 0;
  /// Weekly truth (Monday starts) covering the whole panel, counts equal to
  /// the planted influence.
  GroupTruth truth;
};

SyntheticTruthTask generate_synthetic_truth(const SyntheticConfig& config);

}  // namespace tsinterp
