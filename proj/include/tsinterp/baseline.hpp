#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tsinterp/grid.hpp"
#include "tsinterp/panel.hpp"
#include "tsinterp/rng.hpp"

namespace tsinterp {

/// Source of counterfactual values for masked lookback cells.
class BaselineGenerator {
 public:
  enum class Kind { zero, constant, gaussian, bootstrap, fixed };

  static BaselineGenerator zero();
  static BaselineGenerator constant(double value);
  static BaselineGenerator gaussian(double mean = 0.0, double stddev = 1.0);
  /// One empirical sample per feature row; draws are uniform over it.
  static BaselineGenerator bootstrap(std::vector<std::vector<double>> per_feature_values);
  /// Bootstrap over the present values of each named feature in `training`.
  /// Throws ValidationError naming a feature absent from the panel.
  static BaselineGenerator bootstrap_from_panel(const TimeSeriesPanel& training,
                                                std::span<const std::string> feature_names);
  /// Always returns the given grid (a degenerate distribution at one point).
  static BaselineGenerator fixed(Grid values);

  Kind kind() const { return kind_; }
  std::string describe() const;

  /// One value for cell (feature, position).
  double draw(std::size_t feature, std::size_t position, Rng& rng) const;
  /// Row-major J x L draw (feature outer, position inner).
  Grid draw_grid(std::size_t features, std::size_t lookback, Rng& rng) const;
  Grid draw_grid(std::size_t features, std::size_t lookback, std::uint64_t seed) const;

  /// Empirical sample of a bootstrap generator (empty for other kinds).
  std::span<const double> support(std::size_t feature) const;

 private:
  Kind kind_ = Kind::zero;
  double a_ = 0.0;
  double b_ = 1.0;
  std::shared_ptr<const std::vector<std::vector<double>>> samples_;
  std::shared_ptr<const Grid> fixed_;
};

}  // namespace tsinterp
