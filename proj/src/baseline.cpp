#include "tsinterp/baseline.hpp"

#include "tsinterp/csv.hpp"
#include "tsinterp/errors.hpp"

namespace tsinterp {

BaselineGenerator BaselineGenerator::zero() { return BaselineGenerator{}; }

BaselineGenerator BaselineGenerator::constant(double value) {
  BaselineGenerator g;
  g.kind_ = Kind::constant;
  g.a_ = value;
  return g;
}

BaselineGenerator BaselineGenerator::gaussian(double mean, double stddev) {
  if (!(stddev >= 0.0)) throw ValidationError("gaussian baseline needs a non-negative stddev");
  BaselineGenerator g;
  g.kind_ = Kind::gaussian;
  g.a_ = mean;
  g.b_ = stddev;
  return g;
}

BaselineGenerator BaselineGenerator::bootstrap(std::vector<std::vector<double>> per_feature_values) {
  for (std::size_t j = 0; j < per_feature_values.size(); ++j) {
    if (per_feature_values[j].empty()) {
      throw ValidationError("bootstrap baseline has no values for feature row " + std::to_string(j));
    }
  }
  BaselineGenerator g;
  g.kind_ = Kind::bootstrap;
  g.samples_ = std::make_shared<const std::vector<std::vector<double>>>(std::move(per_feature_values));
  return g;
}

BaselineGenerator BaselineGenerator::bootstrap_from_panel(const TimeSeriesPanel& training,
                                                          std::span<const std::string> feature_names) {
  std::vector<std::vector<double>> samples;
  for (const auto& name : feature_names) {
    const auto f = training.feature_index(name);
    if (!f) throw ValidationError("feature '" + name + "' is absent from the training panel");
    std::vector<double> vals;
    for (std::size_t e = 0; e < training.entity_count(); ++e) {
      for (std::size_t t = 0; t < training.time_count(); ++t) {
        if (training.is_present(e, *f, t)) vals.push_back(training.value(e, *f, t));
      }
    }
    if (vals.empty()) throw ValidationError("feature '" + name + "' has no training values to bootstrap");
    samples.push_back(std::move(vals));
  }
  return bootstrap(std::move(samples));
}

BaselineGenerator BaselineGenerator::fixed(Grid values) {
  BaselineGenerator g;
  g.kind_ = Kind::fixed;
  g.fixed_ = std::make_shared<const Grid>(std::move(values));
  return g;
}

std::string BaselineGenerator::describe() const {
  switch (kind_) {
    case Kind::zero: return "zero";
    case Kind::constant: return "constant(" + format_double(a_) + ")";
    case Kind::gaussian: return "gaussian(" + format_double(a_) + "," + format_double(b_) + ")";
    case Kind::bootstrap: return "bootstrap";
    case Kind::fixed: return "fixed";
  }
  return "?";
}

double BaselineGenerator::draw(std::size_t feature, std::size_t position, Rng& rng) const {
  switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::constant: return a_;
    case Kind::gaussian: {
      std::normal_distribution<double> n(a_, b_);
      return n(rng);
    }
    case Kind::bootstrap: {
      if (feature >= samples_->size()) {
        throw ValidationError("bootstrap baseline has no sample for feature row " + std::to_string(feature));
      }
      const auto& s = (*samples_)[feature];
      std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
      return s[pick(rng)];
    }
    case Kind::fixed: return (*fixed_)(feature, position);
  }
  return 0.0;
}

Grid BaselineGenerator::draw_grid(std::size_t features, std::size_t lookback, Rng& rng) const {
  if (kind_ == Kind::fixed && (fixed_->rows() != features || fixed_->cols() != lookback)) {
    throw ValidationError("fixed baseline shape does not match the input");
  }
  Grid g(features, lookback);
  for (std::size_t j = 0; j < features; ++j) {
    for (std::size_t l = 0; l < lookback; ++l) g(j, l) = draw(j, l, rng);
  }
  return g;
}

Grid BaselineGenerator::draw_grid(std::size_t features, std::size_t lookback, std::uint64_t seed) const {
  Rng rng(seed);
  return draw_grid(features, lookback, rng);
}

std::span<const double> BaselineGenerator::support(std::size_t feature) const {
  if (kind_ != Kind::bootstrap || feature >= samples_->size()) return {};
  return (*samples_)[feature];
}

}  // namespace tsinterp
