#include "tsinterp/faithfulness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "tsinterp/csv.hpp"
#include "tsinterp/errors.hpp"

namespace tsinterp {

RelevanceRanking rank_cells(const AttributionTensor& phi) {
  const auto& s = phi.shape;
  RelevanceRanking r{s, {}};
  r.order.reserve(s.outputs * s.horizon);
  for (std::size_t o = 0; o < s.outputs; ++o) {
    for (std::size_t h = 0; h < s.horizon; ++h) {
      const auto scores = phi.slice(o, h);
      for (double v : scores) {
        if (!std::isfinite(v)) throw NumericError("cannot rank a tensor with non-finite entries");
      }
      std::vector<std::size_t> cells(s.cells());
      std::iota(cells.begin(), cells.end(), std::size_t{0});
      std::sort(cells.begin(), cells.end(), [&](std::size_t a, std::size_t b) {
        const double va = std::abs(scores[a]), vb = std::abs(scores[b]);
        if (va != vb) return va > vb;
        const std::size_t ja = a / s.lookback, jb = b / s.lookback;
        if (ja != jb) return ja < jb;
        return a % s.lookback > b % s.lookback;
      });
      r.order.push_back(std::move(cells));
    }
  }
  return r;
}

std::size_t MaskSpec::selected_count(std::size_t cells) const {
  const double raw = k_percent / 100.0 * static_cast<double>(cells);
  auto n = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::clamp<std::size_t>(n, 1, cells);
}

void MaskSpec::validate() const {
  if (!(k_percent > 0.0 && k_percent <= 100.0)) {
    throw ValidationError("mask k percent must lie in (0, 100]");
  }
}

namespace {

ModelInput apply_mask(const ModelInput& input, std::span<const std::size_t> ranked, std::size_t count,
                      MaskMode mode, const Grid& replacement) {
  ModelInput out = input;
  if (mode == MaskMode::mask_top) {
    for (std::size_t i = 0; i < count; ++i) out.past[ranked[i]] = replacement[ranked[i]];
  } else {
    for (std::size_t i = count; i < ranked.size(); ++i) out.past[ranked[i]] = replacement[ranked[i]];
  }
  return out;
}

}  // namespace

ModelInput mask_instance(const ModelInput& input, const RelevanceRanking& ranking, OutputIndex index,
                         const MaskSpec& spec) {
  spec.validate();
  const std::size_t J = input.past.rows(), L = input.past.cols();
  if (ranking.shape.features != J || ranking.shape.lookback != L) {
    throw ValidationError("ranking shape does not match the instance");
  }
  const Grid replacement = spec.baseline.draw_grid(J, L, spec.seed);
  return apply_mask(input, ranking.cells(index), spec.selected_count(J * L), spec.mode, replacement);
}

OutputChange masked_output_change(const ForecastOracle& oracle, const ModelInput& input,
                                  const RelevanceRanking& ranking, const MaskSpec& spec) {
  spec.validate();
  const auto s = oracle.shape();
  check_input_shape(s, input);
  const std::size_t J = s.features, L = s.lookback, D = J * L;
  if (ranking.shape.features != J || ranking.shape.lookback != L || ranking.shape.horizon != s.horizon ||
      ranking.shape.outputs != s.outputs) {
    throw ValidationError("ranking shape does not match the oracle");
  }
  const Grid replacement = spec.baseline.draw_grid(J, L, spec.seed);
  const std::size_t count = spec.selected_count(D);

  // Outputs whose rankings select the same cell set share one masked input.
  std::map<std::vector<std::size_t>, std::size_t> unique;
  std::vector<std::size_t> slot(s.output_size());
  std::vector<ModelInput> batch{input};
  for (std::size_t k = 0; k < s.output_size(); ++k) {
    const auto ranked = ranking.order[k];
    std::vector<std::size_t> key(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(key.begin(), key.end());
    auto [it, inserted] = unique.try_emplace(std::move(key), batch.size());
    if (inserted) batch.push_back(apply_mask(input, ranked, count, spec.mode, replacement));
    slot[k] = it->second;
  }
  const auto out = predict_chunked(oracle, batch);
  OutputChange change{Grid(s.outputs, s.horizon), Grid(s.outputs, s.horizon)};
  for (std::size_t k = 0; k < s.output_size(); ++k) {
    const double d = out[0][k] - out[slot[k]][k];
    change.absolute[k] = std::abs(d);
    change.squared[k] = d * d;
  }
  return change;
}

OutputChange comprehensiveness(const ForecastOracle& oracle, const ModelInput& input,
                               const RelevanceRanking& ranking, double k_percent,
                               const BaselineGenerator& baseline, std::uint64_t seed) {
  return masked_output_change(oracle, input, ranking, MaskSpec{k_percent, MaskMode::mask_top, baseline, seed});
}

OutputChange sufficiency(const ForecastOracle& oracle, const ModelInput& input,
                         const RelevanceRanking& ranking, double k_percent,
                         const BaselineGenerator& baseline, std::uint64_t seed) {
  return masked_output_change(oracle, input, ranking,
                              MaskSpec{k_percent, MaskMode::mask_complement, baseline, seed});
}

AopcrResult aopcr(const ForecastOracle& oracle, std::span<const ModelInput> instances,
                  std::span<const AttributionTensor> attributions, const AopcrConfig& config) {
  if (instances.empty()) throw ValidationError("AOPCR needs at least one instance");
  if (config.k_bins.empty()) throw ValidationError("AOPCR needs at least one k bin");
  if (attributions.size() != instances.size()) {
    throw ValidationError("AOPCR needs one attribution tensor per instance");
  }
  const auto s = oracle.shape();
  const double norm = 1.0 / static_cast<double>(config.k_bins.size() * s.output_size());
  AopcrResult result;
  result.per_instance.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto ranking = rank_cells(attributions[i]);
    const std::uint64_t seed = derive_seed(config.seed, "mask", i);
    AopcrInstance v;
    for (double k : config.k_bins) {
      const auto comp = masked_output_change(oracle, instances[i], ranking,
                                             MaskSpec{k, MaskMode::mask_top, config.baseline, seed});
      const auto suff = masked_output_change(oracle, instances[i], ranking,
                                             MaskSpec{k, MaskMode::mask_complement, config.baseline, seed});
      for (std::size_t c = 0; c < s.output_size(); ++c) {
        v.comprehensiveness_mae += comp.absolute[c];
        v.comprehensiveness_mse += comp.squared[c];
        v.sufficiency_mae += suff.absolute[c];
        v.sufficiency_mse += suff.squared[c];
      }
    }
    v.comprehensiveness_mae *= norm;
    v.comprehensiveness_mse *= norm;
    v.sufficiency_mae *= norm;
    v.sufficiency_mse *= norm;
    result.per_instance.push_back(v);
  }
  for (const auto& v : result.per_instance) {
    result.mean.comprehensiveness_mae += v.comprehensiveness_mae;
    result.mean.comprehensiveness_mse += v.comprehensiveness_mse;
    result.mean.sufficiency_mae += v.sufficiency_mae;
    result.mean.sufficiency_mse += v.sufficiency_mse;
  }
  const double inv = 1.0 / static_cast<double>(instances.size());
  result.mean.comprehensiveness_mae *= inv;
  result.mean.comprehensiveness_mse *= inv;
  result.mean.sufficiency_mae *= inv;
  result.mean.sufficiency_mse *= inv;
  return result;
}

namespace {

std::string join_bins(std::span<const double> bins) {
  std::string s;
  for (std::size_t i = 0; i < bins.size(); ++i) s += (i ? ";" : "") + format_double(bins[i]);
  return s;
}

}  // namespace

void write_faithfulness_csv(std::ostream& out, std::span<const FaithfulnessEntry> entries) {
  out << "method,metric,aggregation,k_bins,value\n";
  for (const auto& e : entries) {
    const auto bins = join_bins(e.k_bins);
    const auto& m = e.result.mean;
    out << e.method << ",comprehensiveness,MAE," << bins << ',' << format_double(m.comprehensiveness_mae) << '\n';
    out << e.method << ",comprehensiveness,MSE," << bins << ',' << format_double(m.comprehensiveness_mse) << '\n';
    out << e.method << ",sufficiency,MAE," << bins << ',' << format_double(m.sufficiency_mae) << '\n';
    out << e.method << ",sufficiency,MSE," << bins << ',' << format_double(m.sufficiency_mse) << '\n';
  }
}

void write_faithfulness_instances_csv(std::ostream& out, std::span<const FaithfulnessEntry> entries,
                                      std::span<const std::string> instance_labels) {
  out << "method,instance,metric,aggregation,value\n";
  for (const auto& e : entries) {
    for (std::size_t i = 0; i < e.result.per_instance.size(); ++i) {
      const auto& v = e.result.per_instance[i];
      const std::string label = csv_escape(i < instance_labels.size() ? instance_labels[i] : std::to_string(i));
      out << e.method << ',' << label << ",comprehensiveness,MAE," << format_double(v.comprehensiveness_mae) << '\n';
      out << e.method << ',' << label << ",comprehensiveness,MSE," << format_double(v.comprehensiveness_mse) << '\n';
      out << e.method << ',' << label << ",sufficiency,MAE," << format_double(v.sufficiency_mae) << '\n';
      out << e.method << ',' << label << ",sufficiency,MSE," << format_double(v.sufficiency_mse) << '\n';
    }
  }
}

}  // namespace tsinterp
