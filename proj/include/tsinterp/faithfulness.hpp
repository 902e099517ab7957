#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tsinterp/attribution.hpp"

namespace tsinterp {

/// Per (o, tau): all J*L cells (flat index j*L + l) by descending |phi|.
/// Ties: lower feature index first, then the more recent lookback position.
struct RelevanceRanking {
  TensorShape shape;
  std::vector<std::vector<std::size_t>> order;  // index o * tau_max + tau

  static constexpr const char* kTieRule = "abs-desc;feature-asc;position-desc";

  std::span<const std::size_t> cells(OutputIndex index) const {
    return order[index.output * shape.horizon + index.step];
  }
};

RelevanceRanking rank_cells(const AttributionTensor& phi);

enum class MaskMode { mask_top, mask_complement };

struct MaskSpec {
  double k_percent = 5.0;
  MaskMode mode = MaskMode::mask_top;
  BaselineGenerator baseline = BaselineGenerator::zero();
  std::uint64_t seed = 0;

  /// ceil(k/100 * cells), at least one cell and at most all of them.
  std::size_t selected_count(std::size_t cells) const;
  void validate() const;
};

/// Replaces the top-k cells of `index`'s ranking (mask_top) or every other
/// cell (mask_complement) with baseline values drawn from spec.baseline
/// with spec.seed. The input is not modified.
ModelInput mask_instance(const ModelInput& input, const RelevanceRanking& ranking, OutputIndex index,
                         const MaskSpec& spec);

/// Output change per (o, tau) after masking with that output's own ranking.
struct OutputChange {
  Grid absolute;
  Grid squared;
};

OutputChange masked_output_change(const ForecastOracle& oracle, const ModelInput& input,
                                  const RelevanceRanking& ranking, const MaskSpec& spec);

/// |f(X) - f(X without its top-k cells)|.
OutputChange comprehensiveness(const ForecastOracle& oracle, const ModelInput& input,
                               const RelevanceRanking& ranking, double k_percent,
                               const BaselineGenerator& baseline = BaselineGenerator::zero(),
                               std::uint64_t seed = 0);

/// |f(X) - f(X keeping only its top-k cells)|.
OutputChange sufficiency(const ForecastOracle& oracle, const ModelInput& input,
                         const RelevanceRanking& ranking, double k_percent,
                         const BaselineGenerator& baseline = BaselineGenerator::zero(),
                         std::uint64_t seed = 0);

struct AopcrConfig {
  std::vector<double> k_bins{5.0, 10.0};
  BaselineGenerator baseline = BaselineGenerator::zero();
  /// Baseline draws for instance i use derive_seed(seed, "mask", i).
  std::uint64_t seed = 0;
};

/// Per-instance AOPCR values: mean over k bins, outputs and horizon steps of
/// the (absolute or squared) output change.
struct AopcrInstance {
  double comprehensiveness_mae = 0.0;
  double comprehensiveness_mse = 0.0;
  double sufficiency_mae = 0.0;
  double sufficiency_mse = 0.0;
};

struct AopcrResult {
  AopcrInstance mean;  // averaged over instances
  std::vector<AopcrInstance> per_instance;
};

AopcrResult aopcr(const ForecastOracle& oracle, std::span<const ModelInput> instances,
                  std::span<const AttributionTensor> attributions, const AopcrConfig& config);

struct FaithfulnessEntry {
  std::string method;
  std::vector<double> k_bins;
  AopcrResult result;
};

/// CSV: method, metric, aggregation, k_bins, value (four rows per method).
void write_faithfulness_csv(std::ostream& out, std::span<const FaithfulnessEntry> entries);
/// CSV: method, instance, metric, aggregation, value.
void write_faithfulness_instances_csv(std::ostream& out, std::span<const FaithfulnessEntry> entries,
                                      std::span<const std::string> instance_labels);

}  // namespace tsinterp
