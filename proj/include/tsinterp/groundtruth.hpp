#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsinterp/attribution.hpp"
#include "tsinterp/grid.hpp"
#include "tsinterp/time_axis.hpp"

namespace tsinterp {

/// Observed per-group counts for each period (weekly for the case data).
struct GroupTruth {
  std::vector<TimePoint> periods;  // period start dates, increasing
  std::vector<std::string> groups;
  Grid counts;                     // periods x groups

  void validate() const;
  /// Row-normalized counts.
  Grid shares() const;
  std::optional<std::size_t> period_index(TimePoint start) const;
};

/// Reads a long CSV with columns week_start_date, group, cases. Groups keep
/// their order of first appearance; every (week, group) pair must be present.
GroupTruth read_group_truth(std::istream& in, const std::string& source);
GroupTruth load_group_truth(const std::filesystem::path& path);
void write_group_truth(std::ostream& out, const GroupTruth& truth);

/// Divides each row by its l1 norm. A row with no positive mass throws,
/// naming the row label when `row_labels` is given.
Grid normalize_shares(const Grid& scores, std::span<const std::string> row_labels = {});
std::vector<double> normalize_shares(std::span<const double> scores);

/// Positions of the group features among `feature_names` (rows of phi).
/// Throws ValidationError naming a group that is not a feature.
std::vector<std::size_t> group_rows(std::span<const std::string> feature_names,
                                    std::span<const std::string> groups);

/// tau_max x |G| grid of sum over l of |phi[0, tau, g, l]|.
Grid aggregate_group_attribution(const AttributionTensor& phi, std::span<const std::size_t> rows);

/// Half-open periods [start, start + length).
class PeriodCalendar {
 public:
  PeriodCalendar(std::vector<TimePoint> starts, std::chrono::seconds length);
  static PeriodCalendar weekly(std::vector<TimePoint> starts) {
    return PeriodCalendar(std::move(starts), std::chrono::seconds(7 * 86400));
  }

  std::optional<std::size_t> find(TimePoint t) const;
  const std::vector<TimePoint>& starts() const { return starts_; }

 private:
  std::vector<TimePoint> starts_;
  std::chrono::seconds length_;
};

/// Aggregated group scores of one instance, keyed by its anchor time.
struct GroupScoreRecord {
  TimePoint anchor_time{};
  Grid scores;  // tau_max x |G|
};

struct PeriodScores {
  std::vector<TimePoint> periods;  // only periods that received a prediction
  Grid sums;                       // periods x |G|

  Grid shares(std::span<const std::string> labels = {}) const { return normalize_shares(sums, labels); }
};

/// Assigns each predicted day anchor + (tau + 1) * step to its period and
/// sums the scores per (period, group). Throws when a day falls outside the
/// calendar.
PeriodScores rollup_to_periods(std::span<const GroupScoreRecord> records, std::int64_t step_seconds,
                               const PeriodCalendar& calendar);

struct SensitivityComparison {
  std::string method;
  std::vector<TimePoint> periods;
  std::vector<std::string> groups;
  Grid predicted;  // shares
  Grid truth;      // shares
  std::vector<double> ndcg_per_period;
  double mae = 0.0;
  double rmse = 0.0;
  double ndcg = 0.0;
};

SensitivityComparison compare_to_truth(const std::string& method, const PeriodScores& predicted,
                                       const GroupTruth& truth);

/// CSV: method, period, group, predicted_share, true_share.
void write_comparison_csv(std::ostream& out, std::span<const SensitivityComparison> comparisons);
/// CSV: method, MAE, RMSE, NDCG.
void write_comparison_summary_csv(std::ostream& out, std::span<const SensitivityComparison> comparisons);

/// Percentage of the mean |phi| carried by each feature row over all
/// instances, outputs, horizon steps and lookback positions.
std::vector<double> feature_importance(std::span<const AttributionTensor> attributions);

/// 1-based descending ranks (ties broken by position).
std::vector<std::size_t> descending_ranks(std::span<const double> values);

}  // namespace tsinterp
