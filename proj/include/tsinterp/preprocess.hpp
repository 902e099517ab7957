#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsinterp/panel.hpp"

namespace tsinterp {

struct PreprocessConfig {
  double iqr_multiplier = 7.5;
  std::size_t smoothing_window = 7;
  /// Features to clip. Empty means every dynamic and target feature.
  std::vector<std::string> clip_features;

  void validate() const;
};

/// Linear-interpolation ("type 7") sample quantile, q in [0, 1].
double quantile_type7(std::vector<double> values, double q);

/// Trailing moving average over `window` steps, averaging the present values
/// in each window. Entry i covers steps [i, i + window). Windows without any
/// present value yield nullopt.
std::vector<std::optional<double>> trailing_moving_average(std::span<const double> values,
                                                          std::span<const std::uint8_t> present,
                                                          std::size_t window);

struct ClipRecord {
  std::string entity;
  std::string feature;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t clipped = 0;
  bool skipped = false;
  std::string message;
};

struct ClipResult {
  TimeSeriesPanel panel;
  std::vector<ClipRecord> records;
};

/// Marks as missing every value of a dynamic/target series lying outside
/// [Q1 - m*IQR, Q3 + m*IQR], with quartiles taken on the series' trailing
/// moving average. Series shorter than the smoothing window are skipped and
/// reported.
ClipResult clip_outliers(const TimeSeriesPanel& panel, const PreprocessConfig& config);

/// Linear interpolation of interior gaps, nearest-value extension at the
/// edges. Throws ValidationError for an all-missing series.
TimeSeriesPanel interpolate_missing(const TimeSeriesPanel& panel);

struct FeatureStats {
  std::string feature;
  double mean = 0.0;
  double stddev = 1.0;
};

struct StandardizationStats {
  std::vector<FeatureStats> features;

  const FeatureStats& at(std::string_view feature) const;
  double invert(std::string_view feature, double standardized) const;
};

struct Standardized {
  TimeSeriesPanel panel;
  StandardizationStats stats;
};

/// (x - mean) / std per feature over all entities and present time steps.
/// With `stats` given (validation/test path) those are applied as-is.
/// Zero-variance features are recorded with std = 1.
Standardized standardize(const TimeSeriesPanel& panel,
                         const std::optional<StandardizationStats>& stats = std::nullopt);
TimeSeriesPanel destandardize(const TimeSeriesPanel& panel, const StandardizationStats& stats);

struct SplitPanels {
  TimeSeriesPanel train;
  TimeSeriesPanel validation;
  TimeSeriesPanel test;
};

/// Partitions the time axis into [0, train_end], the next `val_len` steps
/// and the following `test_len` steps. Validation and test panels keep the
/// whole preceding history as lookback context (owned_begin marks where
/// their own steps start).
SplitPanels split_chronological(const TimeSeriesPanel& panel, std::size_t train_end,
                                std::size_t val_len, std::size_t test_len);

/// Keeps at most `context` steps before owned_begin.
TimeSeriesPanel trim_context(const TimeSeriesPanel& panel, std::size_t context);

/// Key-value sidecar ("key = value" lines, '#' comments).
using KeyValues = std::map<std::string, std::string>;
void write_key_values(std::ostream& out, const KeyValues& kv, std::string_view header_comment = {});
KeyValues read_key_values(std::istream& in, const std::string& source);

void put_stats(KeyValues& kv, const StandardizationStats& stats);
StandardizationStats get_stats(const KeyValues& kv);
void put_clip_records(KeyValues& kv, std::span<const ClipRecord> records);

}  // namespace tsinterp
