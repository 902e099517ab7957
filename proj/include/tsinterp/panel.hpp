#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsinterp/time_axis.hpp"

namespace tsinterp {

enum class FeatureRole { static_input, dynamic, known_future, target };

std::string_view to_string(FeatureRole role);
FeatureRole parse_feature_role(std::string_view text);

struct FeatureSpec {
  std::string name;
  FeatureRole role = FeatureRole::dynamic;

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Checks that names are unique and exactly one feature is the target.
void validate_schema(std::span<const FeatureSpec> schema);

/// Multi-entity panel: values indexed (entity, feature, time) with a
/// presence mask alongside.
///
/// `owned_begin` marks the first time index that belongs to this panel when
/// it is a validation/test split: earlier steps are lookback context only and
/// no forecast target may fall before it.
struct TimeSeriesPanel {
  std::vector<std::string> entities;
  std::vector<TimePoint> time_index;
  std::vector<FeatureSpec> features;
  std::vector<double> values;
  std::vector<std::uint8_t> present;
  std::size_t owned_begin = 0;

  TimeSeriesPanel() = default;
  TimeSeriesPanel(std::vector<std::string> entity_ids, std::vector<TimePoint> times,
                  std::vector<FeatureSpec> feature_specs);

  std::size_t entity_count() const { return entities.size(); }
  std::size_t feature_count() const { return features.size(); }
  std::size_t time_count() const { return time_index.size(); }

  std::size_t offset(std::size_t e, std::size_t f, std::size_t t) const {
    return (e * features.size() + f) * time_index.size() + t;
  }
  double value(std::size_t e, std::size_t f, std::size_t t) const { return values[offset(e, f, t)]; }
  bool is_present(std::size_t e, std::size_t f, std::size_t t) const {
    return present[offset(e, f, t)] != 0;
  }
  void set(std::size_t e, std::size_t f, std::size_t t, double v) {
    values[offset(e, f, t)] = v;
    present[offset(e, f, t)] = 1;
  }
  void set_missing(std::size_t e, std::size_t f, std::size_t t) {
    values[offset(e, f, t)] = 0.0;
    present[offset(e, f, t)] = 0;
  }

  std::span<double> series(std::size_t e, std::size_t f) {
    return std::span<double>(values).subspan(offset(e, f, 0), time_index.size());
  }
  std::span<const double> series(std::size_t e, std::size_t f) const {
    return std::span<const double>(values).subspan(offset(e, f, 0), time_index.size());
  }
  std::span<std::uint8_t> series_mask(std::size_t e, std::size_t f) {
    return std::span<std::uint8_t>(present).subspan(offset(e, f, 0), time_index.size());
  }
  std::span<const std::uint8_t> series_mask(std::size_t e, std::size_t f) const {
    return std::span<const std::uint8_t>(present).subspan(offset(e, f, 0), time_index.size());
  }

  std::optional<std::size_t> feature_index(std::string_view name) const;
  std::size_t target_index() const;
  std::size_t missing_count() const;
  /// True when any timestamp is not at midnight (hourly data).
  bool has_time_of_day() const;
  /// Time step in seconds; 0 for panels with fewer than two steps.
  std::int64_t step_seconds() const;

  /// Checks the structural invariants (schema, uniform increasing time axis,
  /// finite present values, constant static features).
  void validate() const;

  friend bool operator==(const TimeSeriesPanel&, const TimeSeriesPanel&) = default;
};

struct LoadOptions {
  std::string entity_column = "entity";
  std::string date_column = "date";
};

/// Reads a long-format CSV (one row per entity and date). Blank, "NA" and
/// "nan" cells are missing; (entity, date) pairs absent from the file are
/// missing too. Entities are sorted lexicographically.
TimeSeriesPanel load_panel(const std::filesystem::path& path, std::span<const FeatureSpec> schema,
                           const LoadOptions& options = {});
TimeSeriesPanel read_panel_csv(std::istream& in, const std::string& source,
                               std::span<const FeatureSpec> schema, const LoadOptions& options = {});

/// Writes the panel in the same long format; missing cells are left blank.
void write_panel_csv(std::ostream& out, const TimeSeriesPanel& panel,
                     const LoadOptions& options = {});

enum class CalendarField { month, day, weekday, hour };
std::string_view to_string(CalendarField field);
CalendarField parse_calendar_field(std::string_view text);

/// Appends integer-valued known-future features derived from the date axis
/// (month 1-12, day of month 1-31, weekday 0-6 with Monday = 0, hour 0-23).
TimeSeriesPanel add_calendar_features(const TimeSeriesPanel& panel,
                                      std::span<const CalendarField> fields);

/// Copy restricted to time steps [begin, end).
TimeSeriesPanel slice_time(const TimeSeriesPanel& panel, std::size_t begin, std::size_t end);

}  // namespace tsinterp
