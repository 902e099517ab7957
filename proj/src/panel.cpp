#include "tsinterp/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "tsinterp/csv.hpp"
#include "tsinterp/errors.hpp"

namespace tsinterp {

std::string_view to_string(FeatureRole role) {
  switch (role) {
    case FeatureRole::static_input: return "static";
    case FeatureRole::dynamic: return "dynamic";
    case FeatureRole::known_future: return "known-future";
    case FeatureRole::target: return "target";
  }
  return "?";
}

FeatureRole parse_feature_role(std::string_view text) {
  if (text == "static") return FeatureRole::static_input;
  if (text == "dynamic") return FeatureRole::dynamic;
  if (text == "known-future" || text == "known_future") return FeatureRole::known_future;
  if (text == "target") return FeatureRole::target;
  throw ValidationError("unknown feature role '" + std::string(text) +
                        "' (expected static, dynamic, known-future or target)");
}

void validate_schema(std::span<const FeatureSpec> schema) {
  std::set<std::string> names;
  std::size_t targets = 0;
  for (const auto& f : schema) {
    if (f.name.empty()) throw ValidationError("feature with empty name");
    if (!names.insert(f.name).second) {
      throw ValidationError("duplicate feature name '" + f.name + "'");
    }
    if (f.role == FeatureRole::target) ++targets;
  }
  if (targets != 1) {
    throw ValidationError("schema must have exactly one target feature, found " +
                          std::to_string(targets));
  }
}

TimeSeriesPanel::TimeSeriesPanel(std::vector<std::string> entity_ids, std::vector<TimePoint> times,
                                 std::vector<FeatureSpec> feature_specs)
    : entities(std::move(entity_ids)),
      time_index(std::move(times)),
      features(std::move(feature_specs)),
      values(entities.size() * features.size() * time_index.size(), 0.0),
      present(values.size(), 0) {}

std::optional<std::size_t> TimeSeriesPanel::feature_index(std::string_view name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t TimeSeriesPanel::target_index() const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].role == FeatureRole::target) return i;
  }
  throw ValidationError("panel has no target feature");
}

std::size_t TimeSeriesPanel::missing_count() const {
  return static_cast<std::size_t>(std::count(present.begin(), present.end(), 0));
}

bool TimeSeriesPanel::has_time_of_day() const {
  return std::any_of(time_index.begin(), time_index.end(),
                     [](TimePoint t) { return !is_midnight(t); });
}

std::int64_t TimeSeriesPanel::step_seconds() const {
  if (time_index.size() < 2) return 0;
  return (time_index[1] - time_index[0]).count();
}

void TimeSeriesPanel::validate() const {
  validate_schema(features);
  if (values.size() != entities.size() * features.size() * time_index.size() ||
      present.size() != values.size()) {
    throw ValidationError("panel value array does not match its dimensions");
  }
  const auto step = step_seconds();
  for (std::size_t t = 1; t < time_index.size(); ++t) {
    const auto d = (time_index[t] - time_index[t - 1]).count();
    if (d <= 0) throw ValidationError("time index is not strictly increasing at step " + std::to_string(t));
    if (d != step) {
      throw ValidationError("time index step is not uniform at " +
                            format_time(time_index[t], has_time_of_day()));
    }
  }
  for (std::size_t e = 0; e < entities.size(); ++e) {
    for (std::size_t f = 0; f < features.size(); ++f) {
      std::optional<double> first;
      for (std::size_t t = 0; t < time_index.size(); ++t) {
        if (!is_present(e, f, t)) continue;
        const double v = value(e, f, t);
        if (!std::isfinite(v)) {
          throw ValidationError("non-finite value for entity '" + entities[e] + "', feature '" +
                                features[f].name + "'");
        }
        if (features[f].role == FeatureRole::static_input) {
          if (!first) first = v;
          else if (*first != v) {
            throw ValidationError("static feature '" + features[f].name +
                                  "' varies over time for entity '" + entities[e] + "'");
          }
        }
      }
    }
  }
}

TimeSeriesPanel read_panel_csv(std::istream& in, const std::string& source,
                               std::span<const FeatureSpec> schema, const LoadOptions& options) {
  validate_schema(schema);
  CsvReader reader(in, source);
  const std::size_t entity_col = reader.require_column(options.entity_column);
  const std::size_t date_col = reader.require_column(options.date_column);
  std::vector<std::size_t> feature_cols;
  for (const auto& f : schema) feature_cols.push_back(reader.require_column(f.name));

  struct Row {
    std::string entity;
    TimePoint time;
    std::vector<std::optional<double>> values;
  };
  std::vector<Row> rows;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    Row row;
    row.entity = trim(fields[entity_col]);
    if (row.entity.empty()) {
      throw ValidationError(source + ":" + std::to_string(reader.line_number()) + ": empty entity id");
    }
    const std::string date_text = trim(fields[date_col]);
    if (!parse_time(date_text, row.time)) {
      throw ValidationError(source + ":" + std::to_string(reader.line_number()) +
                            ": unparseable date '" + date_text + "'");
    }
    for (std::size_t i = 0; i < feature_cols.size(); ++i) {
      const std::string cell = trim(fields[feature_cols[i]]);
      if (cell.empty() || cell == "NA" || cell == "nan" || cell == "NaN") {
        row.values.emplace_back();
        continue;
      }
      double v = 0.0;
      if (!parse_double(cell, v) || !std::isfinite(v)) {
        throw ValidationError(source + ":" + std::to_string(reader.line_number()) +
                              ": column '" + schema[i].name + "' has non-numeric value '" + cell + "'");
      }
      row.values.emplace_back(v);
    }
    rows.push_back(std::move(row));
  }

  std::set<std::string> entity_set;
  std::set<TimePoint> time_set;
  for (const auto& r : rows) {
    entity_set.insert(r.entity);
    time_set.insert(r.time);
  }
  // Fill the time axis between first and last date at the smallest observed
  // step so that absent rows become missing cells rather than holes.
  std::vector<TimePoint> times;
  if (!time_set.empty()) {
    std::vector<TimePoint> observed(time_set.begin(), time_set.end());
    std::int64_t step = 0;
    for (std::size_t i = 1; i < observed.size(); ++i) {
      const auto d = (observed[i] - observed[i - 1]).count();
      step = step == 0 ? d : std::min(step, d);
    }
    if (step == 0) {
      times = observed;
    } else {
      for (auto t = observed.front(); t <= observed.back(); t += std::chrono::seconds(step)) {
        times.push_back(t);
      }
      for (const auto& t : observed) {
        if (!std::binary_search(times.begin(), times.end(), t)) {
          throw ValidationError(source + ": date " + format_time(t, !is_midnight(t)) +
                                " is off the uniform " + std::to_string(step) + "s grid");
        }
      }
    }
  }

  TimeSeriesPanel panel(std::vector<std::string>(entity_set.begin(), entity_set.end()), times,
                        std::vector<FeatureSpec>(schema.begin(), schema.end()));
  std::map<std::string, std::size_t> entity_pos;
  for (std::size_t e = 0; e < panel.entities.size(); ++e) entity_pos[panel.entities[e]] = e;
  std::vector<std::uint8_t> seen(panel.entities.size() * times.size(), 0);
  std::size_t line = 1;
  for (const auto& r : rows) {
    ++line;
    const std::size_t e = entity_pos.at(r.entity);
    const std::size_t t = static_cast<std::size_t>(
        std::lower_bound(times.begin(), times.end(), r.time) - times.begin());
    if (seen[e * times.size() + t]++) {
      throw ValidationError(source + ": duplicate row for entity '" + r.entity + "' at " +
                            format_time(r.time, !is_midnight(r.time)));
    }
    for (std::size_t f = 0; f < r.values.size(); ++f) {
      if (r.values[f]) panel.set(e, f, t, *r.values[f]);
    }
  }
  panel.validate();
  return panel;
}

TimeSeriesPanel load_panel(const std::filesystem::path& path, std::span<const FeatureSpec> schema,
                           const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open panel file '" + path.string() + "'");
  return read_panel_csv(in, path.string(), schema, options);
}

void write_panel_csv(std::ostream& out, const TimeSeriesPanel& panel, const LoadOptions& options) {
  const bool with_time = panel.has_time_of_day();
  out << csv_escape(options.entity_column) << ',' << csv_escape(options.date_column);
  for (const auto& f : panel.features) out << ',' << csv_escape(f.name);
  out << '\n';
  for (std::size_t e = 0; e < panel.entity_count(); ++e) {
    for (std::size_t t = 0; t < panel.time_count(); ++t) {
      out << csv_escape(panel.entities[e]) << ',' << format_time(panel.time_index[t], with_time);
      for (std::size_t f = 0; f < panel.feature_count(); ++f) {
        out << ',';
        if (panel.is_present(e, f, t)) out << format_double(panel.value(e, f, t));
      }
      out << '\n';
    }
  }
}

std::string_view to_string(CalendarField field) {
  switch (field) {
    case CalendarField::month: return "month";
    case CalendarField::day: return "day";
    case CalendarField::weekday: return "weekday";
    case CalendarField::hour: return "hour";
  }
  return "?";
}

CalendarField parse_calendar_field(std::string_view text) {
  if (text == "month") return CalendarField::month;
  if (text == "day") return CalendarField::day;
  if (text == "weekday") return CalendarField::weekday;
  if (text == "hour") return CalendarField::hour;
  throw ValidationError("unknown calendar feature '" + std::string(text) +
                        "' (expected month, day, weekday or hour)");
}

TimeSeriesPanel add_calendar_features(const TimeSeriesPanel& panel,
                                      std::span<const CalendarField> fields) {
  using namespace std::chrono;
  auto specs = panel.features;
  for (auto field : fields) {
    const std::string name(to_string(field));
    if (panel.feature_index(name)) {
      throw ValidationError("calendar feature '" + name + "' collides with an existing feature");
    }
    specs.push_back({name, FeatureRole::known_future});
  }
  TimeSeriesPanel out(panel.entities, panel.time_index, specs);
  out.owned_begin = panel.owned_begin;
  const std::size_t old_f = panel.feature_count();
  for (std::size_t e = 0; e < panel.entity_count(); ++e) {
    for (std::size_t f = 0; f < old_f; ++f) {
      for (std::size_t t = 0; t < panel.time_count(); ++t) {
        const auto off = out.offset(e, f, t);
        out.values[off] = panel.value(e, f, t);
        out.present[off] = panel.present[panel.offset(e, f, t)];
      }
    }
    for (std::size_t k = 0; k < fields.size(); ++k) {
      for (std::size_t t = 0; t < panel.time_count(); ++t) {
        const TimePoint tp = panel.time_index[t];
        const sys_days d = floor<days>(tp);
        const year_month_day ymd{d};
        double v = 0.0;
        switch (fields[k]) {
          case CalendarField::month: v = static_cast<unsigned>(ymd.month()); break;
          case CalendarField::day: v = static_cast<unsigned>(ymd.day()); break;
          case CalendarField::weekday: v = weekday{d}.iso_encoding() - 1; break;
          case CalendarField::hour: v = static_cast<double>(duration_cast<hours>(tp - d).count()); break;
        }
        out.set(e, old_f + k, t, v);
      }
    }
  }
  return out;
}

TimeSeriesPanel slice_time(const TimeSeriesPanel& panel, std::size_t begin, std::size_t end) {
  end = std::min(end, panel.time_count());
  begin = std::min(begin, end);
  TimeSeriesPanel out(panel.entities,
                      std::vector<TimePoint>(panel.time_index.begin() + static_cast<std::ptrdiff_t>(begin),
                                             panel.time_index.begin() + static_cast<std::ptrdiff_t>(end)),
                      panel.features);
  out.owned_begin = panel.owned_begin > begin ? panel.owned_begin - begin : 0;
  for (std::size_t e = 0; e < panel.entity_count(); ++e) {
    for (std::size_t f = 0; f < panel.feature_count(); ++f) {
      for (std::size_t t = begin; t < end; ++t) {
        out.values[out.offset(e, f, t - begin)] = panel.value(e, f, t);
        out.present[out.offset(e, f, t - begin)] = panel.present[panel.offset(e, f, t)];
      }
    }
  }
  return out;
}

}  // namespace tsinterp
