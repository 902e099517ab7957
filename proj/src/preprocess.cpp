#include "tsinterp/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "tsinterp/csv.hpp"
#include "tsinterp/errors.hpp"

namespace tsinterp {

void PreprocessConfig::validate() const {
  if (!(iqr_multiplier > 0.0) || !std::isfinite(iqr_multiplier)) {
    throw ValidationError("iqr_multiplier must be a positive number");
  }
  if (smoothing_window == 0) throw ValidationError("smoothing_window must be at least 1");
}

double quantile_type7(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<std::optional<double>> trailing_moving_average(std::span<const double> values,
                                                          std::span<const std::uint8_t> present,
                                                          std::size_t window) {
  std::vector<std::optional<double>> out;
  if (window == 0 || values.size() < window) return out;
  for (std::size_t i = 0; i + window <= values.size(); ++i) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = i; k < i + window; ++k) {
      if (present[k]) {
        sum += values[k];
        ++n;
      }
    }
    if (n > 0) out.emplace_back(sum / static_cast<double>(n));
    else out.emplace_back();
  }
  return out;
}

ClipResult clip_outliers(const TimeSeriesPanel& panel, const PreprocessConfig& config) {
  config.validate();
  ClipResult result{panel, {}};
  std::vector<std::size_t> clip_features;
  if (config.clip_features.empty()) {
    for (std::size_t f = 0; f < panel.feature_count(); ++f) {
      const auto role = panel.features[f].role;
      if (role == FeatureRole::dynamic || role == FeatureRole::target) clip_features.push_back(f);
    }
  } else {
    for (const auto& name : config.clip_features) {
      const auto f = panel.feature_index(name);
      if (!f) throw ValidationError("clip feature '" + name + "' is not in the panel");
      const auto role = panel.features[*f].role;
      if (role != FeatureRole::dynamic && role != FeatureRole::target) {
        throw ValidationError("clip feature '" + name + "' must be dynamic or target");
      }
      clip_features.push_back(*f);
    }
  }

  auto& out = result.panel;
  for (std::size_t e = 0; e < panel.entity_count(); ++e) {
    for (std::size_t f : clip_features) {
      ClipRecord rec;
      rec.entity = panel.entities[e];
      rec.feature = panel.features[f].name;
      const auto smoothed =
          trailing_moving_average(panel.series(e, f), panel.series_mask(e, f), config.smoothing_window);
      std::vector<double> sample;
      for (const auto& s : smoothed) {
        if (s) sample.push_back(*s);
      }
      if (sample.empty()) {
        rec.skipped = true;
        rec.message = "series shorter than the smoothing window or without present values; clipping skipped";
        result.records.push_back(std::move(rec));
        continue;
      }
      const double q1 = quantile_type7(sample, 0.25);
      const double q3 = quantile_type7(sample, 0.75);
      const double iqr = q3 - q1;
      rec.lower = q1 - config.iqr_multiplier * iqr;
      rec.upper = q3 + config.iqr_multiplier * iqr;
      for (std::size_t t = 0; t < panel.time_count(); ++t) {
        if (!panel.is_present(e, f, t)) continue;
        const double v = panel.value(e, f, t);
        if (v < rec.lower || v > rec.upper) {
          out.set_missing(e, f, t);
          ++rec.clipped;
        }
      }
      result.records.push_back(std::move(rec));
    }
  }
  return result;
}

TimeSeriesPanel interpolate_missing(const TimeSeriesPanel& panel) {
  TimeSeriesPanel out = panel;
  for (std::size_t e = 0; e < panel.entity_count(); ++e) {
    for (std::size_t f = 0; f < panel.feature_count(); ++f) {
      auto vals = out.series(e, f);
      auto mask = out.series_mask(e, f);
      std::vector<std::size_t> known;
      for (std::size_t t = 0; t < vals.size(); ++t) {
        if (mask[t]) known.push_back(t);
      }
      if (known.size() == vals.size()) continue;
      if (known.empty()) {
        throw ValidationError("cannot interpolate all-missing series: entity '" + panel.entities[e] +
                              "', feature '" + panel.features[f].name + "'");
      }
      for (std::size_t t = 0; t < known.front(); ++t) vals[t] = vals[known.front()];
      for (std::size_t t = known.back() + 1; t < vals.size(); ++t) vals[t] = vals[known.back()];
      for (std::size_t k = 0; k + 1 < known.size(); ++k) {
        const std::size_t a = known[k];
        const std::size_t b = known[k + 1];
        for (std::size_t t = a + 1; t < b; ++t) {
          const double w = static_cast<double>(t - a) / static_cast<double>(b - a);
          vals[t] = vals[a] + w * (vals[b] - vals[a]);
        }
      }
      std::fill(mask.begin(), mask.end(), std::uint8_t{1});
    }
  }
  return out;
}

const FeatureStats& StandardizationStats::at(std::string_view feature) const {
  for (const auto& s : features) {
    if (s.feature == feature) return s;
  }
  throw ValidationError("no standardization statistics for feature '" + std::string(feature) + "'");
}

double StandardizationStats::invert(std::string_view feature, double standardized) const {
  const auto& s = at(feature);
  return standardized * s.stddev + s.mean;
}

Standardized standardize(const TimeSeriesPanel& panel,
                         const std::optional<StandardizationStats>& stats) {
  Standardized result{panel, {}};
  if (stats) {
    for (const auto& f : panel.features) result.stats.features.push_back(stats->at(f.name));
  } else {
    for (std::size_t f = 0; f < panel.feature_count(); ++f) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t e = 0; e < panel.entity_count(); ++e) {
        for (std::size_t t = 0; t < panel.time_count(); ++t) {
          if (panel.is_present(e, f, t)) {
            sum += panel.value(e, f, t);
            ++n;
          }
        }
      }
      FeatureStats s{panel.features[f].name, 0.0, 1.0};
      if (n > 0) {
        s.mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t e = 0; e < panel.entity_count(); ++e) {
          for (std::size_t t = 0; t < panel.time_count(); ++t) {
            if (panel.is_present(e, f, t)) {
              const double d = panel.value(e, f, t) - s.mean;
              ss += d * d;
            }
          }
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        s.stddev = sd > 0.0 ? sd : 1.0;
      }
      result.stats.features.push_back(s);
    }
  }
  auto& out = result.panel;
  for (std::size_t f = 0; f < panel.feature_count(); ++f) {
    const auto& s = result.stats.features[f];
    for (std::size_t e = 0; e < panel.entity_count(); ++e) {
      for (std::size_t t = 0; t < panel.time_count(); ++t) {
        if (panel.is_present(e, f, t)) {
          out.values[out.offset(e, f, t)] = (panel.value(e, f, t) - s.mean) / s.stddev;
        }
      }
    }
  }
  return result;
}

TimeSeriesPanel destandardize(const TimeSeriesPanel& panel, const StandardizationStats& stats) {
  TimeSeriesPanel out = panel;
  for (std::size_t f = 0; f < panel.feature_count(); ++f) {
    const auto& s = stats.at(panel.features[f].name);
    for (std::size_t e = 0; e < panel.entity_count(); ++e) {
      for (std::size_t t = 0; t < panel.time_count(); ++t) {
        if (panel.is_present(e, f, t)) {
          out.values[out.offset(e, f, t)] = panel.value(e, f, t) * s.stddev + s.mean;
        }
      }
    }
  }
  return out;
}

SplitPanels split_chronological(const TimeSeriesPanel& panel, std::size_t train_end,
                                std::size_t val_len, std::size_t test_len) {
  const std::size_t required = train_end + 1 + val_len + test_len;
  if (required > panel.time_count()) {
    throw ValidationError("chronological split needs " + std::to_string(required) +
                          " time steps but the panel has " + std::to_string(panel.time_count()));
  }
  SplitPanels s;
  s.train = slice_time(panel, 0, train_end + 1);
  s.train.owned_begin = 0;
  s.validation = slice_time(panel, 0, train_end + 1 + val_len);
  s.validation.owned_begin = train_end + 1;
  s.test = slice_time(panel, 0, required);
  s.test.owned_begin = train_end + 1 + val_len;
  return s;
}

TimeSeriesPanel trim_context(const TimeSeriesPanel& panel, std::size_t context) {
  const std::size_t begin = panel.owned_begin > context ? panel.owned_begin - context : 0;
  return slice_time(panel, begin, panel.time_count());
}

void write_key_values(std::ostream& out, const KeyValues& kv, std::string_view header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

KeyValues read_key_values(std::istream& in, const std::string& source) {
  KeyValues kv;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto pos = t.find(" = ");
    if (pos == std::string::npos) {
      throw ValidationError(source + ":" + std::to_string(n) + ": expected 'key = value'");
    }
    kv[trim(t.substr(0, pos))] = trim(t.substr(pos + 3));
  }
  return kv;
}

void put_stats(KeyValues& kv, const StandardizationStats& stats) {
  for (const auto& s : stats.features) {
    kv["feature." + s.feature + ".mean"] = format_double(s.mean);
    kv["feature." + s.feature + ".std"] = format_double(s.stddev);
  }
}

StandardizationStats get_stats(const KeyValues& kv) {
  StandardizationStats stats;
  const std::string prefix = "feature.";
  for (const auto& [k, v] : kv) {
    if (k.rfind(prefix, 0) != 0 || k.size() < prefix.size() + 5) continue;
    if (k.compare(k.size() - 5, 5, ".mean") != 0) continue;
    const std::string name = k.substr(prefix.size(), k.size() - prefix.size() - 5);
    FeatureStats s{name, 0.0, 1.0};
    const auto sd = kv.find(prefix + name + ".std");
    if (!parse_double(v, s.mean) || sd == kv.end() || !parse_double(sd->second, s.stddev) ||
        !(s.stddev > 0.0)) {
      throw ValidationError("invalid standardization statistics for feature '" + name + "'");
    }
    stats.features.push_back(s);
  }
  return stats;
}

void put_clip_records(KeyValues& kv, std::span<const ClipRecord> records) {
  for (const auto& r : records) {
    const std::string key = "clip." + r.entity + "." + r.feature;
    if (r.skipped) {
      kv[key + ".skipped"] = r.message;
      continue;
    }
    kv[key + ".lower"] = format_double(r.lower);
    kv[key + ".upper"] = format_double(r.upper);
    kv[key + ".clipped"] = std::to_string(r.clipped);
  }
}

}  // namespace tsinterp
