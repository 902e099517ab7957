#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "tsinterp/csv.hpp"
#include "tsinterp/errors.hpp"
#include "tsinterp/panel.hpp"
#include "tsinterp/preprocess.hpp"
#include "tsinterp/time_axis.hpp"
#include "tsinterp/windows.hpp"

using namespace tsinterp;

namespace {

std::vector<FeatureSpec> two_feature_schema() {
  return {{"vaccination", FeatureRole::dynamic}, {"cases", FeatureRole::target}};
}

TimeSeriesPanel panel_from(const std::string& csv, std::span<const FeatureSpec> schema) {
  std::istringstream in(csv);
  return read_panel_csv(in, "test.csv", schema);
}

TimePoint day(const char* text) {
  TimePoint t;
  REQUIRE(parse_time(text, t));
  return t;
}

/// Single-entity panel with one target series.
TimeSeriesPanel series_panel(const std::vector<double>& values, const std::vector<bool>& present = {}) {
  std::vector<TimePoint> times;
  for (std::size_t t = 0; t < values.size(); ++t) times.push_back(day("2021-01-01") + std::chrono::days(t));
  TimeSeriesPanel p({"a"}, times, {{"cases", FeatureRole::target}});
  for (std::size_t t = 0; t < values.size(); ++t) {
    if (present.empty() || present[t]) p.set(0, 0, t, values[t]);
    else p.set_missing(0, 0, t);
  }
  return p;
}

}  // namespace

TEST_CASE("csv helpers") {
  CHECK(split_csv_line("a,\"b,c\",d") == std::vector<std::string>{"a", "b,c", "d"});
  CHECK(split_csv_line("x,\"say \"\"hi\"\"\",") == std::vector<std::string>{"x", "say \"hi\"", ""});
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  double v = 0;
  CHECK(parse_double(" 1.5 ", v));
  CHECK(v == 1.5);
  CHECK_FALSE(parse_double("1.5x", v));
  CHECK_FALSE(parse_double("", v));
  const double x = 0.1 + 0.2;
  double back = 0;
  REQUIRE(parse_double(format_double(x), back));
  CHECK(back == x);
  CHECK(format_double(-0.0) == "0");
}

TEST_CASE("time parsing accepts dates and datetimes and rejects impossible dates") {
  TimePoint t;
  CHECK(parse_time("2020-03-01", t));
  CHECK(format_time(t, false) == "2020-03-01");
  CHECK(parse_time("2020-03-01T05:30", t));
  CHECK(format_time(t, true) == "2020-03-01T05:30:00");
  CHECK(parse_time("2020-03-01 05:30:15", t));
  CHECK_FALSE(is_midnight(t));
  CHECK_FALSE(parse_time("2021-02-30", t));
  CHECK_FALSE(parse_time("yesterday", t));
}

TEST_CASE("load_panel: two entities, three dates, two features") {
  const auto schema = two_feature_schema();
  const auto p = panel_from(
      "entity,date,vaccination,cases\n"
      "b,2021-01-01,1,10\n"
      "a,2021-01-01,2,20\n"
      "a,2021-01-02,3,\n"
      "b,2021-01-02,4,40\n"
      "a,2021-01-03,5,50\n"
      "b,2021-01-03,6,60\n",
      schema);
  CHECK(p.time_count() == 3);
  CHECK(p.entity_count() == 2);
  CHECK(p.entities == std::vector<std::string>{"a", "b"});
  CHECK(p.missing_count() == 1);
  CHECK_FALSE(p.is_present(0, 1, 1));
  CHECK(p.value(1, 0, 2) == 6.0);
  CHECK(p.target_index() == 1);
}

TEST_CASE("load_panel: shuffled rows give the same panel as sorted rows") {
  const auto schema = two_feature_schema();
  std::vector<std::string> rows;
  for (int d = 1; d <= 9; ++d) {
    for (const char* e : {"x", "y", "z"}) {
      rows.push_back(std::string(e) + ",2021-01-0" + std::to_string(d) + "," + std::to_string(d * 3) + "," +
                     std::to_string(d * d));
    }
  }
  std::string sorted = "entity,date,vaccination,cases\n";
  for (const auto& r : rows) sorted += r + "\n";
  std::mt19937 rng(3);
  std::shuffle(rows.begin(), rows.end(), rng);
  std::string shuffled = "date,cases,entity,vaccination\n";
  for (const auto& r : rows) {
    const auto f = split_csv_line(r);
    shuffled += f[1] + "," + f[3] + "," + f[0] + "," + f[2] + "\n";
  }
  CHECK(panel_from(sorted, schema) == panel_from(shuffled, schema));
}

TEST_CASE("load_panel: gaps in the date axis become missing cells") {
  const auto schema = two_feature_schema();
  const auto p = panel_from(
      "entity,date,vaccination,cases\n"
      "a,2021-01-01,1,1\n"
      "a,2021-01-02,1,2\n"
      "a,2021-01-05,1,5\n",
      schema);
  CHECK(p.time_count() == 5);
  CHECK(p.missing_count() == 4);
}

TEST_CASE("load_panel errors name the problem") {
  const auto schema = two_feature_schema();
  auto message = [&](const std::string& csv) {
    try {
      panel_from(csv, schema);
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("entity,date,cases\na,2021-01-01,1\n").find("'vaccination'") != std::string::npos);
  CHECK(message("entity,date,vaccination,cases\na,2021-13-01,1,1\n").find("test.csv:2") != std::string::npos);
  CHECK(message("entity,date,vaccination,cases\na,2021-01-01,1,1\na,2021-01-02,x,1\n").find("test.csv:3") !=
        std::string::npos);
  CHECK(message("entity,date,vaccination,cases\na,2021-01-01,1,1\na,2021-01-01,1,1\n").find("duplicate") !=
        std::string::npos);
  CHECK(message("entity,date,vaccination,cases\na,2021-01-01,1\n").find("test.csv:2") != std::string::npos);
}

TEST_CASE("schema validation") {
  std::vector<FeatureSpec> none{{"x", FeatureRole::dynamic}};
  CHECK_THROWS_AS(validate_schema(none), ValidationError);
  std::vector<FeatureSpec> dup{{"x", FeatureRole::dynamic}, {"x", FeatureRole::target}};
  CHECK_THROWS_AS(validate_schema(dup), ValidationError);
  CHECK(parse_feature_role("known-future") == FeatureRole::known_future);
  CHECK_THROWS_AS(parse_feature_role("sometimes"), ValidationError);
}

TEST_CASE("panel round trip through CSV") {
  const auto schema = two_feature_schema();
  const auto p = panel_from(
      "entity,date,vaccination,cases\n"
      "a,2021-01-01,0.1,1e-300\n"
      "a,2021-01-02,,3.25\n",
      schema);
  std::ostringstream out;
  write_panel_csv(out, p);
  CHECK(panel_from(out.str(), schema) == p);
}

TEST_CASE("calendar features are integers derived from the date axis") {
  const auto p = series_panel({1, 2, 3});  // 2021-01-01 is a Friday
  const std::vector<CalendarField> fields{CalendarField::month, CalendarField::day, CalendarField::weekday};
  const auto q = add_calendar_features(p, fields);
  REQUIRE(q.feature_count() == 4);
  CHECK(q.features[1].role == FeatureRole::known_future);
  CHECK(q.value(0, 1, 0) == 1.0);
  CHECK(q.value(0, 2, 2) == 3.0);
  CHECK(q.value(0, 3, 0) == 4.0);
  CHECK(q.value(0, 3, 2) == 6.0);
}

TEST_CASE("type-7 quantiles") {
  CHECK(quantile_type7({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
  CHECK(quantile_type7({1, 2, 3, 4}, 0.75) == doctest::Approx(3.25));
  CHECK(quantile_type7({5}, 0.3) == 5.0);
  CHECK(quantile_type7({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
}

TEST_CASE("clipping bounds follow the IQR rule") {
  // Q1 = 10, Q3 = 20 on the smoothed series gives bounds [-65, 95].
  const double lower = 10 - 7.5 * 10, upper = 20 + 7.5 * 10;
  CHECK(lower == -65.0);
  CHECK(upper == 95.0);
  // Window 1 makes the smoothed series equal to the raw one.
  PreprocessConfig cfg;
  cfg.smoothing_window = 1;
  std::vector<double> v{10, 10, 20, 20, 10, 20, 10, 20, 100, 90};
  // Quartiles computed on the eight base values plus both probes.
  const double q1 = quantile_type7(v, 0.25), q3 = quantile_type7(v, 0.75);
  REQUIRE(q1 == 10.0);
  REQUIRE(q3 == 20.0);
  const auto r = clip_outliers(series_panel(v), cfg);
  CHECK_FALSE(r.panel.is_present(0, 0, 8));
  CHECK(r.panel.is_present(0, 0, 9));
  CHECK(r.records.at(0).clipped == 1);
  CHECK(r.records.at(0).lower == -65.0);
  CHECK(r.records.at(0).upper == 95.0);
}

TEST_CASE("clipping a constant series changes nothing") {
  const auto p = series_panel(std::vector<double>(30, 4.0));
  const auto r = clip_outliers(p, PreprocessConfig{});
  CHECK(r.panel == p);
  CHECK(r.records.at(0).clipped == 0);
}

TEST_CASE("clipping removes a 50-sigma spike and matches a brute-force pass") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(100.0, 1.0);
  std::vector<double> v(120);
  for (auto& x : v) x = n(rng);
  v[60] = 150.0;
  const auto p = series_panel(v);
  const auto r = clip_outliers(p, PreprocessConfig{});

  // Independent computation: 7-step averages, sorted-sample quartiles.
  std::vector<double> smooth;
  for (std::size_t i = 0; i + 7 <= v.size(); ++i) {
    double s = 0;
    for (std::size_t k = i; k < i + 7; ++k) s += v[k];
    smooth.push_back(s / 7);
  }
  std::sort(smooth.begin(), smooth.end());
  auto q = [&](double p) {
    const double h = (smooth.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(h);
    return smooth[lo] + (h - lo) * (smooth[lo + 1] - smooth[lo]);
  };
  const double iqr = q(0.75) - q(0.25);
  const double lo = q(0.25) - 7.5 * iqr, hi = q(0.75) + 7.5 * iqr;
  std::set<std::size_t> expected;
  for (std::size_t t = 0; t < v.size(); ++t) {
    if (v[t] < lo || v[t] > hi) expected.insert(t);
  }
  std::set<std::size_t> got;
  for (std::size_t t = 0; t < v.size(); ++t) {
    if (!r.panel.is_present(0, 0, t)) got.insert(t);
    else CHECK(r.panel.value(0, 0, t) == v[t]);
  }
  CHECK(got == expected);
  CHECK(got == std::set<std::size_t>{60});
}

TEST_CASE("interpolation fills interior gaps linearly and extends edges") {
  auto run = [](std::vector<double> v, std::vector<bool> mask) {
    const auto out = interpolate_missing(series_panel(v, mask));
    CHECK(out.missing_count() == 0);
    return std::vector<double>(out.series(0, 0).begin(), out.series(0, 0).end());
  };
  CHECK(run({1, 0, 3}, {true, false, true}) == std::vector<double>{1, 2, 3});
  CHECK(run({0, 4, 0, 0, 10, 0}, {false, true, false, false, true, false}) ==
        std::vector<double>{4, 4, 6, 8, 10, 10});
  const auto full = series_panel({1, 2, 3});
  CHECK(interpolate_missing(full) == full);
  CHECK_THROWS_AS(interpolate_missing(series_panel({0, 0}, {false, false})), ValidationError);
}

TEST_CASE("standardization centers, inverts, and is not idempotent") {
  const auto p = series_panel({1, 2, 3});
  const auto s = standardize(p);
  CHECK(s.stats.at("cases").mean == doctest::Approx(2.0));
  CHECK(s.stats.at("cases").stddev == doctest::Approx(std::sqrt(2.0 / 3.0)));
  double sum = 0;
  for (double v : s.panel.series(0, 0)) sum += v;
  CHECK(std::abs(sum) < 1e-12);

  const auto back = destandardize(s.panel, s.stats);
  for (std::size_t t = 0; t < 3; ++t) CHECK(std::abs(back.value(0, 0, t) - p.value(0, 0, t)) <= 1e-12 * std::abs(p.value(0, 0, t)));

  const auto twice = standardize(s.panel, s.stats);
  CHECK_FALSE(twice.panel == s.panel);

  // A shifted split standardized with training statistics keeps a nonzero mean.
  const auto shifted = standardize(series_panel({11, 12, 13}), s.stats);
  double mean = 0;
  for (double v : shifted.panel.series(0, 0)) mean += v / 3;
  CHECK(mean > 1.0);

  const auto flat = standardize(series_panel({5, 5, 5}));
  CHECK(flat.stats.at("cases").stddev == 1.0);
  CHECK(flat.panel.value(0, 0, 1) == 0.0);
}

TEST_CASE("stats sidecar round trip") {
  const auto s = standardize(series_panel({1, 2, 4})).stats;
  KeyValues kv;
  put_stats(kv, s);
  std::ostringstream out;
  write_key_values(out, kv, "stats");
  std::istringstream in(out.str());
  const auto back = get_stats(read_key_values(in, "stats.txt"));
  CHECK(back.at("cases").mean == s.at("cases").mean);
  CHECK(back.at("cases").stddev == s.at("cases").stddev);
}

TEST_CASE("chronological split sizes and ownership") {
  std::vector<double> v(100);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  const auto p = series_panel(v);
  const auto s = split_chronological(p, 71, 14, 14);
  CHECK(s.train.time_count() - s.train.owned_begin == 72);
  CHECK(s.validation.time_count() - s.validation.owned_begin == 14);
  CHECK(s.test.time_count() - s.test.owned_begin == 14);
  CHECK(s.validation.time_index[s.validation.owned_begin] == p.time_index[72]);
  CHECK(s.test.time_index[s.test.owned_begin] == p.time_index[86]);

  const auto empty_val = split_chronological(p, 71, 0, 14);
  CHECK(empty_val.validation.time_count() == empty_val.validation.owned_begin);
  CHECK_THROWS_AS(split_chronological(p, 90, 14, 14), ValidationError);
}

TEST_CASE("window anchors of a 30-step panel") {
  std::vector<double> v(30);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  const auto w = make_windows(series_panel(v), WindowSpec{14, 14, 1});
  // Brute force: anchors t with t >= L - 1 and t + tau_max <= T - 1.
  std::vector<std::size_t> expected;
  for (std::size_t t = 0; t < 30; ++t) {
    if (t >= 13 && t + 14 <= 29) expected.push_back(t);
  }
  REQUIRE(w.instances.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(w.instances[i].anchor == expected[i]);
  CHECK(expected == std::vector<std::size_t>{13, 14, 15});
  // Column l of X_t holds time t - (L - 1) + l; targets are t + 1 .. t + tau_max.
  for (const auto& inst : w.instances) {
    for (std::size_t l = 0; l < 14; ++l) CHECK(inst.input.past(0, l) == static_cast<double>(inst.anchor - 13 + l));
    for (std::size_t h = 0; h < 14; ++h) CHECK(inst.targets(0, h) == static_cast<double>(inst.anchor + 1 + h));
  }
  CHECK(make_windows(series_panel({1, 2}), WindowSpec{1, 1, 1}).instances.size() == 1);
}

TEST_CASE("static features are broadcast across the lookback; known-future rows cover the horizon") {
  std::vector<TimePoint> times;
  for (int t = 0; t < 20; ++t) times.push_back(day("2021-03-01") + std::chrono::days(t));
  TimeSeriesPanel p({"a", "b"}, times,
                    {{"age", FeatureRole::static_input}, {"cases", FeatureRole::target}, {"dow", FeatureRole::known_future}});
  for (std::size_t e = 0; e < 2; ++e) {
    for (std::size_t t = 0; t < 20; ++t) {
      p.set(e, 0, t, 0.25);
      p.set(e, 1, t, static_cast<double>(100 * e + t));
      p.set(e, 2, t, static_cast<double>(t % 7));
    }
  }
  const auto w = make_windows(p, WindowSpec{14, 3, 1});
  // Analytic count: anchors 13..16 for each entity.
  CHECK(w.instances.size() == 2 * 4);
  CHECK(w.input_features == std::vector<std::string>{"age", "cases"});
  CHECK(w.known_future_features == std::vector<std::string>{"dow"});
  for (const auto& inst : w.instances) {
    for (std::size_t l = 0; l < 14; ++l) CHECK(inst.input.past(0, l) == 0.25);
    for (std::size_t h = 0; h < 3; ++h) CHECK(inst.input.known_future(0, h) == static_cast<double>((inst.anchor + 1 + h) % 7));
  }
}

TEST_CASE("split windows stay inside their split and owned ranges partition the axis") {
  std::vector<double> v(60);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  const auto p = series_panel(v);
  const WindowSpec spec{5, 3, 1};
  const auto s = split_chronological(p, 39, 10, 10);
  std::set<std::size_t> anchors;
  std::size_t owned_total = 0, windows_total = 0;
  for (const auto* part : {&s.train, &s.validation, &s.test}) {
    owned_total += part->time_count() - part->owned_begin;
    const auto w = make_windows(*part, spec);
    for (const auto& inst : w.instances) {
      CHECK(inst.anchor + 1 >= part->owned_begin);
      CHECK(inst.anchor + 3 < part->time_count());
      CHECK(anchors.insert(inst.anchor).second);
    }
    windows_total += w.instances.size();
  }
  CHECK(owned_total == 60);
  // Anchors whose horizon straddles a boundary belong to no split:
  // tau_max - 1 of them per boundary.
  const auto whole = make_windows(p, spec);
  CHECK(whole.instances.size() == windows_total + 2 * (3 - 1));
}
