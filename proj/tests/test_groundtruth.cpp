#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "synthetic_run.hpp"
#include "test_support.hpp"
#include "tsinterp/errors.hpp"
#include "tsinterp/groundtruth.hpp"
#include "tsinterp/metrics.hpp"
#include "tsinterp/synthetic.hpp"

using namespace tsinterp;
using namespace testing;

namespace {

TimePoint day(const char* text) {
  TimePoint t;
  REQUIRE(parse_time(text, t));
  return t;
}

std::vector<double> row_of(const Grid& g, std::size_t r) {
  const auto s = g.row(r);
  return {s.begin(), s.end()};
}

}  // namespace

TEST_CASE("age-group case counts normalize to the published shares and ranks") {
  const std::vector<double> counts{99654, 404420, 686648, 539684, 393727, 443701, 141490, 83086};
  const std::vector<double> published{3.569, 14.48, 24.59, 19.32, 14.10, 15.89, 5.067, 2.975};
  const auto shares = normalize_shares(counts);
  for (std::size_t g = 0; g < 8; ++g) CHECK(std::abs(100.0 * shares[g] - published[g]) < 0.01);
  CHECK(descending_ranks(shares) == std::vector<std::size_t>{7, 4, 1, 2, 5, 3, 6, 8});
  CHECK(std::accumulate(shares.begin(), shares.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("normalize_shares") {
  for (double s : normalize_shares(std::vector<double>(8, 3.0))) CHECK(s == 0.125);
  CHECK(normalize_shares(std::vector<double>{0, 5, 0}) == std::vector<double>{0, 1, 0});

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  Grid g(5, 4);
  for (auto& v : g.flat()) v = u(rng);
  const auto a = normalize_shares(g);
  Grid scaled = g;
  for (std::size_t c = 0; c < 4; ++c) scaled(2, c) *= 123.0;
  const auto b = normalize_shares(scaled);
  for (std::size_t r = 0; r < 5; ++r) {
    const auto row = a.row(r);
    CHECK(std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) <= 1e-9);
    for (std::size_t c = 0; c < 4; ++c) CHECK(a(r, c) == doctest::Approx(b(r, c)).epsilon(1e-14));
  }
  Grid zero(2, 3, 1.0);
  zero(1, 0) = zero(1, 1) = zero(1, 2) = 0.0;
  const std::vector<std::string> labels{"2021-01-04", "2021-01-11"};
  try {
    normalize_shares(zero, labels);
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("2021-01-11") != std::string::npos);
  }
}

TEST_CASE("lookback aggregation of group attributions") {
  AttributionTensor phi(TensorShape{1, 2, 3, 2}, "x");
  const std::vector<std::string> features{"a", "b", "c"};
  const std::vector<std::string> groups{"c", "a"};
  const auto rows = group_rows(features, groups);
  CHECK(rows == std::vector<std::size_t>{2, 0});
  CHECK(aggregate_group_attribution(phi, rows) == Grid(2, 2));
  phi.at(0, 1, 2, 0) = -0.25;
  auto g = aggregate_group_attribution(phi, rows);
  CHECK(g(1, 0) == 0.25);
  CHECK(g(0, 0) == 0.0);
  phi.at(0, 0, 0, 0) = 0.3;
  phi.at(0, 0, 0, 1) = -0.5;
  g = aggregate_group_attribution(phi, rows);
  CHECK(g(0, 1) == doctest::Approx(0.8));
  const std::vector<std::string> unknown{"a", "zeta"};
  try {
    group_rows(features, unknown);
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("zeta") != std::string::npos);
  }
}

TEST_CASE("weekly rollup by day membership") {
  const auto calendar = PeriodCalendar::weekly({day("2021-01-04"), day("2021-01-11"), day("2021-01-18")});
  CHECK(calendar.find(day("2021-01-10")) == 0u);
  CHECK(calendar.find(day("2021-01-11")) == 1u);
  CHECK_FALSE(calendar.find(day("2021-01-25")).has_value());
  CHECK_FALSE(calendar.find(day("2021-01-03")).has_value());

  SUBCASE("a 14-day horizon anchored on a Wednesday spans three weeks") {
    Grid scores(14, 1);
    for (std::size_t h = 0; h < 14; ++h) scores(h, 0) = std::pow(2.0, static_cast<double>(h));
    const std::vector<GroupScoreRecord> recs{{day("2021-01-06"), scores}};
    const auto p = rollup_to_periods(recs, 86400, calendar);
    REQUIRE(p.periods.size() == 3);
    // Thu 7 .. Sun 10: tau 0-3; Mon 11 .. Sun 17: tau 4-10; Mon 18 .. Wed 20: tau 11-13.
    CHECK(p.sums(0, 0) == 1 + 2 + 4 + 8);
    CHECK(p.sums(1, 0) == 16 + 32 + 64 + 128 + 256 + 512 + 1024);
    CHECK(p.sums(2, 0) == 2048 + 4096 + 8192);
  }
  SUBCASE("predictions inside one week give one row") {
    Grid scores(2, 2, 1.0);
    const std::vector<GroupScoreRecord> recs{{day("2021-01-11"), scores}, {day("2021-01-12"), scores}};
    const auto p = rollup_to_periods(recs, 86400, calendar);
    CHECK(p.periods == std::vector<TimePoint>{day("2021-01-11")});
    CHECK(p.sums(0, 1) == 4.0);
  }
  SUBCASE("duplicating an entity leaves shares unchanged") {
    Grid a(3, 2);
    a(0, 0) = 1;
    a(1, 1) = 2;
    a(2, 0) = 5;
    const std::vector<GroupScoreRecord> one{{day("2021-01-05"), a}};
    const std::vector<GroupScoreRecord> two{{day("2021-01-05"), a}, {day("2021-01-05"), a}};
    CHECK(rollup_to_periods(one, 86400, calendar).shares() == rollup_to_periods(two, 86400, calendar).shares());
  }
  SUBCASE("dates outside the calendar are errors naming the date") {
    const std::vector<GroupScoreRecord> recs{{day("2021-01-23"), Grid(3, 1, 1.0)}};
    try {
      rollup_to_periods(recs, 86400, calendar);
      FAIL("expected an error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("2021-01-25") != std::string::npos);
    }
  }
}

TEST_CASE("ground-truth CSV round trip and validation") {
  std::istringstream in(
      "week_start_date,group,cases\n"
      "2021-01-11,young,5\n"
      "2021-01-04,young,1\n"
      "2021-01-04,old,3\n"
      "2021-01-11,old,5\n");
  const auto truth = read_group_truth(in, "truth.csv");
  CHECK(truth.groups == std::vector<std::string>{"young", "old"});
  CHECK(truth.periods == std::vector<TimePoint>{day("2021-01-04"), day("2021-01-11")});
  CHECK(truth.counts(0, 1) == 3.0);
  CHECK(row_of(truth.shares(), 0) == std::vector<double>{0.25, 0.75});
  std::ostringstream out;
  write_group_truth(out, truth);
  std::istringstream back(out.str());
  const auto again = read_group_truth(back, "again.csv");
  CHECK(again.counts == truth.counts);

  std::istringstream missing("week_start_date,group,cases\n2021-01-04,a,1\n2021-01-04,b,1\n2021-01-11,a,1\n");
  CHECK_THROWS_AS(read_group_truth(missing, "m.csv"), ValidationError);
  std::istringstream negative("week_start_date,group,cases\n2021-01-04,a,-1\n");
  CHECK_THROWS_AS(read_group_truth(negative, "n.csv"), ValidationError);
  std::istringstream nocol("week,group,cases\n");
  CHECK_THROWS_AS(read_group_truth(nocol, "c.csv"), ValidationError);
}

TEST_CASE("regression metrics") {
  const std::vector<double> t{1, 2, 3, 4};
  CHECK(mae(t, t) == 0.0);
  CHECK(rmse(t, t) == 0.0);
  const std::vector<double> shifted{1.5, 2.5, 3.5, 4.5};
  CHECK(mae(shifted, t) == doctest::Approx(0.5));
  CHECK(rmse(shifted, t) == doctest::Approx(0.5));
  const std::vector<double> p2{0.01, -0.03}, z2{0, 0};
  CHECK(mae(p2, z2) == doctest::Approx(0.02));
  CHECK(rmse(p2, z2) == doctest::Approx(std::sqrt(0.0005)));
  CHECK(std::abs(rmse(p2, z2) - 0.02236) < 1e-5);
  CHECK_THROWS_AS(mae(t, p2), ValidationError);

  CHECK(rmsle(t, t) == 0.0);
  const std::vector<double> e1{std::exp(1.0) - 1.0}, zero{0.0};
  CHECK(rmsle(e1, zero) == doctest::Approx(1.0));
  const std::vector<double> a{0, 3}, b{0, 1};
  CHECK(rmsle(a, b) == doctest::Approx(std::log(2.0) / std::sqrt(2.0)));
  CHECK(std::abs(rmsle(a, b) - 0.4901) < 1e-4);
  const std::vector<double> neg{-5.0};
  CHECK(rmsle(neg, zero) == 0.0);

  CHECK(r2_score(t, t) == 1.0);
  const std::vector<double> mean(4, 2.5);
  CHECK(r2_score(mean, t) == doctest::Approx(0.0));
  const std::vector<double> bad{4, 3, 2, 1};
  CHECK(r2_score(bad, t) < 0.0);
  CHECK_THROWS_AS(r2_score(t, mean), ValidationError);
}

TEST_CASE("ndcg") {
  const std::vector<double> rel{3, 2, 1};
  CHECK(ndcg(rel, rel) == doctest::Approx(1.0));
  const std::vector<double> reversed{1, 2, 3};
  const double dcg = 1 + 2 / std::log2(3.0) + 3 / 2.0;
  const double idcg = 3 + 2 / std::log2(3.0) + 1 / 2.0;
  CHECK(ndcg(rel, reversed) == doctest::Approx(dcg / idcg).epsilon(1e-14));
  CHECK(std::abs(ndcg(rel, reversed) - 0.7900) < 1e-4);
  const std::vector<double> one{4}, any{-1};
  CHECK(ndcg(one, any) == 1.0);
  const std::vector<double> zeros{0, 0};
  CHECK_THROWS_AS(ndcg(zeros, rel.data() ? std::vector<double>{1, 2} : zeros), ValidationError);
}

TEST_CASE("metric properties on random inputs") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 3.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> p(1 + i % 17), t(p.size());
    for (auto& v : p) v = n(rng);
    for (auto& v : t) v = n(rng);
    CHECK(mae(p, t) <= rmse(p, t) + 1e-15);
  }
  for (int i = 0; i < 100; ++i) {
    std::vector<double> rel(8), score(8), transformed(8);
    for (auto& v : rel) v = u(rng);
    for (std::size_t k = 0; k < 8; ++k) {
      score[k] = n(rng);
      transformed[k] = std::exp(2.0 * score[k]) + 5.0;
    }
    const double a = ndcg(rel, score);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0 + 1e-15);
    CHECK(a == ndcg(rel, transformed));
  }
}

TEST_CASE("feature importance percentages") {
  AttributionTensor a(TensorShape{1, 1, 2, 2}, "x");
  a.values = {1, 1, -2, 0};
  const std::vector<AttributionTensor> v{a, a};
  const auto imp = feature_importance(v);
  CHECK(imp[0] == doctest::Approx(50.0));
  CHECK(imp[1] == doctest::Approx(50.0));
}

TEST_CASE("synthetic task generation") {
  SyntheticConfig cfg;
  cfg.weights = {0.6, 0.0, 0.4};
  cfg.lookback = 5;
  cfg.horizon = 3;
  cfg.time_steps = 40;
  cfg.entities = 2;
  const auto a = generate_synthetic_truth(cfg);
  const auto b = generate_synthetic_truth(cfg);
  CHECK(a.panel == b.panel);
  CHECK(a.planted_shares == std::vector<double>{0.6, 0.0, 0.4});
  CHECK(a.truth.periods.front() == day("2021-01-04"));
  // The target is exactly the planted function of the lagged groups.
  for (std::size_t e = 0; e < 2; ++e)
    for (std::size_t t = 5; t < 40; ++t) {
      double y = 0;
      for (std::size_t g = 0; g < 3; ++g) y += cfg.weights[g] * a.panel.value(e, g, t - 5);
      CHECK(a.panel.value(e, 3, t) == doctest::Approx(y).epsilon(1e-15));
    }
  cfg.seed = 8;
  CHECK_FALSE(generate_synthetic_truth(cfg).panel == a.panel);
  cfg.horizon = 6;
  CHECK_THROWS_AS(generate_synthetic_truth(cfg), ValidationError);
}

TEST_CASE("synthetic shares are recovered by a fitted linear oracle") {
  SyntheticConfig cfg;
  cfg.weights = {0.05, 0.3, 0.0, 0.25, 0.4};
  cfg.amplitudes = {1.0, 1.0, 2.0, 0.5, 1.0};
  cfg.lookback = 7;
  cfg.horizon = 7;
  cfg.entities = 4;
  cfg.time_steps = 160;
  const auto run = prepare_synthetic(cfg, 28);
  const auto fit = fit_linear(run.train.instances, 1e-8);
  const auto cmp = evaluate_synthetic(run, fit.model, "FA", [](const ForecastOracle& m, const ModelInput& x, std::size_t) {
    return feature_ablation(m, x, BaselineGenerator::zero());
  });
  std::vector<double> planted{0.05 * 1.0, 0.3, 0.0, 0.25 * 0.5, 0.4};
  const auto shares = normalize_shares(planted);
  for (std::size_t r = 0; r < cmp.periods.size(); ++r)
    for (std::size_t g = 0; g < 5; ++g) CHECK(std::abs(cmp.predicted(r, g) - shares[g]) < 1e-3);
  CHECK(cmp.mae < 1e-3);
  CHECK(cmp.ndcg > 0.99);

  // With noise the zero-weight group stays near the floor set by the
  // attribution spread onto the target's own history.
  cfg.noise = 0.1;
  const auto noisy = prepare_synthetic(cfg, 28);
  const auto fit2 = fit_linear(noisy.train.instances, 1e-6);
  const auto cmp2 = evaluate_synthetic(noisy, fit2.model, "FA", [](const ForecastOracle& m, const ModelInput& x, std::size_t) {
    return feature_ablation(m, x, BaselineGenerator::zero());
  });
  for (std::size_t r = 0; r < cmp2.periods.size(); ++r) CHECK(cmp2.predicted(r, 2) < 0.05);
}
