#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "faithfulness_oracle.hpp"
#include "test_support.hpp"
#include "tsinterp/errors.hpp"
#include "tsinterp/faithfulness.hpp"

using namespace tsinterp;
using namespace testing;

namespace {

AttributionTensor tensor_from(const ModelShape& s, std::vector<double> values) {
  AttributionTensor phi(tensor_shape(s), "test");
  phi.values = std::move(values);
  return phi;
}

std::vector<std::size_t> order_of(const RelevanceRanking& r, std::size_t o = 0, std::size_t tau = 0) {
  const auto c = r.cells({o, tau});
  return {c.begin(), c.end()};
}

}  // namespace

TEST_CASE("ranking by absolute relevance with the documented tie rule") {
  CHECK(order_of(rank_cells(tensor_from({1, 3, 1, 1, 0}, {3, 1, 2}))) == std::vector<std::size_t>{0, 2, 1});
  CHECK(order_of(rank_cells(tensor_from({1, 2, 1, 1, 0}, {-5, 4}))) == std::vector<std::size_t>{0, 1});
  // All equal: feature ascending, then the most recent position first.
  CHECK(order_of(rank_cells(tensor_from({2, 3, 1, 1, 0}, std::vector<double>(6, 1.0)))) ==
        std::vector<std::size_t>{2, 1, 0, 5, 4, 3});
}

TEST_CASE("ranking is a permutation and consistent under permuted scores") {
  const ModelShape s{3, 4, 2, 1, 0};
  Rng rng(1);
  std::uniform_int_distribution<int> small(-3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(s.output_size() * s.cells());
    for (auto& x : v) x = small(rng);  // many ties
    const auto phi = tensor_from(s, v);
    const auto r = rank_cells(phi);
    for (std::size_t h = 0; h < 2; ++h) {
      auto ord = order_of(r, 0, h);
      for (std::size_t i = 0; i + 1 < ord.size(); ++i) {
        const double a = std::abs(phi.slice(0, h)[ord[i]]), b = std::abs(phi.slice(0, h)[ord[i + 1]]);
        CHECK(a >= b);
        if (a == b) {
          const bool j_less = ord[i] / 4 < ord[i + 1] / 4;
          const bool same_j_later = ord[i] / 4 == ord[i + 1] / 4 && ord[i] % 4 > ord[i + 1] % 4;
          CHECK((j_less || same_j_later));
        }
      }
      std::sort(ord.begin(), ord.end());
      std::vector<std::size_t> all(12);
      std::iota(all.begin(), all.end(), std::size_t{0});
      CHECK(ord == all);
    }
  }
}

TEST_CASE("selected cell counts round up and stay within range") {
  MaskSpec m;
  m.k_percent = 5;
  CHECK(m.selected_count(16) == 1);
  CHECK(m.selected_count(40) == 2);
  CHECK(m.selected_count(41) == 3);
  m.k_percent = 10;
  CHECK(m.selected_count(30) == 3);  // exactly 3, not 4
  m.k_percent = 100;
  CHECK(m.selected_count(7) == 7);
  m.k_percent = 0;
  CHECK_THROWS_AS(m.validate(), ValidationError);
}

TEST_CASE("mask_instance") {
  const ModelShape s{2, 2, 1, 1, 0};
  Rng rng(2);
  const auto in = random_input(s, rng);
  // Ranking puts cells (0, 1) and (1, 0) on top.
  const auto r = rank_cells(tensor_from(s, {0.1, 0.9, 0.8, 0.2}));

  MaskSpec half;
  half.k_percent = 50;
  const auto masked = mask_instance(in, r, {0, 0}, half);
  CHECK(masked.past(0, 0) == in.past(0, 0));
  CHECK(masked.past(0, 1) == 0.0);
  CHECK(masked.past(1, 0) == 0.0);
  CHECK(masked.past(1, 1) == in.past(1, 1));

  MaskSpec all;
  all.k_percent = 100;
  all.baseline = BaselineGenerator::constant(7.0);
  CHECK(mask_instance(in, r, {0, 0}, all).past == Grid(2, 2, 7.0));

  MaskSpec keep_one;
  keep_one.k_percent = 1;
  keep_one.mode = MaskMode::mask_complement;
  const auto kept = mask_instance(in, r, {0, 0}, keep_one);
  CHECK(kept.past(0, 1) == in.past(0, 1));
  CHECK(kept.past(0, 0) == 0.0);
  CHECK(kept.past(1, 0) == 0.0);
  CHECK(kept.past(1, 1) == 0.0);

  MaskSpec seeded;
  seeded.baseline = BaselineGenerator::gaussian();
  seeded.seed = 5;
  seeded.k_percent = 50;
  CHECK(mask_instance(in, r, {0, 0}, seeded) == mask_instance(in, r, {0, 0}, seeded));
  CHECK(mask_instance(in, r, {0, 0}, seeded).known_future == in.known_future);
}

TEST_CASE("comprehensiveness and sufficiency on a linear model follow the affine closed form") {
  const ModelShape s{2, 3, 2, 1, 0};
  Rng rng(3);
  const auto m = random_linear(s, rng);
  const auto in = random_input(s, rng);
  const auto phi = feature_ablation(m, in, BaselineGenerator::zero());
  const auto r = rank_cells(phi);
  for (double k : {10.0, 34.0, 50.0}) {
    const auto comp = comprehensiveness(m, in, r, k);
    const auto suff = sufficiency(m, in, r, k);
    for (std::size_t h = 0; h < 2; ++h) {
      const auto top = brute_top_cells(phi, 0, h, k);
      double in_s = 0, out_s = 0;
      for (std::size_t c = 0; c < 6; ++c) {
        const double wx = m.weight({0, h}, c / 3, c % 3) * in.past[c];
        (top[c] ? in_s : out_s) += wx;
      }
      CHECK(comp.absolute(0, h) == doctest::Approx(std::abs(in_s)).epsilon(1e-12));
      CHECK(suff.absolute(0, h) == doctest::Approx(std::abs(out_s)).epsilon(1e-12));
      CHECK(comp.squared(0, h) == doctest::Approx(in_s * in_s).epsilon(1e-12));
    }
  }
}

TEST_CASE("limit cases of the masking curves") {
  const ModelShape s{2, 3, 2, 1, 0};
  Rng rng(4);
  const auto m = random_mlp(s, 5, rng);
  const auto in = random_input(s, rng);
  const auto phi = feature_ablation(m, in, BaselineGenerator::zero());
  const auto r = rank_cells(phi);
  // A tiny k still masks exactly the top cell: single-cell ablation.
  const auto comp = comprehensiveness(m, in, r, 0.5);
  for (std::size_t h = 0; h < 2; ++h) {
    const std::size_t top = r.cells({0, h})[0];
    CHECK(comp.absolute(0, h) == brute_force_relevance(m, in, top / 3, top % 3, 0.0)(0, h));
  }
  const auto full_suff = sufficiency(m, in, r, 100);
  CHECK(full_suff.absolute == Grid(1, 2));
  const auto full_comp = comprehensiveness(m, in, r, 100);
  const auto fx = predict_one(m, in);
  const auto f0 = predict_one(m, ModelInput{Grid(2, 3), in.known_future});
  for (std::size_t h = 0; h < 2; ++h) CHECK(full_comp.absolute(0, h) == std::abs(fx(0, h) - f0(0, h)));
}

TEST_CASE("AOPCR of a single instance, bin and step equals its comprehensiveness") {
  const ModelShape s{2, 2, 1, 1, 0};
  Rng rng(5);
  const auto m = random_mlp(s, 4, rng);
  const std::vector<ModelInput> in{random_input(s, rng)};
  const std::vector<AttributionTensor> phi{feature_ablation(m, in[0], BaselineGenerator::zero())};
  AopcrConfig cfg;
  cfg.k_bins = {25};
  const auto a = aopcr(m, in, phi, cfg);
  CHECK(a.mean.comprehensiveness_mae == comprehensiveness(m, in[0], rank_cells(phi[0]), 25).absolute(0, 0));
  CHECK(a.per_instance.size() == 1);
}

TEST_CASE("AOPCR equals direct enumeration") {
  Rng rng(6);
  for (const ModelShape s : {ModelShape{2, 2, 1, 1, 0}, ModelShape{4, 4, 3, 2, 0}, ModelShape{3, 5, 2, 1, 1}}) {
    const auto lin = random_linear(s, rng);
    const auto mlp = random_mlp(s, 6, rng);
    for (const ForecastOracle* f : {static_cast<const ForecastOracle*>(&lin), static_cast<const ForecastOracle*>(&mlp)}) {
      std::vector<ModelInput> inputs;
      std::vector<AttributionTensor> phis;
      for (int i = 0; i < 4; ++i) {
        inputs.push_back(random_input(s, rng));
        phis.push_back(integrated_gradients(*f, inputs.back(), Grid(s.features, s.lookback), {8}));
      }
      for (const auto& bins : {std::vector<double>{5}, std::vector<double>{5, 10}, std::vector<double>{12.5, 50}}) {
        for (const auto& base : {BaselineGenerator::zero(), BaselineGenerator::gaussian()}) {
          AopcrConfig cfg;
          cfg.k_bins = bins;
          cfg.baseline = base;
          cfg.seed = 77;
          const auto got = aopcr(*f, inputs, phis, cfg);
          BruteAopcr mean;
          for (std::size_t i = 0; i < inputs.size(); ++i) {
            const auto b = base.draw_grid(s.features, s.lookback, derive_seed(77, "mask", i));
            const auto want = brute_aopcr(*f, inputs[i], phis[i], bins, b);
            CHECK(std::abs(got.per_instance[i].comprehensiveness_mae - want.comp_mae) <= 1e-12);
            CHECK(std::abs(got.per_instance[i].comprehensiveness_mse - want.comp_mse) <= 1e-12);
            CHECK(std::abs(got.per_instance[i].sufficiency_mae - want.suff_mae) <= 1e-12);
            CHECK(std::abs(got.per_instance[i].sufficiency_mse - want.suff_mse) <= 1e-12);
            mean.comp_mae += want.comp_mae / inputs.size();
          }
          CHECK(std::abs(got.mean.comprehensiveness_mae - mean.comp_mae) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("constant model has zero faithfulness in every mode") {
  const ModelShape s{2, 3, 2, 1, 0};
  ConstantOracle c(s, -1.0);
  Rng rng(7);
  std::vector<ModelInput> inputs;
  std::vector<AttributionTensor> phis;
  for (int i = 0; i < 3; ++i) {
    inputs.push_back(random_input(s, rng));
    phis.push_back(feature_ablation(c, inputs.back(), BaselineGenerator::zero()));
  }
  AopcrConfig cfg;
  cfg.baseline = BaselineGenerator::gaussian();
  const auto a = aopcr(c, inputs, phis, cfg);
  CHECK(a.mean.comprehensiveness_mae == 0.0);
  CHECK(a.mean.comprehensiveness_mse == 0.0);
  CHECK(a.mean.sufficiency_mae == 0.0);
  CHECK(a.mean.sufficiency_mse == 0.0);
}

TEST_CASE("faithfulness CSV layout") {
  FaithfulnessEntry e{"feature_ablation", {5, 10}, {}};
  e.result.mean = {0.5, 0.25, 0.125, 1.0};
  e.result.per_instance = {e.result.mean};
  const std::vector<FaithfulnessEntry> entries{e};
  std::ostringstream out;
  write_faithfulness_csv(out, entries);
  CHECK(out.str() ==
        "method,metric,aggregation,k_bins,value\n"
        "feature_ablation,comprehensiveness,MAE,5;10,0.5\n"
        "feature_ablation,comprehensiveness,MSE,5;10,0.25\n"
        "feature_ablation,sufficiency,MAE,5;10,0.125\n"
        "feature_ablation,sufficiency,MSE,5;10,1\n");
  std::ostringstream per;
  const std::vector<std::string> labels{"a@2021-01-01"};
  write_faithfulness_instances_csv(per, entries, labels);
  CHECK(per.str().find("feature_ablation,a@2021-01-01,sufficiency,MSE,1\n") != std::string::npos);
}
