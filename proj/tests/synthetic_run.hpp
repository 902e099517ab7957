#pragma once

// End-to-end group-sensitivity evaluation on a synthetic task: standardize
// with training statistics, fit the ridge model, attribute the test
// windows, roll up to weeks and compare with the planted shares.

#include <functional>
#include <string>
#include <vector>

#include "tsinterp/attribution.hpp"
#include "tsinterp/groundtruth.hpp"
#include "tsinterp/linear_model.hpp"
#include "tsinterp/preprocess.hpp"
#include "tsinterp/synthetic.hpp"
#include "tsinterp/windows.hpp"

namespace testing {

struct SyntheticRun {
  tsinterp::SyntheticTruthTask task;
  tsinterp::SplitPanels splits;  // standardized
  tsinterp::WindowSet train;
  tsinterp::WindowSet test;
  std::vector<tsinterp::FeatureBounds> bounds;
};

inline SyntheticRun prepare_synthetic(const tsinterp::SyntheticConfig& cfg, std::size_t test_len) {
  using namespace tsinterp;
  SyntheticRun run;
  run.task = generate_synthetic_truth(cfg);
  const std::size_t T = cfg.time_steps;
  const auto raw = split_chronological(run.task.panel, T - test_len - 1, 0, test_len);
  const auto train_std = standardize(raw.train);
  run.splits.train = train_std.panel;
  run.splits.test = standardize(raw.test, train_std.stats).panel;
  const WindowSpec spec{cfg.lookback, cfg.horizon, 1};
  run.train = make_windows(run.splits.train, spec);
  run.test = make_windows(run.splits.test, spec);
  run.bounds = feature_bounds(run.splits.train, run.train.input_features);
  return run;
}

using Attributor = std::function<tsinterp::AttributionTensor(const tsinterp::ForecastOracle&,
                                                             const tsinterp::ModelInput&, std::size_t)>;

inline tsinterp::SensitivityComparison evaluate_synthetic(const SyntheticRun& run, const tsinterp::ForecastOracle& model,
                                                          const std::string& method, const Attributor& attribute) {
  using namespace tsinterp;
  const auto rows = group_rows(run.test.input_features, run.task.group_features);
  std::vector<GroupScoreRecord> records;
  for (std::size_t i = 0; i < run.test.instances.size(); ++i) {
    const auto& inst = run.test.instances[i];
    const auto phi = attribute(model, inst.input, i);
    records.push_back({inst.anchor_time, aggregate_group_attribution(phi, rows)});
  }
  const auto periods = rollup_to_periods(records, run.test.step_seconds, PeriodCalendar::weekly(run.task.truth.periods));
  return compare_to_truth(method, periods, run.task.truth);
}

}  // namespace testing
