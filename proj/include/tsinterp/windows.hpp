#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tsinterp/grid.hpp"
#include "tsinterp/panel.hpp"

namespace tsinterp {

struct WindowSpec {
  std::size_t lookback = 14;
  std::size_t horizon = 14;
  std::size_t outputs = 1;

  void validate() const;
  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

/// What a forecaster consumes: the J x L lookback block (column l is time
/// t - (L-1) + l) and the J_known x tau_max known-future block.
struct ModelInput {
  Grid past;
  Grid known_future;

  friend bool operator==(const ModelInput&, const ModelInput&) = default;
};

struct WindowedInstance {
  std::string entity;
  std::size_t anchor = 0;  // time index of t within the source panel
  TimePoint anchor_time{};
  ModelInput input;
  Grid targets;  // O x tau_max, target values at t+1 .. t+tau_max
};

struct WindowSet {
  std::vector<WindowedInstance> instances;
  std::vector<std::string> input_features;         // J rows of ModelInput::past
  std::vector<std::string> known_future_features;  // rows of ModelInput::known_future
  std::size_t skipped = 0;
  std::int64_t step_seconds = 0;
};

/// One instance per (entity, anchor) whose lookback fits in the panel and
/// whose targets lie in [owned_begin, T). Static, dynamic and target
/// features (schema order) form the lookback rows; known-future features
/// are supplied for the horizon. Anchors that lack history or future
/// inside the owned range are counted in `skipped`.
WindowSet make_windows(const TimeSeriesPanel& panel, const WindowSpec& spec);

}  // namespace tsinterp
