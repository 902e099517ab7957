#include "tsinterp/windows.hpp"

#include "tsinterp/errors.hpp"

namespace tsinterp {

void WindowSpec::validate() const {
  if (lookback < 1 || horizon < 1 || outputs < 1) {
    throw ValidationError("window lookback, horizon and output count must all be at least 1");
  }
}

WindowSet make_windows(const TimeSeriesPanel& panel, const WindowSpec& spec) {
  spec.validate();
  if (panel.missing_count() != 0) {
    throw ValidationError("make_windows needs a fully preprocessed panel (" +
                          std::to_string(panel.missing_count()) + " missing cells)");
  }
  if (spec.outputs != 1) {
    throw ValidationError("panel windows have exactly one target, got output count " +
                          std::to_string(spec.outputs));
  }
  WindowSet set;
  set.step_seconds = panel.step_seconds();
  std::vector<std::size_t> past_rows, future_rows;
  for (std::size_t f = 0; f < panel.feature_count(); ++f) {
    if (panel.features[f].role == FeatureRole::known_future) {
      future_rows.push_back(f);
      set.known_future_features.push_back(panel.features[f].name);
    } else {
      past_rows.push_back(f);
      set.input_features.push_back(panel.features[f].name);
    }
  }
  const std::size_t target = panel.target_index();
  const std::size_t T = panel.time_count();
  const std::size_t L = spec.lookback;
  const std::size_t H = spec.horizon;
  // Candidate anchors are those whose first target step is owned by the panel.
  const std::size_t first_candidate = panel.owned_begin > 0 ? panel.owned_begin - 1 : 0;

  for (std::size_t e = 0; e < panel.entity_count(); ++e) {
    for (std::size_t t = first_candidate; t < T; ++t) {
      if (t + 1 < L || t + H >= T) {
        ++set.skipped;
        continue;
      }
      WindowedInstance inst;
      inst.entity = panel.entities[e];
      inst.anchor = t;
      inst.anchor_time = panel.time_index[t];
      inst.input.past = Grid(past_rows.size(), L);
      for (std::size_t j = 0; j < past_rows.size(); ++j) {
        for (std::size_t l = 0; l < L; ++l) {
          inst.input.past(j, l) = panel.value(e, past_rows[j], t + 1 + l - L);
        }
      }
      inst.input.known_future = Grid(future_rows.size(), H);
      for (std::size_t j = 0; j < future_rows.size(); ++j) {
        for (std::size_t h = 0; h < H; ++h) {
          inst.input.known_future(j, h) = panel.value(e, future_rows[j], t + 1 + h);
        }
      }
      inst.targets = Grid(1, H);
      for (std::size_t h = 0; h < H; ++h) inst.targets(0, h) = panel.value(e, target, t + 1 + h);
      set.instances.push_back(std::move(inst));
    }
  }
  return set;
}

}  // namespace tsinterp
