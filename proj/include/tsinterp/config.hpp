#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tsinterp/attribution.hpp"
#include "tsinterp/mlp_model.hpp"
#include "tsinterp/panel.hpp"
#include "tsinterp/preprocess.hpp"
#include "tsinterp/windows.hpp"

namespace tsinterp {

inline constexpr const char* kEngineVersion = "0.1.0";

/// Everything one pipeline run needs, read from an INI file with the
/// sections data, window, preprocess, split, model, interpret, evaluate, run.
/// Relative paths are resolved against the config file's directory.
struct RunConfig {
  // [data]
  std::filesystem::path input;
  std::string entity_column = "entity";
  std::string date_column = "date";
  std::vector<FeatureSpec> features;
  std::vector<CalendarField> calendar;
  std::filesystem::path truth;
  std::vector<std::string> groups;

  // [window]
  WindowSpec window;

  // [preprocess]
  bool clip = true;
  PreprocessConfig preprocess;

  // [split]
  std::string train_end;  // date or 0-based step index
  std::size_t val_len = 0;
  std::size_t test_len = 0;

  // [model]
  std::string model_kind = "linear";  // linear | mlp | external
  double ridge = 1e-3;
  MlpHyperparams mlp;
  std::string endpoint;
  std::filesystem::path model_path;  // optional saved model to use instead of fitting

  // [interpret]
  std::vector<Method> methods;
  std::string explain_split = "test";
  std::size_t max_instances = 0;  // 0 means every window of the split
  Granularity granularity = Granularity::cell;
  std::string ablation_baseline = "zero";
  std::size_t morris_trajectories = 10;
  std::size_t morris_levels = 4;
  MorrisConfig::Start morris_start = MorrisConfig::Start::instance;
  std::size_t ig_steps = 50;
  PathRule ig_rule = PathRule::gauss_legendre;
  std::size_t gs_samples = 20;
  double gs_noise = 0.1;
  std::size_t permutation_batch = 32;
  double fd_eps = kDefaultFiniteDiffEps;

  // [evaluate]
  std::vector<double> k_bins{5.0, 10.0};
  std::string mask_baseline;  // empty: the method's own baseline

  // [run]
  std::uint64_t seed = 7;
  std::size_t workers = 0;  // 0: hardware concurrency
  std::filesystem::path output = "out";

  /// Input schema plus the generated calendar features.
  std::vector<FeatureSpec> full_schema() const;
  std::size_t resolved_workers() const;
};

RunConfig parse_config(std::istream& in, const std::string& source, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical INI rendering of every resolved setting (stored in manifests).
std::string config_snapshot(const RunConfig& config);

}  // namespace tsinterp
