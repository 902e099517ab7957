#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tsinterp/attribution.hpp"
#include "tsinterp/config.hpp"
#include "tsinterp/oracle.hpp"
#include "tsinterp/preprocess.hpp"
#include "tsinterp/windows.hpp"

namespace tsinterp {

/// Run directory layout (relative to RunConfig::output).
namespace run_layout {
inline constexpr const char* kPreprocessed = "preprocessed";
inline constexpr const char* kStats = "preprocessed/stats.txt";
inline constexpr const char* kModel = "model.json";
inline constexpr const char* kAttributions = "attributions";
inline constexpr const char* kEvaluation = "evaluation";
inline constexpr const char* kSummary = "summary.txt";
}  // namespace run_layout

/// Reads the raw CSV, adds calendar features, clips outliers, interpolates,
/// splits chronologically and standardizes with training statistics. Writes
/// preprocessed/{train,validation,test}.csv (evaluation splits keep L steps
/// of context) and preprocessed/stats.txt.
void cmd_preprocess(const RunConfig& config);

/// Fits or attaches the model, then runs every configured attribution
/// method over the explained split. Writes attributions/<method>.csv and
/// model.json for reference models.
void cmd_interpret(const RunConfig& config);

/// Faithfulness (AOPCR) per method, forecast accuracy and, when group truth
/// is configured, the group-share comparison. Writes CSVs under evaluation/.
void cmd_evaluate(const RunConfig& config);

/// Consolidates a run directory into summary.txt; missing stages are listed
/// as gaps. Returns the summary path.
std::filesystem::path cmd_report(const std::filesystem::path& run_dir);

/// Preprocessed data reloaded from a run directory.
struct PreparedData {
  TimeSeriesPanel train;
  TimeSeriesPanel explain;  // the split named by interpret.split
  StandardizationStats stats;
  WindowSet train_windows;
  WindowSet explain_windows;  // truncated to interpret.max_instances
};

PreparedData load_prepared(const RunConfig& config);
ModelShape model_shape(const RunConfig& config, const WindowSet& windows);
/// The model interpret fitted (model.json), a configured saved model, or a
/// connection to the external endpoint.
std::unique_ptr<ForecastOracle> open_model(const RunConfig& config, const ModelShape& shape);
std::filesystem::path attribution_path(const RunConfig& config, Method method);
/// "entity@anchor" label used in per-instance outputs.
std::string instance_label(const WindowedInstance& instance, bool with_time);

}  // namespace tsinterp
