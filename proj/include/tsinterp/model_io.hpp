#pragma once

#include <filesystem>
#include <memory>

#include "tsinterp/linear_model.hpp"
#include "tsinterp/mlp_model.hpp"

namespace tsinterp {

void save_model(const std::filesystem::path& path, const ReferenceLinearModel& model);
void save_model(const std::filesystem::path& path, const ReferenceMLP& model);

/// Loads either reference model from a JSON file written by save_model.
std::unique_ptr<ForecastOracle> load_model(const std::filesystem::path& path);

}  // namespace tsinterp
