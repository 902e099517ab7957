#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tsinterp/attribution.hpp"

namespace tsinterp {

/// Long CSV with one row per (instance, o, tau, feature, lookback position):
/// entity, anchor_date, method, o, tau, feature, lookback_position, value.
/// Lookback positions run from -L (oldest) to -1 (most recent).
void write_attribution_csv(std::ostream& out, std::span<const AttributionTensor> tensors,
                           std::span<const std::string> feature_names);

/// Reads a file written by write_attribution_csv. Instances are returned in
/// order of first appearance; every cell of `shape` must be present exactly
/// once per instance. Errors name the source and line.
std::vector<AttributionTensor> read_attribution_csv(std::istream& in, const std::string& source,
                                                    std::span<const std::string> feature_names,
                                                    const TensorShape& shape);

}  // namespace tsinterp
