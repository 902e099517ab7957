#pragma once

// Newline-delimited JSON messages between the engine and an external model.
//
//   hello:    {"id", "op":"hello", "protocol_version", "shape":{J,L,tau_max,O,J_known}}
//   reply:    {"id", "protocol_version", "shape":{...}, "capabilities":{"gradient":bool}}
//   predict:  {"id", "op":"predict", "inputs":BxJxL, "known_future":BxJ_knownxtau_max}
//   reply:    {"id", "outputs":BxOxtau_max}
//   gradient: {"id", "op":"gradient", "inputs", "known_future", "output_index":[o, tau]}
//   reply:    {"id", "gradients":BxJxL}
//   failure:  {"id", "error":"..."}

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsinterp/oracle.hpp"

namespace tsinterp::wire {

inline constexpr int kProtocolVersion = 1;

nlohmann::json shape_to_json(const ModelShape& shape);
ModelShape shape_from_json(const nlohmann::json& j);

nlohmann::json hello_request(std::int64_t id, const ModelShape& shape);
nlohmann::json hello_reply(std::int64_t id, const ModelShape& shape, bool gradient);
nlohmann::json predict_request(std::int64_t id, std::span<const ModelInput> batch);
nlohmann::json gradient_request(std::int64_t id, std::span<const ModelInput> batch, OutputIndex index);
nlohmann::json error_reply(std::int64_t id, const std::string& message);

/// Nested array of rows x cols. Throws ProtocolError on ragged/non-numeric data.
nlohmann::json grid_to_json(const Grid& g);
Grid grid_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols, const char* what);

/// Reads a B x rows x cols array, checking each dimension and naming the
/// expected versus received sizes on mismatch.
std::vector<Grid> grids_from_json(const nlohmann::json& j, std::size_t batch, std::size_t rows,
                                  std::size_t cols, const char* what);

/// Decodes the inputs of a predict/gradient request against `shape`.
std::vector<ModelInput> inputs_from_request(const nlohmann::json& request, const ModelShape& shape);

/// Serializes a message to one line (no embedded newlines).
std::string to_line(const nlohmann::json& message);

}  // namespace tsinterp::wire
