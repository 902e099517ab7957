#include "tsinterp/wire.hpp"

#include "tsinterp/errors.hpp"

namespace tsinterp::wire {

using nlohmann::json;

json shape_to_json(const ModelShape& s) {
  return json{{"J", s.features}, {"L", s.lookback}, {"tau_max", s.horizon}, {"O", s.outputs},
              {"J_known", s.known_future}};
}

ModelShape shape_from_json(const json& j) {
  try {
    return ModelShape{j.at("J").get<std::size_t>(), j.at("L").get<std::size_t>(),
                      j.at("tau_max").get<std::size_t>(), j.at("O").get<std::size_t>(),
                      j.at("J_known").get<std::size_t>()};
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed shape metadata: ") + e.what());
  }
}

json hello_request(std::int64_t id, const ModelShape& shape) {
  return json{{"id", id}, {"op", "hello"}, {"protocol_version", kProtocolVersion},
              {"shape", shape_to_json(shape)}};
}

json hello_reply(std::int64_t id, const ModelShape& shape, bool gradient) {
  return json{{"id", id}, {"protocol_version", kProtocolVersion}, {"shape", shape_to_json(shape)},
              {"capabilities", {{"gradient", gradient}}}};
}

json grid_to_json(const Grid& g) {
  json rows = json::array();
  for (std::size_t r = 0; r < g.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < g.cols(); ++c) row.push_back(g(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

json batch_inputs(std::span<const ModelInput> batch, json& known) {
  json inputs = json::array();
  known = json::array();
  for (const auto& in : batch) {
    inputs.push_back(grid_to_json(in.past));
    known.push_back(grid_to_json(in.known_future));
  }
  return inputs;
}

std::string dims(std::size_t a, std::size_t b) { return std::to_string(a) + "x" + std::to_string(b); }

}  // namespace

json predict_request(std::int64_t id, std::span<const ModelInput> batch) {
  json known;
  json inputs = batch_inputs(batch, known);
  return json{{"id", id}, {"op", "predict"}, {"inputs", std::move(inputs)}, {"known_future", std::move(known)}};
}

json gradient_request(std::int64_t id, std::span<const ModelInput> batch, OutputIndex index) {
  json known;
  json inputs = batch_inputs(batch, known);
  return json{{"id", id},
              {"op", "gradient"},
              {"inputs", std::move(inputs)},
              {"known_future", std::move(known)},
              {"output_index", {index.output, index.step}}};
}

json error_reply(std::int64_t id, const std::string& message) {
  return json{{"id", id}, {"error", message}};
}

Grid grid_from_json(const json& j, std::size_t rows, std::size_t cols, const char* what) {
  if (!j.is_array() || j.size() != rows) {
    throw ProtocolError(std::string(what) + ": expected " + std::to_string(rows) + " rows, received " +
                        (j.is_array() ? std::to_string(j.size()) : std::string("a non-array")));
  }
  Grid g(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != cols) {
      throw ProtocolError(std::string(what) + ": expected " + dims(rows, cols) + ", row " +
                          std::to_string(r) + " has " +
                          (row.is_array() ? std::to_string(row.size()) : std::string("no")) + " columns");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) {
        throw ProtocolError(std::string(what) + ": non-numeric entry at (" + std::to_string(r) + ", " +
                            std::to_string(c) + ")");
      }
      g(r, c) = row[c].get<double>();
    }
  }
  return g;
}

std::vector<Grid> grids_from_json(const json& j, std::size_t batch, std::size_t rows,
                                  std::size_t cols, const char* what) {
  if (!j.is_array() || j.size() != batch) {
    throw ProtocolError(std::string(what) + ": expected batch of " + std::to_string(batch) + "x" +
                        dims(rows, cols) + ", received " +
                        (j.is_array() ? std::to_string(j.size()) + " entries" : std::string("a non-array")));
  }
  std::vector<Grid> out;
  out.reserve(batch);
  for (const auto& item : j) out.push_back(grid_from_json(item, rows, cols, what));
  return out;
}

std::vector<ModelInput> inputs_from_request(const json& request, const ModelShape& shape) {
  if (!request.contains("inputs") || !request["inputs"].is_array()) {
    throw ProtocolError("request has no inputs array");
  }
  const std::size_t batch = request["inputs"].size();
  auto past = grids_from_json(request["inputs"], batch, shape.features, shape.lookback, "inputs");
  std::vector<Grid> known;
  if (shape.known_future > 0) {
    known = grids_from_json(request.at("known_future"), batch, shape.known_future, shape.horizon,
                            "known_future");
  }
  std::vector<ModelInput> out(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    out[i].past = std::move(past[i]);
    out[i].known_future = shape.known_future > 0 ? std::move(known[i]) : Grid(0, shape.horizon);
  }
  return out;
}

std::string to_line(const json& message) { return message.dump(); }

}  // namespace tsinterp::wire
