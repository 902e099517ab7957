#include "tsinterp/model_io.hpp"

#include <fstream>
#include <iomanip>

#include <json.hpp>

#include "tsinterp/errors.hpp"
#include "tsinterp/wire.hpp"

namespace tsinterp {

namespace {

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write model file '" + path.string() + "'");
  out << j.dump() << '\n';
}

}  // namespace

void save_model(const std::filesystem::path& path, const ReferenceLinearModel& model) {
  nlohmann::json j;
  j["kind"] = "linear";
  j["shape"] = wire::shape_to_json(model.shape());
  j["ridge"] = model.ridge();
  j["weights"] = std::vector<double>(model.weights().begin(), model.weights().end());
  j["bias"] = std::vector<double>(model.bias().begin(), model.bias().end());
  write_json(path, j);
}

void save_model(const std::filesystem::path& path, const ReferenceMLP& model) {
  const auto& p = model.parameters();
  nlohmann::json j;
  j["kind"] = "mlp";
  j["shape"] = wire::shape_to_json(model.shape());
  j["hidden"] = p.hidden;
  j["input_weights"] = p.input_weights;
  j["input_bias"] = p.input_bias;
  j["output_weights"] = p.output_weights;
  j["output_bias"] = p.output_bias;
  write_json(path, j);
}

std::unique_ptr<ForecastOracle> load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
    const auto shape = wire::shape_from_json(j.at("shape"));
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "linear") {
      return std::make_unique<ReferenceLinearModel>(shape, j.at("weights").get<std::vector<double>>(),
                                                    j.at("bias").get<std::vector<double>>(),
                                                    j.value("ridge", 0.0));
    }
    if (kind == "mlp") {
      ReferenceMLP::Parameters p;
      p.hidden = j.at("hidden").get<std::size_t>();
      p.input_weights = j.at("input_weights").get<std::vector<double>>();
      p.input_bias = j.at("input_bias").get<std::vector<double>>();
      p.output_weights = j.at("output_weights").get<std::vector<double>>();
      p.output_bias = j.at("output_bias").get<std::vector<double>>();
      return std::make_unique<ReferenceMLP>(shape, std::move(p));
    }
    throw ValidationError("model file '" + path.string() + "' has unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed model file '" + path.string() + "': " + e.what());
  } catch (const ProtocolError& e) {
    throw ValidationError("malformed model file '" + path.string() + "': " + e.what());
  }
}

}  // namespace tsinterp
