#include "tsinterp/attribution_io.hpp"

#include <algorithm>
#include <map>
#include <ostream>

#include "tsinterp/csv.hpp"
#include "tsinterp/errors.hpp"

namespace tsinterp {

namespace {

std::size_t parse_index(const std::string& text, const std::string& where, const char* column) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size() || v < 0) throw std::invalid_argument(text);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ValidationError(where + ": column " + column + " must be a nonnegative integer, got '" + text + "'");
  }
}

}  // namespace

void write_attribution_csv(std::ostream& out, std::span<const AttributionTensor> tensors,
                           std::span<const std::string> feature_names) {
  out << "entity,anchor_date,method,o,tau,feature,lookback_position,value\n";
  for (const auto& phi : tensors) {
    if (phi.shape.features != feature_names.size()) {
      throw ValidationError("attribution tensor has " + std::to_string(phi.shape.features) + " features but " +
                            std::to_string(feature_names.size()) + " names were given");
    }
    const long long L = static_cast<long long>(phi.shape.lookback);
    const std::string prefix = csv_escape(phi.entity) + "," + csv_escape(phi.anchor) + "," + csv_escape(phi.method) + ",";
    for (std::size_t o = 0; o < phi.shape.outputs; ++o) {
      for (std::size_t tau = 0; tau < phi.shape.horizon; ++tau) {
        for (std::size_t j = 0; j < phi.shape.features; ++j) {
          for (std::size_t l = 0; l < phi.shape.lookback; ++l) {
            out << prefix << o << ',' << tau << ',' << csv_escape(feature_names[j]) << ','
                << (static_cast<long long>(l) - L) << ',' << format_double(phi.at(o, tau, j, l)) << '\n';
          }
        }
      }
    }
  }
}

std::vector<AttributionTensor> read_attribution_csv(std::istream& in, const std::string& source,
                                                    std::span<const std::string> feature_names,
                                                    const TensorShape& shape) {
  if (shape.features != feature_names.size()) {
    throw ValidationError(source + ": expected shape has " + std::to_string(shape.features) + " features but " +
                          std::to_string(feature_names.size()) + " names were given");
  }
  CsvReader reader(in, source);
  const std::size_t c_entity = reader.require_column("entity");
  const std::size_t c_anchor = reader.require_column("anchor_date");
  const std::size_t c_method = reader.require_column("method");
  const std::size_t c_o = reader.require_column("o");
  const std::size_t c_tau = reader.require_column("tau");
  const std::size_t c_feature = reader.require_column("feature");
  const std::size_t c_pos = reader.require_column("lookback_position");
  const std::size_t c_value = reader.require_column("value");

  std::map<std::string, std::size_t> feature_index;
  for (std::size_t j = 0; j < feature_names.size(); ++j) feature_index[feature_names[j]] = j;

  std::vector<AttributionTensor> tensors;
  std::vector<std::vector<std::uint8_t>> seen;
  std::map<std::pair<std::string, std::string>, std::size_t> instance_index;
  std::vector<std::string> row;
  while (reader.next(row)) {
    const std::string where = source + ":" + std::to_string(reader.line_number());
    const auto key = std::make_pair(row[c_entity], row[c_anchor]);
    auto it = instance_index.find(key);
    if (it == instance_index.end()) {
      it = instance_index.emplace(key, tensors.size()).first;
      tensors.emplace_back(shape, row[c_method]);
      tensors.back().entity = row[c_entity];
      tensors.back().anchor = row[c_anchor];
      seen.emplace_back(shape.size(), 0);
    }
    AttributionTensor& phi = tensors[it->second];
    if (row[c_method] != phi.method) {
      throw ValidationError(where + ": method '" + row[c_method] + "' differs from '" + phi.method +
                            "' earlier in the file");
    }
    const std::size_t o = parse_index(row[c_o], where, "o");
    const std::size_t tau = parse_index(row[c_tau], where, "tau");
    const auto f = feature_index.find(row[c_feature]);
    if (f == feature_index.end()) throw ValidationError(where + ": unknown feature '" + row[c_feature] + "'");
    long long pos = 0;
    try {
      std::size_t used = 0;
      pos = std::stoll(row[c_pos], &used);
      if (used != row[c_pos].size()) throw std::invalid_argument(row[c_pos]);
    } catch (const std::exception&) {
      throw ValidationError(where + ": lookback_position must be an integer, got '" + row[c_pos] + "'");
    }
    const long long L = static_cast<long long>(shape.lookback);
    if (o >= shape.outputs || tau >= shape.horizon || pos < -L || pos > -1) {
      throw ValidationError(where + ": cell (o=" + row[c_o] + ", tau=" + row[c_tau] + ", position=" + row[c_pos] +
                            ") is outside the expected shape");
    }
    double value = 0.0;
    if (!parse_double(row[c_value], value)) {
      throw ValidationError(where + ": value '" + row[c_value] + "' is not a number");
    }
    const std::size_t off = phi.offset(o, tau, f->second, static_cast<std::size_t>(pos + L));
    if (seen[it->second][off]) throw ValidationError(where + ": duplicate cell for " + key.first + " " + key.second);
    seen[it->second][off] = 1;
    phi.values[off] = value;
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (std::find(seen[i].begin(), seen[i].end(), 0) != seen[i].end()) {
      throw ValidationError(source + ": instance " + tensors[i].entity + " " + tensors[i].anchor +
                            " is missing attribution cells");
    }
  }
  return tensors;
}

}  // namespace tsinterp
