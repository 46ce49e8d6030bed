#pragma once

#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "nubox/error.hpp"
#include "nubox/matrix.hpp"
#include "nubox/network.hpp"

namespace nubox {

using Model = std::variant<Network, DagNetwork>;

struct LabeledPoint {
  Vector features;
  std::size_t label;
};

struct Dataset {
  std::vector<LabeledPoint> points;

  std::size_t size() const { return points.size(); }
  std::size_t feature_count() const { return points.empty() ? 0 : points.front().features.size(); }
};

namespace detail {

inline Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols,
                               const std::string& where) {
  if (!j.is_array() || j.size() != rows) {
    throw DimensionError(where + ": expected " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != cols) {
      throw DimensionError(where + ": row " + std::to_string(r) + " should have " +
                           std::to_string(cols) + " entries");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) throw FormatError(where + ": non-numeric entry");
      m(r, c) = row[c].get<double>();
    }
  }
  return m;
}

inline Vector vector_from_json(const nlohmann::json& j, std::size_t n, const std::string& where) {
  if (!j.is_array() || j.size() != n) {
    throw DimensionError(where + ": expected " + std::to_string(n) + " entries");
  }
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!j[i].is_number()) throw FormatError(where + ": non-numeric entry");
    v[i] = j[i].get<double>();
  }
  return v;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

}  // namespace detail

/// Parses the JSON model document. A document carrying "edges" yields a
/// DagNetwork (1-based node indices), otherwise a chain Network built from "layers".
inline Model load_model(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("model is not valid JSON: ") + e.what());
  }
  try {
    if (!doc.is_object()) throw FormatError("model document must be a JSON object");
    if (doc.value("version", 1) != 1) throw FormatError("unsupported model version");
    const Activation act = parse_activation(doc.at("activation").get<std::string>());
    const auto sizes = doc.at("sizes").get<std::vector<std::size_t>>();
    if (sizes.size() < 2) throw DimensionError("model needs at least two layer sizes");

    if (doc.contains("edges")) {
      const auto& jb = doc.at("biases");
      if (!jb.is_array() || jb.size() != sizes.size() - 1) {
        throw DimensionError("\"biases\" must list one vector per node 2..N");
      }
      std::vector<Vector> biases;
      for (std::size_t i = 0; i < jb.size(); ++i) {
        biases.push_back(detail::vector_from_json(jb[i], sizes[i + 1], "bias of node " + std::to_string(i + 2)));
      }
      std::vector<Edge> edges;
      for (const auto& je : doc.at("edges")) {
        const auto from = je.at("from").get<std::size_t>();
        const auto to = je.at("to").get<std::size_t>();
        if (from < 1 || to > sizes.size() || from >= to) {
          throw DimensionError("invalid edge " + std::to_string(from) + "->" + std::to_string(to));
        }
        const std::string where = "edge " + std::to_string(from) + "->" + std::to_string(to);
        edges.push_back({from, to, detail::matrix_from_json(je.at("weight"), sizes[to - 1], sizes[from - 1], where)});
      }
      DagNetwork dag(act, sizes, std::move(edges), std::move(biases));
      topo_paths_check(dag);
      return dag;
    }

    const auto& jl = doc.at("layers");
    if (!jl.is_array() || jl.size() != sizes.size() - 1) {
      throw DimensionError("\"layers\" must have one entry per consecutive pair of sizes");
    }
    std::vector<Layer> layers;
    for (std::size_t i = 0; i < jl.size(); ++i) {
      const std::string where = "layer " + std::to_string(i + 1);
      layers.push_back({detail::matrix_from_json(jl[i].at("weight"), sizes[i + 1], sizes[i], where + " weight"),
                        detail::vector_from_json(jl[i].at("bias"), sizes[i + 1], where + " bias")});
    }
    return Network(act, std::move(layers));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model document: ") + e.what());
  }
}

inline std::string save_model(const Network& net) {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["activation"] = std::string(to_string(net.activation()));
  doc["sizes"] = net.sizes();
  auto layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    layers.push_back({{"weight", detail::matrix_to_json(l.weight)}, {"bias", l.bias}});
  }
  doc["layers"] = layers;
  // nlohmann serializes doubles with round-trip precision.
  return doc.dump(1);
}

inline std::string save_model(const DagNetwork& dag) {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["activation"] = std::string(to_string(dag.activation()));
  doc["sizes"] = dag.sizes();
  auto edges = nlohmann::json::array();
  for (const auto& e : dag.edges()) {
    edges.push_back({{"from", e.from}, {"to", e.to}, {"weight", detail::matrix_to_json(e.weight)}});
  }
  doc["edges"] = edges;
  doc["biases"] = dag.biases();
  return doc.dump(1);
}

inline std::string save_model(const Model& m) {
  return std::visit([](const auto& net) { return save_model(net); }, m);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << text;
  if (!out) throw FormatError("write to '" + path + "' failed");
}

inline Model load_model_file(const std::string& path) { return load_model(read_file(path)); }

/// CSV dataset: first column the integer label, remaining columns features.
inline Dataset parse_dataset(const std::string& text, bool skip_header = false) {
  Dataset ds;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (skip_header && line_no == 1) continue;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(fields, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw FormatError("dataset line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (values.size() < 2) throw FormatError("dataset line " + std::to_string(line_no) + ": need label and features");
    const double label = values.front();
    if (label < 0 || label != static_cast<double>(static_cast<std::size_t>(label))) {
      throw FormatError("dataset line " + std::to_string(line_no) + ": label must be a nonnegative integer");
    }
    LabeledPoint p{Vector(values.begin() + 1, values.end()), static_cast<std::size_t>(label)};
    if (!ds.points.empty() && p.features.size() != ds.feature_count()) {
      throw FormatError("dataset line " + std::to_string(line_no) + ": inconsistent feature count");
    }
    ds.points.push_back(std::move(p));
  }
  return ds;
}

inline Dataset load_dataset_file(const std::string& path, bool skip_header = false) {
  return parse_dataset(read_file(path), skip_header);
}

inline std::string format_dataset(const Dataset& ds) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& p : ds.points) {
    out << p.label;
    for (double v : p.features) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

/// Throws unless every label indexes an output of a model with `classes` outputs.
inline void check_dataset(const Dataset& ds, std::size_t features, std::size_t classes) {
  for (std::size_t i = 0; i < ds.points.size(); ++i) {
    if (ds.points[i].features.size() != features) {
      throw DimensionError("data point " + std::to_string(i) + " has wrong feature count");
    }
    if (ds.points[i].label >= classes) {
      throw DimensionError("data point " + std::to_string(i) + " has label out of range");
    }
  }
}

}  // namespace nubox
