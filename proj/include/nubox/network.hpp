#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nubox/error.hpp"
#include "nubox/matrix.hpp"

namespace nubox {

enum class Activation { relu, sigmoid, tanh };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

inline Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  throw FormatError("unknown activation '" + std::string(name) + "'");
}

inline double activate(Activation a, double x) {
  switch (a) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::tanh: return std::tanh(x);
  }
  return x;
}

// ReLU derivative at 0 is taken as 0.
inline double activate_derivative(Activation a, double x) {
  switch (a) {
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: {
      const double s = activate(a, x);
      return s * (1.0 - s);
    }
    case Activation::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

struct Layer {
  Matrix weight;  // n_{i+1} x n_i
  Vector bias;    // n_{i+1}
};

/// Fully connected feedforward network z^(i+1) = W^(i) sigma(z^(i)) + b^(i).
/// The activation is applied on hidden layers only; the last layer yields logits.
class Network {
 public:
  Network(Activation activation, std::vector<Layer> layers)
      : activation_(activation), layers_(std::move(layers)) {
    if (layers_.empty()) throw DimensionError("network needs at least one layer");
    sizes_.push_back(layers_.front().weight.cols());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      if (l.weight.cols() != sizes_.back()) {
        throw DimensionError("layer " + std::to_string(i + 1) + " expects input size " +
                             std::to_string(l.weight.cols()) + ", previous layer has " +
                             std::to_string(sizes_.back()));
      }
      if (l.bias.size() != l.weight.rows()) {
        throw DimensionError("layer " + std::to_string(i + 1) + " bias length mismatch");
      }
      if (!l.weight.all_finite() || !all_finite(l.bias)) {
        throw DimensionError("layer " + std::to_string(i + 1) + " has non-finite parameters");
      }
      sizes_.push_back(l.weight.rows());
    }
    if (sizes_.front() == 0) throw DimensionError("input size must be positive");
  }

  Activation activation() const { return activation_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }
  // n_1 .. n_N
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  // N, counting the input layer
  std::size_t depth() const { return sizes_.size(); }

 private:
  Activation activation_;
  std::vector<Layer> layers_;
  std::vector<std::size_t> sizes_;
};

struct Edge {
  std::size_t from;  // 1-based node index
  std::size_t to;
  Matrix weight;     // n_to x n_from
};

/// General feedforward network over nodes 1..N (1-based):
///   z^(i) = sum_{j->i} W^(j->i) sigma(z^(j)) + b^(i), with node 1 the raw input.
class DagNetwork {
 public:
  DagNetwork(Activation activation, std::vector<std::size_t> node_sizes, std::vector<Edge> edges,
             std::vector<Vector> biases)
      : activation_(activation),
        sizes_(std::move(node_sizes)),
        edges_(std::move(edges)),
        biases_(std::move(biases)) {
    if (sizes_.size() < 2) throw DimensionError("DAG needs at least two nodes");
    if (biases_.size() != sizes_.size() - 1) {
      throw DimensionError("DAG needs one bias per node 2..N");
    }
    for (std::size_t i = 0; i < biases_.size(); ++i) {
      if (biases_[i].size() != sizes_[i + 1]) {
        throw DimensionError("bias of node " + std::to_string(i + 2) + " has wrong length");
      }
    }
    for (const auto& e : edges_) {
      if (e.from < 1 || e.to > sizes_.size() || e.from >= e.to) {
        throw DimensionError("invalid edge " + std::to_string(e.from) + "->" + std::to_string(e.to));
      }
      if (e.weight.rows() != size(e.to) || e.weight.cols() != size(e.from)) {
        throw DimensionError("edge " + std::to_string(e.from) + "->" + std::to_string(e.to) +
                             " weight has wrong shape");
      }
    }
    std::stable_sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
      return a.to != b.to ? a.to < b.to : a.from < b.from;
    });
    for (std::size_t i = 1; i < edges_.size(); ++i) {
      if (edges_[i].to == edges_[i - 1].to && edges_[i].from == edges_[i - 1].from) {
        throw DimensionError("duplicate edge " + std::to_string(edges_[i].from) + "->" +
                             std::to_string(edges_[i].to));
      }
    }
  }

  Activation activation() const { return activation_; }
  std::size_t node_count() const { return sizes_.size(); }
  std::size_t size(std::size_t node) const { return sizes_.at(node - 1); }
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Vector& bias(std::size_t node) const { return biases_.at(node - 2); }
  const std::vector<Vector>& biases() const { return biases_; }

  std::vector<const Edge*> incoming(std::size_t node) const {
    std::vector<const Edge*> in;
    for (const auto& e : edges_)
      if (e.to == node) in.push_back(&e);
    return in;
  }

 private:
  Activation activation_;
  std::vector<std::size_t> sizes_;
  std::vector<Edge> edges_;
  std::vector<Vector> biases_;
};

/// Chain network as a DAG with edges (i, i+1).
inline DagNetwork to_dag(const Network& net) {
  std::vector<Edge> edges;
  std::vector<Vector> biases;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    edges.push_back({i + 1, i + 2, net.layers()[i].weight});
    biases.push_back(net.layers()[i].bias);
  }
  return DagNetwork(net.activation(), net.sizes(), std::move(edges), std::move(biases));
}

/// Nodes in evaluation order (ascending index). Throws if some node i >= 2
/// cannot be reached from the input node.
inline std::vector<std::size_t> topo_paths_check(const DagNetwork& dag) {
  const std::size_t n = dag.node_count();
  std::vector<bool> reached(n + 1, false);
  reached[1] = true;
  // Edges go from lower to higher index, so one ascending sweep suffices.
  for (const auto& e : dag.edges())
    if (reached[e.from]) reached[e.to] = true;
  std::vector<std::size_t> order;
  for (std::size_t i = 1; i <= n; ++i) {
    if (!reached[i]) throw DimensionError("node " + std::to_string(i) + " is unreachable from the input");
    order.push_back(i);
  }
  return order;
}

inline void check_input(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(expected) +
                         ", got " + std::to_string(got));
  }
}

/// Output logits z^(N).
inline Vector forward(const Network& net, std::span<const double> x) {
  check_input(net.input_size(), x.size(), "forward");
  Vector z(x.begin(), x.end());
  const auto& layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    z = matvec(layers[i].weight, z);
    add_in_place(z, layers[i].bias);
    if (i + 1 < layers.size())
      for (double& v : z) v = activate(net.activation(), v);
  }
  return z;
}

inline Vector forward(const DagNetwork& dag, std::span<const double> x) {
  check_input(dag.size(1), x.size(), "forward");
  topo_paths_check(dag);
  const std::size_t n = dag.node_count();
  std::vector<Vector> post(n + 1);
  post[1].assign(x.begin(), x.end());
  Vector z;
  for (std::size_t t = 2; t <= n; ++t) {
    z.assign(dag.size(t), 0.0);
    for (const Edge* e : dag.incoming(t)) add_in_place(z, matvec(e->weight, post[e->from]));
    add_in_place(z, dag.bias(t));
    if (t < n) {
      post[t] = z;
      for (double& v : post[t]) v = activate(dag.activation(), v);
    }
  }
  return z;
}

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace nubox
