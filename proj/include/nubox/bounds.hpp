#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nubox/error.hpp"
#include "nubox/matrix.hpp"
#include "nubox/relaxation.hpp"

namespace nubox {

/// l_inf budget around x: the box { x + eps .* v : |v|_inf <= 1 }.
struct Budget {
  Vector x;
  Vector eps;

  void validate(std::size_t input_size) const {
    if (x.size() != input_size || eps.size() != input_size) {
      throw DimensionError("budget: expected input length " + std::to_string(input_size) + ", got x=" +
                           std::to_string(x.size()) + " eps=" + std::to_string(eps.size()));
    }
    for (std::size_t i = 0; i < eps.size(); ++i) {
      if (!std::isfinite(x[i])) throw DimensionError("budget: non-finite x");
      if (!(eps[i] >= 0.0) || !std::isfinite(eps[i])) {
        throw DimensionError("budget: eps[" + std::to_string(i) + "] must be finite and >= 0");
      }
    }
  }
};

inline Budget uniform_budget(Vector x, double gamma) {
  Vector eps(x.size(), gamma);
  return {std::move(x), std::move(eps)};
}

enum class BoundMode { simple, quadratic, combined };

/// Pre-activation bounds of one layer i >= 2.
struct LayerBound {
  Vector lower;
  Vector upper;
  // Per-path candidates computed from the same incoming bounds; empty when the
  // path was not run (and on layer 2, where the bound is the exact affine image).
  Vector simple_lower, simple_upper;
  Vector quad_lower, quad_upper;
  // Combined mode: 1 where the simple path supplied the selected bound.
  std::vector<std::uint8_t> lower_from_simple, upper_from_simple;
  // Relaxation used on this (hidden) layer by the quadratic path.
  std::vector<Relaxation> relax;
};

struct LayerBounds {
  std::vector<LayerBound> layers;  // layers[0] holds layer 2

  const LayerBound& layer(std::size_t i) const { return layers.at(i - 2); }
  const Vector& output_lower() const { return layers.back().lower; }
  const Vector& output_upper() const { return layers.back().upper; }
};

/// d(bound)/d(eps) per layer; rows are neurons, columns input features.
struct LayerGrad {
  Matrix lower;
  Matrix upper;
};

struct BoundGrad {
  Matrix dl_deps;  // n_N x n_1
  Matrix du_deps;
  std::vector<LayerGrad> layers;  // layers[0] holds layer 2
};

}  // namespace nubox
