#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nubox/bounds.hpp"
#include "nubox/detail/chain_engine.hpp"
#include "nubox/network.hpp"

namespace nubox {

struct BoundsWithGrad {
  LayerBounds bounds;
  BoundGrad grad;
};

/// Bounds plus their eps-(sub)gradients, computed forward alongside the bound
/// recursion. The gradient follows whichever path the tightening selected; the
/// bound values are identical to bounds(net, budget, mode).
inline BoundsWithGrad bounds_with_grad(const Network& net, const Budget& budget,
                                       BoundMode mode = BoundMode::combined) {
  BoundsWithGrad out;
  out.bounds = detail::propagate_chain(net, budget, mode, &out.grad);
  return out;
}

/// v_j = l_c - u_j - delta over j != c (ascending), with dv/deps.
struct Margin {
  Vector v;
  Matrix dv_deps;
  std::size_t c = 0;
  double delta = 0.0;
  std::vector<std::size_t> classes;  // the j of each row

  double min() const {
    double m = v.empty() ? 0.0 : v.front();
    for (double x : v) m = std::min(m, x);
    return m;
  }
  bool nonnegative() const { return min() >= 0.0; }
};

inline void check_class(std::size_t c, std::size_t outputs) {
  if (outputs < 2) throw DimensionError("margin needs at least two output classes");
  if (c >= outputs) {
    throw DimensionError("class index " + std::to_string(c) + " out of range [0, " + std::to_string(outputs) + ")");
  }
}

/// Assembles the margin from output bounds (and optionally their gradients).
inline Margin assemble_margin(const Vector& lower, const Vector& upper, const BoundGrad* grad, std::size_t c,
                              double delta) {
  check_class(c, lower.size());
  Margin m;
  m.c = c;
  m.delta = delta;
  const std::size_t rows = lower.size() - 1;
  m.v.reserve(rows);
  if (grad) m.dv_deps = Matrix(rows, grad->dl_deps.cols());
  std::size_t r = 0;
  for (std::size_t j = 0; j < lower.size(); ++j) {
    if (j == c) continue;
    m.classes.push_back(j);
    m.v.push_back(lower[c] - upper[j] - delta);
    if (grad) {
      for (std::size_t k = 0; k < m.dv_deps.cols(); ++k) {
        m.dv_deps(r, k) = grad->dl_deps(c, k) - grad->du_deps(j, k);
      }
    }
    ++r;
  }
  return m;
}

inline Margin margin_and_grad(const Network& net, const Budget& budget, std::size_t c, double delta) {
  check_class(c, net.output_size());
  const auto bg = bounds_with_grad(net, budget, BoundMode::combined);
  return assemble_margin(bg.bounds.output_lower(), bg.bounds.output_upper(), &bg.grad, c, delta);
}

/// Margin without gradients (one bounds_combined pass).
inline Margin margin_only(const Network& net, const Budget& budget, std::size_t c, double delta) {
  check_class(c, net.output_size());
  const auto b = detail::propagate_chain(net, budget, BoundMode::combined, nullptr);
  return assemble_margin(b.output_lower(), b.output_upper(), nullptr, c, delta);
}

/// Discrete state the (sub)gradient depends on: the ReLU case of every hidden
/// neuron and, for combined bounds, which path supplied each selected bound.
/// Two budgets with equal signatures lie in the same smooth piece.
inline std::vector<std::uint8_t> case_signature(const LayerBounds& b, Activation act) {
  std::vector<std::uint8_t> sig;
  for (std::size_t li = 0; li < b.layers.size(); ++li) {
    const auto& lb = b.layers[li];
    if (act == Activation::relu && li + 1 < b.layers.size()) {
      for (std::size_t r = 0; r < lb.lower.size(); ++r) {
        sig.push_back(static_cast<std::uint8_t>(relu_case(lb.lower[r], lb.upper[r])));
        // The exact simple path switches derivative when either end crosses 0.
        sig.push_back(static_cast<std::uint8_t>((lb.lower[r] > 0.0) | ((lb.upper[r] > 0.0) << 1)));
      }
    }
    sig.insert(sig.end(), lb.lower_from_simple.begin(), lb.lower_from_simple.end());
    sig.insert(sig.end(), lb.upper_from_simple.begin(), lb.upper_from_simple.end());
  }
  return sig;
}

}  // namespace nubox
