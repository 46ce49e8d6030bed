#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <queue>
#include <random>
#include <vector>

#include "nubox/bounds.hpp"
#include "nubox/network.hpp"
#include "nubox/propagation.hpp"

namespace nubox {

inline constexpr double kSoundnessSlack = 1e-9;

/// Number of points x + eps .* v, v ~ U[-1, 1]^n, whose logits escape the
/// certified output bounds by more than kSoundnessSlack. Deterministic in seed.
template <class Net>
std::size_t sample_soundness(const Net& net, const Budget& budget, const LayerBounds& b, std::size_t n_samples,
                             std::uint64_t seed) {
  const Vector& lo = b.output_lower();
  const Vector& hi = b.output_upper();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vector p(budget.x.size());
  std::size_t violations = 0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = budget.x[j] + budget.eps[j] * unit(rng);
    const Vector z = forward(net, p);
    for (std::size_t o = 0; o < z.size(); ++o) {
      if (z[o] < lo[o] - kSoundnessSlack || z[o] > hi[o] + kSoundnessSlack) {
        ++violations;
        break;
      }
    }
  }
  return violations;
}

struct RangeEstimate {
  Vector lo, hi;                // outer (certified) range per logit
  Vector inner_lo, inner_hi;    // attained values seen at evaluated points
  Vector gap_to_certified;      // max(inner_lo - lo, hi - inner_hi) per logit
  bool converged = false;
  std::size_t nodes_expanded = 0;  // boxes bounded, root included
};

namespace detail {

struct BbBox {
  Vector center;
  Vector half;
  Vector lo, hi;
  double key = 0.0;
};

struct BbOrder {
  bool operator()(const BbBox& a, const BbBox& b) const { return a.key < b.key; }
};

}  // namespace detail

/// Branch-and-bound output range over the input box. Boxes are bounded with the
/// simple algorithm and split in half along their widest (eps-scaled) dimension,
/// lowest index on ties, always expanding the box with the largest gap. Converges
/// once every box's bounds are within tol of the values attained so far.
inline RangeEstimate exact_range_bb(const Network& net, const Budget& budget, double tol, std::size_t max_nodes) {
  budget.validate(net.input_size());
  if (!(tol > 0.0)) throw std::invalid_argument("exact_range_bb: tol must be > 0");
  const std::size_t n = budget.x.size();
  const std::size_t outs = net.output_size();

  RangeEstimate est;
  est.inner_lo.assign(outs, std::numeric_limits<double>::infinity());
  est.inner_hi.assign(outs, -std::numeric_limits<double>::infinity());

  auto observe = [&](const Vector& p) {
    const Vector z = forward(net, p);
    for (std::size_t o = 0; o < outs; ++o) {
      est.inner_lo[o] = std::min(est.inner_lo[o], z[o]);
      est.inner_hi[o] = std::max(est.inner_hi[o], z[o]);
    }
  };
  const bool corners = n <= 6;
  auto sample_box = [&](const detail::BbBox& b) {
    observe(b.center);
    if (!corners) return;
    Vector p(n);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      for (std::size_t j = 0; j < n; ++j) p[j] = b.center[j] + ((mask >> j) & 1 ? b.half[j] : -b.half[j]);
      observe(p);
    }
  };
  auto gap = [&](const detail::BbBox& b) {
    double g = 0.0;
    for (std::size_t o = 0; o < outs; ++o) {
      g = std::max(g, est.inner_lo[o] - b.lo[o]);
      g = std::max(g, b.hi[o] - est.inner_hi[o]);
    }
    return g;
  };
  auto bound_box = [&](detail::BbBox& b) {
    const LayerBounds lb = bounds_simple(net, Budget{b.center, b.half});
    b.lo = lb.output_lower();
    b.hi = lb.output_upper();
    ++est.nodes_expanded;
  };

  std::priority_queue<detail::BbBox, std::vector<detail::BbBox>, detail::BbOrder> queue;
  {
    detail::BbBox root{budget.x, budget.eps, {}, {}, 0.0};
    bound_box(root);
    sample_box(root);
    root.key = gap(root);
    queue.push(std::move(root));
  }

  while (true) {
    detail::BbBox top = queue.top();
    queue.pop();
    // Inner values only grow, so stored keys are stale upper estimates.
    const double g = gap(top);
    if (!queue.empty() && g < queue.top().key) {
      top.key = g;
      queue.push(std::move(top));
      continue;
    }
    if (g < tol) {
      top.key = g;
      queue.push(std::move(top));
      est.converged = true;
      break;
    }
    if (est.nodes_expanded + 2 > max_nodes) {
      top.key = g;
      queue.push(std::move(top));
      break;
    }
    std::size_t dim = 0;
    for (std::size_t j = 1; j < n; ++j)
      if (top.half[j] > top.half[dim]) dim = j;
    for (int side : {-1, 1}) {
      detail::BbBox child{top.center, top.half, {}, {}, 0.0};
      child.half[dim] = 0.5 * top.half[dim];
      child.center[dim] = top.center[dim] + side * child.half[dim];
      bound_box(child);
      // A sub-box can never need a wider range than its parent.
      for (std::size_t o = 0; o < outs; ++o) {
        child.lo[o] = std::max(child.lo[o], top.lo[o]);
        child.hi[o] = std::min(child.hi[o], top.hi[o]);
      }
      sample_box(child);
      child.key = gap(child);
      queue.push(std::move(child));
    }
  }

  est.lo.assign(outs, std::numeric_limits<double>::infinity());
  est.hi.assign(outs, -std::numeric_limits<double>::infinity());
  while (!queue.empty()) {
    const auto& b = queue.top();
    for (std::size_t o = 0; o < outs; ++o) {
      est.lo[o] = std::min(est.lo[o], b.lo[o]);
      est.hi[o] = std::max(est.hi[o], b.hi[o]);
    }
    queue.pop();
  }
  est.gap_to_certified.resize(outs);
  for (std::size_t o = 0; o < outs; ++o) {
    // Attained values are inside every sound bound; rounding aside, lo <= inner_lo.
    est.lo[o] = std::min(est.lo[o], est.inner_lo[o]);
    est.hi[o] = std::max(est.hi[o], est.inner_hi[o]);
    est.gap_to_certified[o] = std::max(est.inner_lo[o] - est.lo[o], est.hi[o] - est.inner_hi[o]);
  }
  return est;
}

/// True iff the network predicts class c at every point of a regular grid over
/// the box (grid_per_dim points per axis, endpoints included). Falls back to 10^6
/// seeded uniform samples when the grid would exceed 10^7 points.
template <class Net>
bool prediction_constant(const Net& net, const Budget& budget, std::size_t c, std::size_t grid_per_dim) {
  if (grid_per_dim < 2) throw std::invalid_argument("prediction_constant: grid_per_dim must be >= 2");
  const std::size_t n = budget.x.size();
  Vector p(n);

  double total = 1.0;
  for (std::size_t j = 0; j < n; ++j) total *= static_cast<double>(grid_per_dim);
  if (total > 1e7) {
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int s = 0; s < 1000000; ++s) {
      for (std::size_t j = 0; j < n; ++j) p[j] = budget.x[j] + budget.eps[j] * unit(rng);
      if (argmax(forward(net, p)) != c) return false;
    }
    return true;
  }

  std::vector<std::size_t> idx(n, 0);
  const double denom = static_cast<double>(grid_per_dim - 1);
  while (true) {
    for (std::size_t j = 0; j < n; ++j) {
      p[j] = budget.x[j] - budget.eps[j] + 2.0 * budget.eps[j] * (static_cast<double>(idx[j]) / denom);
    }
    if (argmax(forward(net, p)) != c) return false;
    std::size_t j = 0;
    while (j < n && ++idx[j] == grid_per_dim) idx[j++] = 0;
    if (j == n) break;
  }
  return true;
}

}  // namespace nubox
