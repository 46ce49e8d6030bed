#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "nubox/gradient.hpp"
#include "nubox/propagation.hpp"

namespace nubox {

/// |a - b| / max(1, |a|, |b|)
inline double grad_rel_error(double a, double b) {
  return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

struct GradCheckReport {
  std::size_t coords = 0;            // (output, bound side, eps coordinate) triples compared
  std::size_t failures = 0;          // above the tolerance
  std::size_t failures_with_flip = 0;
  std::size_t flipped_coords = 0;    // eps coordinates whose +-h perturbation changes the case signature
  double max_rel_error = 0.0;         // over all compared entries
  double max_rel_error_smooth = 0.0;  // over entries whose coordinate saw no flip

  bool unexplained_failures() const { return failures > failures_with_flip; }
};

/// Compares bounds_with_grad(mode) against central differences of the primal
/// bounds with step h. A coordinate is flagged as flipped when either perturbed
/// budget changes a ReLU case or a tightening selection.
inline GradCheckReport check_bound_gradient(const Network& net, const Budget& budget, double h = 1e-6,
                                            double tol = 1e-4, BoundMode mode = BoundMode::combined) {
  const auto analytic = bounds_with_grad(net, budget, mode);
  const auto base_sig = case_signature(analytic.bounds, net.activation());
  GradCheckReport rep;
  const std::size_t n1 = budget.eps.size();
  for (std::size_t k = 0; k < n1; ++k) {
    Budget plus = budget, minus = budget;
    double span = 2.0 * h;
    plus.eps[k] += h;
    if (budget.eps[k] >= h) minus.eps[k] -= h;
    else span = h;  // forward difference at the boundary of the eps domain
    const LayerBounds bp = bounds(net, plus, mode);
    const LayerBounds bm = bounds(net, minus, mode);
    const bool flip = case_signature(bp, net.activation()) != base_sig ||
                      case_signature(bm, net.activation()) != base_sig;
    rep.flipped_coords += flip;
    for (std::size_t o = 0; o < net.output_size(); ++o) {
      const double fd_l = (bp.output_lower()[o] - bm.output_lower()[o]) / span;
      const double fd_u = (bp.output_upper()[o] - bm.output_upper()[o]) / span;
      for (double err : {grad_rel_error(analytic.grad.dl_deps(o, k), fd_l),
                         grad_rel_error(analytic.grad.du_deps(o, k), fd_u)}) {
        ++rep.coords;
        rep.max_rel_error = std::max(rep.max_rel_error, err);
        if (!flip) rep.max_rel_error_smooth = std::max(rep.max_rel_error_smooth, err);
        if (err > tol) {
          ++rep.failures;
          rep.failures_with_flip += flip;
        }
      }
    }
  }
  return rep;
}

}  // namespace nubox
