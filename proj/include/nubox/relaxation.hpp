#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "nubox/network.hpp"

namespace nubox {

/// Parallel-line relaxation k*x + m1 <= sigma(x) <= k*x + m2 on [l, u].
struct Relaxation {
  double k = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
};

/// Partial derivatives of (k, m1, m2) with respect to the interval ends.
struct RelaxationGrad {
  double dk_dl = 0.0, dk_du = 0.0;
  double dm1_dl = 0.0, dm1_du = 0.0;
  double dm2_dl = 0.0, dm2_du = 0.0;
};

inline constexpr double kDegenerateWidth = 1e-12;

enum class ReluCase { inactive, unstable, active };

// Zero endpoints go to the stable cases.
inline ReluCase relu_case(double l, double u) {
  if (l < 0.0 && u > 0.0) return ReluCase::unstable;
  return u <= 0.0 ? ReluCase::inactive : ReluCase::active;
}

namespace detail {

struct RelaxationWithGrad {
  Relaxation r;
  RelaxationGrad g;
};

// Nonnegative x with sigma'(x) = k, or NaN if there is none.
inline double critical_point(Activation act, double k) {
  if (act == Activation::sigmoid) {
    if (k <= 0.0 || k > 0.25) return k > 0.25 ? 0.0 : std::nan("");
    const double root = std::sqrt(std::max(0.0, 1.0 - 4.0 * k));
    const double s_hi = 0.5 * (1.0 + root);
    const double s_lo = k / s_hi;  // s_hi * s_lo = k, avoids cancellation
    return std::log(s_hi / s_lo);
  }
  // tanh: 1 - t^2 = k
  if (k <= 0.0 || k > 1.0) return k > 1.0 ? 0.0 : std::nan("");
  const double t = std::sqrt(1.0 - k);
  return 0.5 * std::log((1.0 + t) * (1.0 + t) / k);
}

inline RelaxationWithGrad relax_impl(Activation act, double l, double u) {
  if (!(l <= u)) {
    throw std::invalid_argument("relax: lower bound " + std::to_string(l) + " exceeds upper bound " +
                                std::to_string(u));
  }
  RelaxationWithGrad out;
  auto& r = out.r;
  auto& g = out.g;

  if (u - l < kDegenerateWidth) {
    if (act == Activation::relu) r.k = l > 0.0 ? 1.0 : 0.0;
    else r.k = activate_derivative(act, 0.5 * (l + u));
    r.m1 = r.m2 = activate(act, l) - r.k * l;
    return out;
  }

  if (act == Activation::relu) {
    switch (relu_case(l, u)) {
      case ReluCase::inactive: break;
      case ReluCase::active: r.k = 1.0; break;
      case ReluCase::unstable: {
        const double w = u - l;
        r.k = u / w;
        r.m2 = -u * l / w;
        g.dk_dl = u / (w * w);
        g.dk_du = -l / (w * w);
        g.dm2_dl = -(u * u) / (w * w);
        g.dm2_du = (l * l) / (w * w);
        break;
      }
    }
    return out;
  }

  // Smooth activations: chord slope, offsets from the extrema of sigma(x) - k x.
  const double w = u - l;
  const double sl = activate(act, l), su = activate(act, u);
  r.k = (su - sl) / w;
  g.dk_dl = (r.k - activate_derivative(act, l)) / w;
  g.dk_du = (activate_derivative(act, u) - r.k) / w;

  auto gap = [&](double x) { return activate(act, x) - r.k * x; };
  // Endpoint candidate; sigma(l) - k l == sigma(u) - k u up to rounding.
  double lo_val = std::min(gap(l), gap(u));
  double hi_val = std::max(gap(l), gap(u));
  double lo_at = std::nan(""), hi_at = std::nan("");  // NaN marks an endpoint extremum

  const double xc = critical_point(act, r.k);
  if (!std::isnan(xc)) {
    for (double x : {xc, -xc}) {
      if (x <= l || x >= u) continue;
      const double v = gap(x);
      if (v < lo_val) { lo_val = v; lo_at = x; }
      if (v > hi_val) { hi_val = v; hi_at = x; }
    }
  }
  r.m1 = lo_val;
  r.m2 = hi_val;

  // Envelope partials: interior extremum x_e gives dm = -x_e dk; the endpoint
  // value sigma(l) - k l is differentiated directly.
  const double end_dl = activate_derivative(act, l) - r.k - l * g.dk_dl;
  const double end_du = -l * g.dk_du;
  if (std::isnan(lo_at)) { g.dm1_dl = end_dl; g.dm1_du = end_du; }
  else { g.dm1_dl = -lo_at * g.dk_dl; g.dm1_du = -lo_at * g.dk_du; }
  if (std::isnan(hi_at)) { g.dm2_dl = end_dl; g.dm2_du = end_du; }
  else { g.dm2_dl = -hi_at * g.dk_dl; g.dm2_du = -hi_at * g.dk_du; }
  return out;
}

}  // namespace detail

/// Sound parallel-line relaxation of the activation over [l, u]. For ReLU this is
/// k = u/(u-l), m1 = 0, m2 = -ul/(u-l) on unstable neurons and exact otherwise.
inline Relaxation relax(Activation act, double l, double u) { return detail::relax_impl(act, l, u).r; }

/// Analytic partials of relax(act, l, u). Zero on degenerate intervals.
inline RelaxationGrad relax_grad(Activation act, double l, double u) {
  return detail::relax_impl(act, l, u).g;
}

}  // namespace nubox
