#pragma once

#include <cstddef>
#include <vector>

#include "nubox/bounds.hpp"
#include "nubox/matrix.hpp"
#include "nubox/network.hpp"
#include "nubox/relaxation.hpp"

namespace nubox::detail {

// lo += M_+ m1 + M_- m2, hi += M_+ m2 + M_- m1, accumulated column by column.
inline void accumulate_linear(const Matrix& m, const Vector& m1, const Vector& m2, Vector& lo, Vector& hi) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    double a = lo[r], b = hi[r];
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double w = row[c];
      if (w > 0.0) { a += w * m1[c]; b += w * m2[c]; }
      else if (w < 0.0) { a += w * m2[c]; b += w * m1[c]; }
    }
    lo[r] = a;
    hi[r] = b;
  }
}

// lo += W_+ in_lo + W_- in_hi, hi += W_+ in_hi + W_- in_lo.
inline void accumulate_interval(const Matrix& w, const Vector& in_lo, const Vector& in_hi, Vector& lo,
                                Vector& hi) {
  accumulate_linear(w, in_lo, in_hi, lo, hi);
}

// Derivative of accumulate_linear w.r.t. eps. gm holds dM/deps_k per k (empty = 0);
// gm1/gm2 are (cols x n1). Entries of M equal to 0 contribute subgradient 0.
inline void accumulate_linear_grad(const Matrix& m, const std::vector<Matrix>& gm, const Vector& m1,
                                   const Vector& m2, const Matrix& gm1, const Matrix& gm2, Matrix& glo,
                                   Matrix& ghi) {
  const std::size_t n1 = glo.cols();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto lo_row = glo.row(r);
    auto hi_row = ghi.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double w = m(r, c);
      if (w == 0.0) continue;
      const bool pos = w > 0.0;
      const auto g_lo_m = pos ? gm1.row(c) : gm2.row(c);
      const auto g_hi_m = pos ? gm2.row(c) : gm1.row(c);
      const double lo_m = pos ? m1[c] : m2[c];
      const double hi_m = pos ? m2[c] : m1[c];
      for (std::size_t k = 0; k < n1; ++k) {
        double dlo = w * g_lo_m[k];
        double dhi = w * g_hi_m[k];
        if (!gm.empty()) {
          const double dw = gm[k](r, c);
          dlo += dw * lo_m;
          dhi += dw * hi_m;
        }
        lo_row[k] += dlo;
        hi_row[k] += dhi;
      }
    }
  }
}

// Rows of d/deps of an interval step through a monotone activation.
inline void accumulate_interval_grad(const Matrix& w, Activation act, const Vector& pre_lo, const Vector& pre_hi,
                                     const Matrix& g_pre_lo, const Matrix& g_pre_hi, Matrix& glo, Matrix& ghi) {
  const std::size_t n1 = glo.cols();
  Matrix g_post_lo = g_pre_lo, g_post_hi = g_pre_hi;
  for (std::size_t c = 0; c < pre_lo.size(); ++c) {
    const double dl = activate_derivative(act, pre_lo[c]);
    const double du = activate_derivative(act, pre_hi[c]);
    for (std::size_t k = 0; k < n1; ++k) {
      g_post_lo(c, k) *= dl;
      g_post_hi(c, k) *= du;
    }
  }
  for (std::size_t r = 0; r < w.rows(); ++r) {
    auto lo_row = glo.row(r);
    auto hi_row = ghi.row(r);
    for (std::size_t c = 0; c < w.cols(); ++c) {
      const double wv = w(r, c);
      if (wv == 0.0) continue;
      const auto a = wv > 0.0 ? g_post_lo.row(c) : g_post_hi.row(c);
      const auto b = wv > 0.0 ? g_post_hi.row(c) : g_post_lo.row(c);
      for (std::size_t k = 0; k < n1; ++k) {
        lo_row[k] += wv * a[k];
        hi_row[k] += wv * b[k];
      }
    }
  }
}

inline Vector negated(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = -v[i];
  return out;
}

inline Vector post_activation(Activation act, const Vector& z) {
  Vector out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = activate(act, z[i]);
  return out;
}

// Combines the two candidate intervals of a layer. Exact ties pick the quadratic path.
inline void select_combined(LayerBound& lb) {
  const std::size_t n = lb.simple_lower.size();
  lb.lower.resize(n);
  lb.upper.resize(n);
  lb.lower_from_simple.assign(n, 0);
  lb.upper_from_simple.assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    if (lb.simple_lower[r] > lb.quad_lower[r]) {
      lb.lower[r] = lb.simple_lower[r];
      lb.lower_from_simple[r] = 1;
    } else {
      lb.lower[r] = lb.quad_lower[r];
    }
    if (lb.simple_upper[r] < lb.quad_upper[r]) {
      lb.upper[r] = lb.simple_upper[r];
      lb.upper_from_simple[r] = 1;
    } else {
      lb.upper[r] = lb.quad_upper[r];
    }
  }
}

// Both candidate intervals contain the true range, so their intersection can
// only be empty through rounding when the range collapses to a point.
inline void repair_crossed(Vector& lo, Vector& hi, Matrix* glo, Matrix* ghi) {
  for (std::size_t r = 0; r < lo.size(); ++r) {
    if (lo[r] <= hi[r]) continue;
    const double mid = 0.5 * (lo[r] + hi[r]);
    lo[r] = hi[r] = mid;
    if (glo && ghi) {
      for (std::size_t k = 0; k < glo->cols(); ++k) {
        const double g = 0.5 * ((*glo)(r, k) + (*ghi)(r, k));
        (*glo)(r, k) = (*ghi)(r, k) = g;
      }
    }
  }
}

/// Layerwise bound propagation over a chain network. Runs the simple path, the
/// quadratic path, or both interleaved with per-layer tightening. When `grad` is
/// non-null the eps-gradients are carried along in the same loop; the primal
/// arithmetic is identical either way.
inline LayerBounds propagate_chain(const Network& net, const Budget& budget, BoundMode mode, BoundGrad* grad) {
  budget.validate(net.input_size());
  const auto& layers = net.layers();
  const Activation act = net.activation();
  const std::size_t n1 = net.input_size();
  const bool run_simple = mode != BoundMode::quadratic;
  const bool run_quad = mode != BoundMode::simple;
  const bool want_grad = grad != nullptr;

  LayerBounds out;

  // Quadratic-path state: z = phi + sum_j M[j] m^(j), m1s[j] <= m^(j) <= m2s[j].
  const Matrix& w1 = layers.front().weight;
  Vector phi = matvec(w1, budget.x);
  add_in_place(phi, layers.front().bias);
  std::vector<Matrix> ms{w1};
  std::vector<Vector> m1s{negated(budget.eps)};
  std::vector<Vector> m2s{budget.eps};

  LayerBound first;
  first.lower = phi;
  first.upper = phi;
  accumulate_linear(w1, m1s[0], m2s[0], first.lower, first.upper);
  out.layers.push_back(std::move(first));

  // Gradient state (per eps coordinate k).
  Matrix gphi;
  std::vector<std::vector<Matrix>> gms;  // gms[j][k] = dM[j]/deps_k; empty = 0
  std::vector<Matrix> gm1s, gm2s;
  LayerGrad cur_grad;
  if (want_grad) {
    gphi = Matrix(phi.size(), n1);
    gms.emplace_back();
    Matrix eye = Matrix::identity(n1), neg_eye = Matrix::identity(n1);
    for (double& v : neg_eye.data()) v = -v;
    gm1s.push_back(neg_eye);
    gm2s.push_back(eye);
    cur_grad = {Matrix(phi.size(), n1), Matrix(phi.size(), n1)};
    accumulate_linear_grad(w1, {}, m1s[0], m2s[0], gm1s[0], gm2s[0], cur_grad.lower, cur_grad.upper);
    grad->layers.clear();
    grad->layers.push_back(cur_grad);
  }

  for (std::size_t li = 1; li < layers.size(); ++li) {
    LayerBound& prev = out.layers.back();
    const Matrix& w = layers[li].weight;
    const Vector& bias = layers[li].bias;
    const std::size_t n_in = prev.lower.size();
    const std::size_t n_out = w.rows();
    LayerBound next;
    LayerGrad g_simple, g_quad;

    if (run_simple) {
      next.simple_lower.assign(n_out, 0.0);
      next.simple_upper.assign(n_out, 0.0);
      accumulate_interval(w, post_activation(act, prev.lower), post_activation(act, prev.upper),
                          next.simple_lower, next.simple_upper);
      add_in_place(next.simple_lower, bias);
      add_in_place(next.simple_upper, bias);
      if (want_grad) {
        g_simple = {Matrix(n_out, n1), Matrix(n_out, n1)};
        accumulate_interval_grad(w, act, prev.lower, prev.upper, cur_grad.lower, cur_grad.upper, g_simple.lower,
                                 g_simple.upper);
      }
    }

    if (run_quad) {
      prev.relax.resize(n_in);
      Vector k(n_in), m1(n_in), m2(n_in);
      Matrix gk, gm1, gm2;
      if (want_grad) gk = gm1 = gm2 = Matrix(n_in, n1);
      for (std::size_t c = 0; c < n_in; ++c) {
        const auto rg = relax_impl(act, prev.lower[c], prev.upper[c]);
        prev.relax[c] = rg.r;
        k[c] = rg.r.k;
        m1[c] = rg.r.m1;
        m2[c] = rg.r.m2;
        if (want_grad) {
          for (std::size_t e = 0; e < n1; ++e) {
            const double gl = cur_grad.lower(c, e), gu = cur_grad.upper(c, e);
            gk(c, e) = rg.g.dk_dl * gl + rg.g.dk_du * gu;
            gm1(c, e) = rg.g.dm1_dl * gl + rg.g.dm1_du * gu;
            gm2(c, e) = rg.g.dm2_dl * gl + rg.g.dm2_du * gu;
          }
        }
      }

      const Matrix wd = scale_columns(w, k);
      std::vector<Matrix> w_dk;  // W diag(dk/deps_e)
      if (want_grad) {
        w_dk.reserve(n1);
        for (std::size_t e = 0; e < n1; ++e) {
          Vector col(n_in);
          for (std::size_t c = 0; c < n_in; ++c) col[c] = gk(c, e);
          w_dk.push_back(scale_columns(w, col));
        }
        for (std::size_t j = 0; j < ms.size(); ++j) {
          std::vector<Matrix> updated(n1);
          for (std::size_t e = 0; e < n1; ++e) {
            updated[e] = matmul(w_dk[e], ms[j]);
            if (!gms[j].empty()) add_in_place(updated[e], matmul(wd, gms[j][e]));
          }
          gms[j] = std::move(updated);
        }
        Matrix gphi_next(n_out, n1);
        for (std::size_t e = 0; e < n1; ++e) {
          Vector gcol(n_in);
          for (std::size_t c = 0; c < n_in; ++c) gcol[c] = gphi(c, e);
          Vector a = matvec(w_dk[e], phi);
          add_in_place(a, matvec(wd, gcol));
          for (std::size_t r = 0; r < n_out; ++r) gphi_next(r, e) = a[r];
        }
        gphi = std::move(gphi_next);
        gms.emplace_back();
        gm1s.push_back(std::move(gm1));
        gm2s.push_back(std::move(gm2));
      }

      for (auto& m : ms) m = matmul(wd, m);
      ms.push_back(w);
      m1s.push_back(std::move(m1));
      m2s.push_back(std::move(m2));
      phi = matvec(wd, phi);
      add_in_place(phi, bias);

      next.quad_lower = phi;
      next.quad_upper = phi;
      for (std::size_t j = 0; j < ms.size(); ++j) {
        accumulate_linear(ms[j], m1s[j], m2s[j], next.quad_lower, next.quad_upper);
      }
      if (want_grad) {
        g_quad = {gphi, gphi};
        for (std::size_t j = 0; j < ms.size(); ++j) {
          accumulate_linear_grad(ms[j], gms[j], m1s[j], m2s[j], gm1s[j], gm2s[j], g_quad.lower, g_quad.upper);
        }
      }
    }

    LayerGrad g_next;
    switch (mode) {
      case BoundMode::simple:
        next.lower = next.simple_lower;
        next.upper = next.simple_upper;
        g_next = std::move(g_simple);
        break;
      case BoundMode::quadratic:
        next.lower = next.quad_lower;
        next.upper = next.quad_upper;
        g_next = std::move(g_quad);
        break;
      case BoundMode::combined:
        select_combined(next);
        if (want_grad) {
          g_next = {Matrix(n_out, n1), Matrix(n_out, n1)};
          for (std::size_t r = 0; r < n_out; ++r) {
            const auto lo_src = next.lower_from_simple[r] ? g_simple.lower.row(r) : g_quad.lower.row(r);
            const auto hi_src = next.upper_from_simple[r] ? g_simple.upper.row(r) : g_quad.upper.row(r);
            std::copy(lo_src.begin(), lo_src.end(), g_next.lower.row(r).begin());
            std::copy(hi_src.begin(), hi_src.end(), g_next.upper.row(r).begin());
          }
        }
        repair_crossed(next.lower, next.upper, want_grad ? &g_next.lower : nullptr,
                       want_grad ? &g_next.upper : nullptr);
        break;
    }

    out.layers.push_back(std::move(next));
    if (want_grad) {
      cur_grad = std::move(g_next);
      grad->layers.push_back(cur_grad);
    }
  }

  if (want_grad) {
    grad->dl_deps = cur_grad.lower;
    grad->du_deps = cur_grad.upper;
  }
  return out;
}

}  // namespace nubox::detail
