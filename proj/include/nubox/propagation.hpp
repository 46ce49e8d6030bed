#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "nubox/bounds.hpp"
#include "nubox/detail/chain_engine.hpp"
#include "nubox/network.hpp"

namespace nubox {

/// Layerwise interval propagation through the exact activation.
inline LayerBounds bounds_simple(const Network& net, const Budget& budget) {
  return detail::propagate_chain(net, budget, BoundMode::simple, nullptr);
}

/// Unfolded linear-relaxation propagation: every layer is bounded as an affine
/// function of all earlier relaxation offsets.
inline LayerBounds bounds_quadratic(const Network& net, const Budget& budget) {
  return detail::propagate_chain(net, budget, BoundMode::quadratic, nullptr);
}

/// Both paths in one pass; each layer keeps the elementwise tighter bound and
/// the tightened bounds feed both paths at the next layer.
inline LayerBounds bounds_combined(const Network& net, const Budget& budget) {
  return detail::propagate_chain(net, budget, BoundMode::combined, nullptr);
}

inline LayerBounds bounds(const Network& net, const Budget& budget, BoundMode mode) {
  return detail::propagate_chain(net, budget, mode, nullptr);
}

/// Combined bounds for a general feedforward DAG. Each node t is written as
///   z^(t) = phi^(t) + sum_{h<t} A^(h->t) m^(h),
/// with A^(h->t) = sum_{j->t, j>h} W^(j->t) D^(j) A^(h->j) + W^(h->t), the
/// composite path matrices folded with the incoming edge weights. A^(.->j) is
/// released once every consumer of node j has been processed.
/// Nodes fed only by the input are an exact affine image and use that bound.
inline LayerBounds bounds_general(const DagNetwork& dag, const Budget& budget) {
  topo_paths_check(dag);
  budget.validate(dag.size(1));
  const std::size_t n = dag.node_count();
  const Activation act = dag.activation();

  std::vector<std::size_t> last_use(n + 1, 0);
  for (const auto& e : dag.edges()) last_use[e.from] = std::max(last_use[e.from], e.to);

  std::vector<Vector> phi(n + 1), k(n + 1), m1(n + 1), m2(n + 1), post_lo(n + 1), post_hi(n + 1);
  std::vector<std::vector<std::optional<Matrix>>> a(n + 1);  // a[t][h] = A^(h->t)

  phi[1] = budget.x;
  k[1].assign(dag.size(1), 1.0);
  m1[1] = detail::negated(budget.eps);
  m2[1] = budget.eps;
  post_lo[1] = post_hi[1] = budget.x;
  for (std::size_t c = 0; c < budget.x.size(); ++c) {
    post_lo[1][c] -= budget.eps[c];
    post_hi[1][c] += budget.eps[c];
  }

  LayerBounds out;
  for (std::size_t t = 2; t <= n; ++t) {
    const auto in = dag.incoming(t);
    bool only_input = true;
    std::optional<Vector> phi_acc;
    std::vector<std::optional<Matrix>> a_t(t);
    for (const Edge* e : in) {
      if (e->from != 1) only_input = false;
      const Matrix wd = scale_columns(e->weight, k[e->from]);
      Vector p = matvec(wd, phi[e->from]);
      if (phi_acc) add_in_place(*phi_acc, p);
      else phi_acc = std::move(p);
      for (std::size_t h = 1; h < e->from; ++h) {
        if (!a[e->from][h]) continue;
        Matrix prod = matmul(wd, *a[e->from][h]);
        if (a_t[h]) add_in_place(*a_t[h], prod);
        else a_t[h] = std::move(prod);
      }
    }
    // Direct edges h->t enter after the path terms.
    for (const Edge* e : in) {
      if (a_t[e->from]) add_in_place(*a_t[e->from], e->weight);
      else a_t[e->from] = e->weight;
    }
    Vector p = phi_acc ? std::move(*phi_acc) : Vector(dag.size(t), 0.0);
    add_in_place(p, dag.bias(t));

    LayerBound lb;
    lb.quad_lower = p;
    lb.quad_upper = p;
    for (std::size_t h = 1; h < t; ++h) {
      if (a_t[h]) detail::accumulate_linear(*a_t[h], m1[h], m2[h], lb.quad_lower, lb.quad_upper);
    }
    if (only_input) {
      lb.lower = std::move(lb.quad_lower);
      lb.upper = std::move(lb.quad_upper);
      lb.quad_lower.clear();
      lb.quad_upper.clear();
    } else {
      lb.simple_lower.assign(dag.size(t), 0.0);
      lb.simple_upper.assign(dag.size(t), 0.0);
      for (const Edge* e : in) {
        detail::accumulate_interval(e->weight, post_lo[e->from], post_hi[e->from], lb.simple_lower,
                                    lb.simple_upper);
      }
      add_in_place(lb.simple_lower, dag.bias(t));
      add_in_place(lb.simple_upper, dag.bias(t));
      detail::select_combined(lb);
      detail::repair_crossed(lb.lower, lb.upper, nullptr, nullptr);
    }

    if (t < n) {
      const std::size_t sz = dag.size(t);
      lb.relax.resize(sz);
      k[t].resize(sz);
      m1[t].resize(sz);
      m2[t].resize(sz);
      for (std::size_t c = 0; c < sz; ++c) {
        lb.relax[c] = relax(act, lb.lower[c], lb.upper[c]);
        k[t][c] = lb.relax[c].k;
        m1[t][c] = lb.relax[c].m1;
        m2[t][c] = lb.relax[c].m2;
      }
      post_lo[t] = detail::post_activation(act, lb.lower);
      post_hi[t] = detail::post_activation(act, lb.upper);
      phi[t] = std::move(p);
      a[t] = std::move(a_t);
    }
    for (std::size_t j = 1; j <= t; ++j) {
      if (last_use[j] == t) a[j].clear();
    }
    out.layers.push_back(std::move(lb));
  }
  return out;
}

}  // namespace nubox
