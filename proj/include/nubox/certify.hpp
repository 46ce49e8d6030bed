#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "nubox/analysis.hpp"
#include "nubox/bounds.hpp"
#include "nubox/error.hpp"
#include "nubox/gradient.hpp"
#include "nubox/network.hpp"

namespace nubox {

/// Augmented-Lagrangian settings for non-uniform certification.
struct AlConfig {
  int outer_iters = 20;         // M
  int inner_steps = 50;         // gradient steps on zeta per outer iteration
  double inner_lr = 0.01;
  double lr_decay = 0.5;        // multiplied into the step every lr_decay_every outer iterations
  int lr_decay_every = 5;
  double rho0 = 1.0;            // rho^(i) = min(rho0 * rho_growth^(i-1), rho_max)
  double rho_growth = 2.0;
  double rho_max = 1e4;
  double grad_norm_cap = 10.0;  // zeta-gradient rescaled to this L2 norm when larger
  double eta = 0.99;            // feasibility shrink factor
  double delta = 1e-3;          // required logit margin
  double eps_init_scale = 0.9;  // warm start at eps_init_scale * uniform gamma*
  double gamma_hi = 10.0;       // uniform search interval [0, gamma_hi]
  double gamma_tol = 1e-6;

  double rho(int outer) const {  // outer is 1-based
    return std::min(rho0 * std::pow(rho_growth, outer - 1), rho_max);
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("AlConfig: " + m); };
    if (outer_iters < 1) fail("outer_iters must be >= 1");
    if (inner_steps < 1) fail("inner_steps must be >= 1");
    if (!(inner_lr > 0.0)) fail("inner_lr must be > 0");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) fail("lr_decay must be in (0, 1]");
    if (lr_decay_every < 1) fail("lr_decay_every must be >= 1");
    if (!(rho0 > 0.0)) fail("rho0 must be > 0");
    if (!(rho_growth >= 1.0)) fail("rho_growth must be >= 1 (non-decreasing schedule)");
    if (!(rho_max >= rho0)) fail("rho_max must be >= rho0");
    if (!(grad_norm_cap > 0.0)) fail("grad_norm_cap must be > 0");
    if (!(eta > 0.0 && eta < 1.0)) fail("eta must be in (0, 1)");
    if (!(delta >= 0.0)) fail("delta must be >= 0");
    if (!(eps_init_scale > 0.0 && eps_init_scale <= 1.0)) fail("eps_init_scale must be in (0, 1]");
    if (!(gamma_hi > 0.0) || !(gamma_tol > 0.0)) fail("gamma_hi and gamma_tol must be > 0");
  }
};

inline void to_json(nlohmann::json& j, const AlConfig& c) {
  j = {{"outer_iters", c.outer_iters}, {"inner_steps", c.inner_steps}, {"inner_lr", c.inner_lr},
       {"lr_decay", c.lr_decay}, {"lr_decay_every", c.lr_decay_every}, {"rho0", c.rho0},
       {"rho_growth", c.rho_growth}, {"rho_max", c.rho_max}, {"grad_norm_cap", c.grad_norm_cap},
       {"eta", c.eta}, {"delta", c.delta}, {"eps_init_scale", c.eps_init_scale},
       {"gamma_hi", c.gamma_hi}, {"gamma_tol", c.gamma_tol}};
}

/// Reads the fields present in `j` over the defaults; unknown keys are rejected.
inline AlConfig al_config_from_json(const nlohmann::json& j) {
  AlConfig c;
  if (!j.is_object()) throw FormatError("config must be a JSON object");
  nlohmann::json known;
  to_json(known, c);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw FormatError("unknown config key '" + key + "'");
    if (!value.is_number()) throw FormatError("config key '" + key + "' must be numeric");
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("outer_iters", c.outer_iters);
  get("inner_steps", c.inner_steps);
  get("inner_lr", c.inner_lr);
  get("lr_decay", c.lr_decay);
  get("lr_decay_every", c.lr_decay_every);
  get("rho0", c.rho0);
  get("rho_growth", c.rho_growth);
  get("rho_max", c.rho_max);
  get("grad_norm_cap", c.grad_norm_cap);
  get("eta", c.eta);
  get("delta", c.delta);
  get("eps_init_scale", c.eps_init_scale);
  get("gamma_hi", c.gamma_hi);
  get("gamma_tol", c.gamma_tol);
  c.validate();
  return c;
}

struct CertResult {
  Vector eps;
  Vector lambda;
  Vector v;  // final margin, re-verified by a fresh bound pass
  bool feasible = false;
  double geo_mean = 0.0;
  double neg_log_volume = 0.0;
  int iterations_used = 0;
  int shrink_steps = 0;
  double gamma_uniform = 0.0;   // certified uniform bound used for the warm start
  bool kept_warm_start = false; // optimizer did not beat the uniform solution
};

namespace detail {

inline bool margin_feasible(const Network& net, const Vector& x, const Vector& eps, std::size_t c, double delta) {
  return margin_only(net, Budget{x, eps}, c, delta).nonnegative();
}

}  // namespace detail

/// Largest gamma in [0, gamma_hi] (to tol, by bisection) for which the box
/// x +- gamma certifies class c with margin delta. The returned gamma is feasible.
inline double certify_uniform(const Network& net, const Vector& x, std::size_t c, double delta,
                              double gamma_hi = 10.0, double tol = 1e-6) {
  check_class(c, net.output_size());
  check_input(net.input_size(), x.size(), "certify_uniform");
  if (!(gamma_hi > 0.0) || !(tol > 0.0)) throw std::invalid_argument("certify_uniform: gamma_hi and tol must be > 0");
  if (!margin_only(net, uniform_budget(x, 0.0), c, delta).nonnegative()) {
    throw CertificationError("point is not classified as " + std::to_string(c) + " with margin " +
                             std::to_string(delta));
  }
  if (margin_only(net, uniform_budget(x, gamma_hi), c, delta).nonnegative()) return gamma_hi;
  double lo = 0.0, hi = gamma_hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (margin_only(net, uniform_budget(x, mid), c, delta).nonnegative()) lo = mid;
    else hi = mid;
  }
  return lo;
}

/// argmin over y >= 0 of <lambda, v - y> + rho/2 |v - y|^2.
inline Vector optimal_slack(const Vector& v, const Vector& lambda, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("optimal_slack: rho must be > 0");
  if (v.size() != lambda.size()) throw DimensionError("optimal_slack: v and lambda differ in length");
  Vector y(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) y[i] = std::max(0.0, v[i] + lambda[i] / rho);
  return y;
}

/// -sum log eps + <lambda, v - y> + rho/2 |v - y|^2
inline double lagrangian_value(const Vector& eps, const Vector& v, const Vector& y, const Vector& lambda,
                               double rho) {
  if (v.size() != y.size() || v.size() != lambda.size()) throw DimensionError("lagrangian_value: length mismatch");
  double val = neg_log_volume(eps);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = v[i] - y[i];
    val += lambda[i] * r + 0.5 * rho * r * r;
  }
  return val;
}

struct ShrinkResult {
  Vector eps;
  int steps = 0;  // eps_out = eta^steps * eps_in
};

/// Multiplies eps by eta until the margin is nonnegative.
inline ShrinkResult shrink_to_feasible(const Network& net, const Vector& x, std::size_t c, Vector eps, double eta,
                                       double delta) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("shrink_to_feasible: eta must be in (0, 1)");
  ShrinkResult r;
  while (!detail::margin_feasible(net, x, eps, c, delta)) {
    for (double& e : eps) e *= eta;
    ++r.steps;
    if (*std::max_element(eps.begin(), eps.end()) < 1e-12) {
      throw CertificationError("no feasible budget: eps collapsed below 1e-12 (point misclassified?)");
    }
  }
  r.eps = std::move(eps);
  return r;
}

/// Non-uniform certification by the augmented Lagrangian method.
///
/// Starting from a warm start inside the certified uniform box, each outer
/// iteration runs gradient descent on zeta (eps = zeta^2) against
///   -sum log eps + <lambda, v - y> + rho/2 |v - y|^2,  y = max(0, v + lambda/rho),
/// then applies the dual step lambda += rho (v - y). The last iterate is shrunk by
/// eta until v >= 0. The returned box is the best-volume feasible box among the
/// shrunk iterate, feasible outer iterates, and the uniform solution itself.
inline CertResult certify_nonuniform(const Network& net, const Vector& x, std::size_t c,
                                     const AlConfig& cfg = {}) {
  cfg.validate();
  const double gamma = certify_uniform(net, x, c, cfg.delta, cfg.gamma_hi, cfg.gamma_tol);
  if (!(gamma > 0.0)) throw CertificationError("no positive uniform budget can be certified");

  const std::size_t n = x.size();
  CertResult res;
  res.gamma_uniform = gamma;

  Vector best(n, gamma);
  double best_geo = gamma;
  bool best_is_warm = true;

  Vector zeta(n, std::sqrt(cfg.eps_init_scale * gamma));
  Vector eps(n);
  auto sync_eps = [&] {
    for (std::size_t j = 0; j < n; ++j) eps[j] = zeta[j] * zeta[j];
  };
  sync_eps();

  Vector lambda(net.output_size() - 1, 0.0);
  double lr = cfg.inner_lr;
  Vector grad(n);

  for (int outer = 1; outer <= cfg.outer_iters; ++outer) {
    const double rho = cfg.rho(outer);
    for (int step = 0; step < cfg.inner_steps; ++step) {
      const Margin m = margin_and_grad(net, Budget{x, eps}, c, cfg.delta);
      const Vector y = optimal_slack(m.v, lambda, rho);
      for (std::size_t j = 0; j < n; ++j) {
        double g = -1.0 / eps[j];
        for (std::size_t r = 0; r < m.v.size(); ++r) g += m.dv_deps(r, j) * (lambda[r] + rho * (m.v[r] - y[r]));
        grad[j] = 2.0 * zeta[j] * g;
      }
      if (!all_finite(grad)) throw NumericError("non-finite gradient", outer);
      const double gn = norm2(grad);
      const double scale = gn > cfg.grad_norm_cap ? cfg.grad_norm_cap / gn : 1.0;
      for (std::size_t j = 0; j < n; ++j) zeta[j] -= lr * scale * grad[j];
      sync_eps();
      for (double e : eps) {
        if (!(e > 0.0) || !std::isfinite(e)) throw NumericError("eps left the positive orthant", outer);
      }
    }
    const Margin m = margin_only(net, Budget{x, eps}, c, cfg.delta);
    const Vector y = optimal_slack(m.v, lambda, rho);
    for (std::size_t r = 0; r < lambda.size(); ++r) lambda[r] += rho * (m.v[r] - y[r]);
    if (m.nonnegative()) {
      const double g = geo_mean_volume(eps);
      if (g > best_geo) {
        best_geo = g;
        best = eps;
        best_is_warm = false;
      }
    }
    if (outer % cfg.lr_decay_every == 0) lr *= cfg.lr_decay;
    res.iterations_used = outer;
  }

  const ShrinkResult shrunk = shrink_to_feasible(net, x, c, eps, cfg.eta, cfg.delta);
  res.shrink_steps = shrunk.steps;
  if (const double g = geo_mean_volume(shrunk.eps); g > best_geo) {
    best_geo = g;
    best = shrunk.eps;
    best_is_warm = false;
  }

  const Margin final_margin = margin_only(net, Budget{x, best}, c, cfg.delta);
  res.eps = std::move(best);
  res.lambda = std::move(lambda);
  res.v = final_margin.v;
  res.feasible = final_margin.nonnegative();
  res.geo_mean = geo_mean_volume(res.eps);
  res.neg_log_volume = neg_log_volume(res.eps);
  res.kept_warm_start = best_is_warm;
  return res;
}

}  // namespace nubox
