#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nubox/io.hpp"
#include "nubox/network.hpp"

namespace nubox {

struct PgdConfig {
  double tau = 0.1;
  int iters = 20;
  double step = 0.0;  // <= 0 selects 2.5 * tau / iters

  double step_size() const { return step > 0.0 ? step : 2.5 * tau / std::max(iters, 1); }
};

struct TrainConfig {
  int epochs = 200;
  double lr = 0.05;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  double lr_decay = 0.5;  // step schedule: lr *= lr_decay every lr_decay_every epochs
  int lr_decay_every = 0; // 0 keeps lr constant
  std::optional<PgdConfig> adversarial;

  void validate() const {
    if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
    if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be > 0");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw std::invalid_argument("TrainConfig: lr_decay must be in (0, 1]");
    if (lr_decay_every < 0) throw std::invalid_argument("TrainConfig: lr_decay_every must be >= 0");
    if (adversarial) {
      if (!(adversarial->tau >= 0.0)) throw std::invalid_argument("TrainConfig: PGD tau must be >= 0");
      if (adversarial->iters < 0) throw std::invalid_argument("TrainConfig: PGD iters must be >= 0");
    }
  }
};

/// Uniform(-r, r) weights with r = sqrt(6 / (fan_in + fan_out)); zero biases.
inline Network init_network(const std::vector<std::size_t>& sizes, Activation act, std::uint64_t seed) {
  if (sizes.size() < 2) throw DimensionError("init_network: need at least two layer sizes");
  std::mt19937_64 rng(seed);
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const double r = std::sqrt(6.0 / static_cast<double>(sizes[i] + sizes[i + 1]));
    std::uniform_real_distribution<double> dist(-r, r);
    Matrix w(sizes[i + 1], sizes[i]);
    for (double& v : w.data()) v = dist(rng);
    layers.push_back({std::move(w), Vector(sizes[i + 1], 0.0)});
  }
  return Network(act, std::move(layers));
}

/// 2-D Voronoi task: n_classes seeds uniform in [-1,1]^2, n_points uniform points
/// labeled by their nearest seed (lowest class on ties). The first
/// floor(train_frac * n_points) points form the training split.
inline std::pair<Dataset, Dataset> gen_synthetic_2d(std::uint64_t seed, std::size_t n_classes = 10,
                                                    std::size_t n_points = 10000, double train_frac = 0.9) {
  if (n_classes < 2) throw std::invalid_argument("gen_synthetic_2d: need at least two classes");
  if (!(train_frac >= 0.0 && train_frac <= 1.0)) throw std::invalid_argument("gen_synthetic_2d: bad train_frac");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::vector<std::pair<double, double>> seeds(n_classes);
  for (auto& s : seeds) {
    s.first = coord(rng);
    s.second = coord(rng);
  }
  const auto n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n_points)));
  std::pair<Dataset, Dataset> out;
  for (std::size_t i = 0; i < n_points; ++i) {
    const double px = coord(rng);
    const double py = coord(rng);
    std::size_t label = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_classes; ++c) {
      const double dx = px - seeds[c].first, dy = py - seeds[c].second;
      const double d = dx * dx + dy * dy;
      if (d < best) {
        best = d;
        label = c;
      }
    }
    (i < n_train ? out.first : out.second).points.push_back({{px, py}, label});
  }
  return out;
}

struct ParamGrads {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;

  explicit ParamGrads(const Network& net) {
    for (const auto& l : net.layers()) {
      weight.emplace_back(l.weight.rows(), l.weight.cols());
      bias.emplace_back(l.bias.size(), 0.0);
    }
  }
};

/// Softmax cross-entropy of one example. Accumulates parameter gradients into
/// `pg` and writes d loss / d x into `dx` when those are non-null.
inline double cross_entropy(const Network& net, std::span<const double> x, std::size_t label, ParamGrads* pg,
                            Vector* dx) {
  const auto& layers = net.layers();
  const Activation act = net.activation();
  std::vector<Vector> post{Vector(x.begin(), x.end())};
  std::vector<Vector> pre;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Vector z = matvec(layers[i].weight, post.back());
    add_in_place(z, layers[i].bias);
    pre.push_back(z);
    if (i + 1 < layers.size()) {
      for (double& v : z) v = activate(act, v);
      post.push_back(std::move(z));
    }
  }
  const Vector& logits = pre.back();
  const double mx = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double v : logits) denom += std::exp(v - mx);
  const double loss = std::log(denom) + mx - logits[label];
  if (!pg && !dx) return loss;

  Vector delta(logits.size());
  for (std::size_t o = 0; o < logits.size(); ++o) delta[o] = std::exp(logits[o] - mx) / denom;
  delta[label] -= 1.0;
  for (std::size_t i = layers.size(); i-- > 0;) {
    const Matrix& w = layers[i].weight;
    const Vector& in = post[i];
    if (pg) {
      for (std::size_t r = 0; r < w.rows(); ++r) {
        auto grow = pg->weight[i].row(r);
        for (std::size_t c = 0; c < w.cols(); ++c) grow[c] += delta[r] * in[c];
        pg->bias[i][r] += delta[r];
      }
    }
    if (i == 0 && !dx) break;
    Vector back(w.cols(), 0.0);
    for (std::size_t r = 0; r < w.rows(); ++r)
      for (std::size_t c = 0; c < w.cols(); ++c) back[c] += w(r, c) * delta[r];
    if (i == 0) {
      *dx = std::move(back);
      break;
    }
    for (std::size_t c = 0; c < back.size(); ++c) back[c] *= activate_derivative(act, pre[i - 1][c]);
    delta = std::move(back);
  }
  return loss;
}

inline double mean_loss(const Network& net, const Dataset& ds) {
  double s = 0.0;
  for (const auto& p : ds.points) s += cross_entropy(net, p.features, p.label, nullptr, nullptr);
  return ds.points.empty() ? 0.0 : s / static_cast<double>(ds.points.size());
}

inline double accuracy(const Network& net, const Dataset& ds) {
  std::size_t hit = 0;
  for (const auto& p : ds.points) hit += argmax(forward(net, p.features)) == p.label;
  return ds.points.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(ds.points.size());
}

/// Projected sign-gradient ascent on the cross-entropy, started at x and
/// projected onto the l_inf ball of radius tau after every step.
inline Vector pgd_attack(const Network& net, const Vector& x, std::size_t label, double tau, int iters,
                         double step) {
  if (!(tau >= 0.0)) throw std::invalid_argument("pgd_attack: tau must be >= 0");
  Vector adv = x;
  Vector g;
  for (int it = 0; it < iters; ++it) {
    cross_entropy(net, adv, label, nullptr, &g);
    for (std::size_t j = 0; j < adv.size(); ++j) {
      const double s = g[j] > 0.0 ? 1.0 : (g[j] < 0.0 ? -1.0 : 0.0);
      adv[j] = std::clamp(adv[j] + step * s, x[j] - tau, x[j] + tau);
    }
  }
  return adv;
}

namespace detail {

inline Network run_training(Network net, const Dataset& ds, const TrainConfig& cfg, bool adversarial) {
  cfg.validate();
  check_dataset(ds, net.input_size(), net.output_size());
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  double lr = cfg.lr;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.lr_decay_every > 0 && epoch > 0 && epoch % cfg.lr_decay_every == 0) lr *= cfg.lr_decay;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      ParamGrads pg(net);
      for (std::size_t b = start; b < end; ++b) {
        const auto& p = ds.points[order[b]];
        if (adversarial) {
          const auto& a = *cfg.adversarial;
          const Vector adv = pgd_attack(net, p.features, p.label, a.tau, a.iters, a.step_size());
          cross_entropy(net, adv, p.label, &pg, nullptr);
        } else {
          cross_entropy(net, p.features, p.label, &pg, nullptr);
        }
      }
      const double scale = lr / static_cast<double>(end - start);
      auto& layers = net.mutable_layers();
      for (std::size_t i = 0; i < layers.size(); ++i) {
        auto& w = layers[i].weight.data();
        const auto& gw = pg.weight[i].data();
        for (std::size_t k = 0; k < w.size(); ++k) w[k] -= scale * gw[k];
        for (std::size_t k = 0; k < layers[i].bias.size(); ++k) layers[i].bias[k] -= scale * pg.bias[i][k];
      }
    }
  }
  return net;
}

}  // namespace detail

/// Mini-batch gradient descent on mean softmax cross-entropy.
inline Network train(Network net, const Dataset& ds, const TrainConfig& cfg) {
  return detail::run_training(std::move(net), ds, cfg, false);
}

/// As train(), with every example replaced by its PGD adversary under the current weights.
inline Network adversarial_train(Network net, const Dataset& ds, const TrainConfig& cfg) {
  if (!cfg.adversarial) throw std::invalid_argument("adversarial_train: config has no PGD settings");
  return detail::run_training(std::move(net), ds, cfg, true);
}

}  // namespace nubox
