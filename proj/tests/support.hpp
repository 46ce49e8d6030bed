#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "nubox/nubox.hpp"

namespace nubox::fixtures {

// Two-input toy nets with one hidden ReLU layer; input (x, x).
// net 1: hidden a*(x1 - x2), output b*h.
inline Network toy_net1(double a, double b) {
  return Network(Activation::relu, {{Matrix{{a, -a}}, {0.0}}, {Matrix{{b}}, {0.0}}});
}

// net 2: hidden (a*(x1 - x2), a*(x2 - x1)), output b*(h1 + h2).
inline Network toy_net2(double a, double b) {
  return Network(Activation::relu, {{Matrix{{a, -a}, {-a, a}}, {0.0, 0.0}}, {Matrix{{b, b}}, {0.0}}});
}

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (double& v : m.data()) v = n(rng);
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (double& x : v) x = u(rng);
  return v;
}

/// Random MLP with the given sizes; weights N(0, 1/fan_in), small biases.
inline Network random_net(std::mt19937_64& rng, const std::vector<std::size_t>& sizes,
                          Activation act = Activation::relu) {
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    layers.push_back({random_matrix(rng, sizes[i + 1], sizes[i], 1.0 / std::sqrt(double(sizes[i]))),
                      random_vector(rng, sizes[i + 1], -0.1, 0.1)});
  }
  return Network(act, std::move(layers));
}

/// Sizes for a net with n_in inputs, h_lo..h_hi hidden layers of w_lo..w_hi neurons.
inline std::vector<std::size_t> random_sizes(std::mt19937_64& rng, std::size_t n_in, std::size_t n_out, int h_lo,
                                             int h_hi, std::size_t w_lo, std::size_t w_hi) {
  std::uniform_int_distribution<int> depth(h_lo, h_hi);
  std::uniform_int_distribution<std::size_t> width(w_lo, w_hi);
  std::vector<std::size_t> s{n_in};
  for (int i = depth(rng); i > 0; --i) s.push_back(width(rng));
  s.push_back(n_out);
  return s;
}

/// 1 -> 2 -> 3 -> 4 chain plus skips 1 -> 3 and 2 -> 4.
inline DagNetwork residual_net(std::mt19937_64& rng, std::size_t n_in, std::size_t width, std::size_t n_out) {
  const std::vector<std::size_t> sizes{n_in, width, width, n_out};
  std::vector<Edge> edges;
  auto add = [&](std::size_t f, std::size_t t) {
    edges.push_back({f, t, random_matrix(rng, sizes[t - 1], sizes[f - 1], 1.0 / std::sqrt(double(sizes[f - 1])))});
  };
  add(1, 2);
  add(2, 3);
  add(3, 4);
  add(1, 3);
  add(2, 4);
  std::vector<Vector> biases;
  for (std::size_t i = 1; i < sizes.size(); ++i) biases.push_back(random_vector(rng, sizes[i], -0.1, 0.1));
  return DagNetwork(Activation::relu, sizes, std::move(edges), std::move(biases));
}

/// z = (w.x, -w.x): class 0 while w.x > 0.
inline Network linear_classifier(const Vector& w) {
  Matrix m(2, w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    m(0, j) = w[j];
    m(1, j) = -w[j];
  }
  return Network(Activation::relu, {{m, {0.0, 0.0}}});
}

}  // namespace nubox::fixtures
