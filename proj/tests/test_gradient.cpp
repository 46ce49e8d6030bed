#include <gtest/gtest.h>

#include <random>

#include "nubox/gradcheck.hpp"
#include "nubox/gradient.hpp"
#include "support.hpp"

using namespace nubox;

TEST(BoundGradient, SingleAffineLayer) {
  const Matrix w{{1, -2, 0.5}, {-3, 4, 0}};
  const Network net(Activation::relu, {{w, {0.1, -0.2}}});
  const auto g = bounds_with_grad(net, {{0.1, 0.2, 0.3}, {0.1, 0.1, 0.1}});
  EXPECT_EQ(g.grad.du_deps, abs(w));
  Matrix neg = abs(w);
  for (double& v : neg.data()) v = -v;
  EXPECT_EQ(g.grad.dl_deps, neg);
}

TEST(BoundGradient, ToyNetQuadraticLower) {
  const Network net = fixtures::toy_net1(1, 1);
  const auto g = bounds_with_grad(net, uniform_budget({0.5, 0.5}, 0.1), BoundMode::quadratic);
  EXPECT_NEAR(g.grad.dl_deps(0, 0), -0.5, 1e-12);
  EXPECT_NEAR(g.grad.dl_deps(0, 1), -0.5, 1e-12);
  // central differences on the quadratic lower bound, one coordinate at a time
  for (std::size_t k = 0; k < 2; ++k) {
    Budget p = uniform_budget({0.5, 0.5}, 0.1), m = p;
    p.eps[k] += 1e-6;
    m.eps[k] -= 1e-6;
    const double fd =
        (bounds_quadratic(net, p).output_lower()[0] - bounds_quadratic(net, m).output_lower()[0]) / 2e-6;
    EXPECT_NEAR(fd, -0.5, 1e-8);
  }
}

TEST(BoundGradient, ValuesMatchPrimalExactly) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    const Network net = fixtures::random_net(rng, fixtures::random_sizes(rng, 3, 3, 1, 3, 3, 12));
    const Budget b{fixtures::random_vector(rng, 3, -1, 1), fixtures::random_vector(rng, 3, 0.01, 0.3)};
    for (BoundMode m : {BoundMode::simple, BoundMode::quadratic, BoundMode::combined}) {
      const auto g = bounds_with_grad(net, b, m);
      const auto p = bounds(net, b, m);
      EXPECT_EQ(g.bounds.output_lower(), p.output_lower());
      EXPECT_EQ(g.bounds.output_upper(), p.output_upper());
    }
  }
}

TEST(BoundGradient, MatchesFiniteDifferencesAwayFromFlips) {
  std::mt19937_64 rng(32);
  for (Activation act : {Activation::relu, Activation::sigmoid, Activation::tanh}) {
    std::size_t coords = 0;
    for (int t = 0; t < 30; ++t) {
      const Network net = fixtures::random_net(rng, fixtures::random_sizes(rng, 3, 3, 1, 3, 3, 12), act);
      const Budget b{fixtures::random_vector(rng, 3, -1, 1), fixtures::random_vector(rng, 3, 0.01, 0.3)};
      for (BoundMode m : {BoundMode::simple, BoundMode::quadratic, BoundMode::combined}) {
        const auto rep = check_bound_gradient(net, b, 1e-6, 1e-4, m);
        coords += rep.coords;
        EXPECT_LE(rep.max_rel_error_smooth, 1e-4) << to_string(act);
        EXPECT_FALSE(rep.unexplained_failures());
      }
    }
    EXPECT_GT(coords, 0u);
  }
}

TEST(Margin, LinearClassifier) {
  const Network net(Activation::relu, {{Matrix{{1}, {-1}}, {0, 0}}});
  const Margin m = margin_and_grad(net, {{0.5}, {0.2}}, 0, 0.0);
  ASSERT_EQ(m.v.size(), 1u);
  EXPECT_NEAR(m.v[0], 0.6, 1e-15);
  EXPECT_NEAR(m.dv_deps(0, 0), -2.0, 1e-15);
}

TEST(Margin, ZeroBudgetAndDeltaShift) {
  std::mt19937_64 rng(33);
  const Network net = fixtures::random_net(rng, {3, 8, 4});
  const Budget zero{fixtures::random_vector(rng, 3, -1, 1), Vector(3, 0.0)};
  const Vector z = forward(net, zero.x);
  const Margin m = margin_and_grad(net, zero, 2, 0.0);
  for (std::size_t r = 0; r < m.v.size(); ++r) EXPECT_NEAR(m.v[r], z[2] - z[m.classes[r]], 1e-12);

  const Budget b{zero.x, Vector(3, 0.1)};
  const Margin a = margin_and_grad(net, b, 1, 0.0), d = margin_and_grad(net, b, 1, 0.25);
  for (std::size_t r = 0; r < a.v.size(); ++r) EXPECT_DOUBLE_EQ(a.v[r] - 0.25, d.v[r]);
  EXPECT_EQ(a.dv_deps, d.dv_deps);
}

TEST(Margin, RejectsBadClass) {
  const Network net = fixtures::toy_net2(1, 1);
  EXPECT_THROW(margin_and_grad(net, uniform_budget({0, 0}, 0.1), 0, 0.0), DimensionError);
  const Network two(Activation::relu, {{Matrix{{1}, {-1}}, {0, 0}}});
  EXPECT_THROW(margin_and_grad(two, {{0.5}, {0.1}}, 2, 0.0), DimensionError);
}
