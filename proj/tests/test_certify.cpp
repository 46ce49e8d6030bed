#include <gtest/gtest.h>

#include <random>

#include "nubox/certify.hpp"
#include "nubox/oracle.hpp"
#include "support.hpp"

using namespace nubox;

namespace {

const Network& flip_net() {
  static const Network net(Activation::relu, {{Matrix{{1}, {-1}}, {0, 0}}});
  return net;
}

// Largest geometric mean over a log-spaced grid of boxes that the affine
// bounds certify; for a linear classifier the margin is 2 (w.x - |w|.eps) - delta.
double grid_optimum(const Vector& w, const Vector& x, double delta) {
  const double c = dot(w, x) - delta / 2.0;
  double best = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double e0 = std::exp(std::log(1e-3) + (std::log(50.0) - std::log(1e-3)) * i / 4000.0);
    const double rest = c - std::fabs(w[0]) * e0;
    if (rest <= 0) break;
    const double e1 = rest / std::fabs(w[1]);  // tight in the remaining coordinate
    best = std::max(best, std::sqrt(e0 * e1));
  }
  return best;
}

}  // namespace

TEST(CertifyUniform, LinearClassifierRoot) {
  const double g = certify_uniform(flip_net(), {0.5}, 0, 0.0);
  EXPECT_NEAR(g, 0.5, 1e-6);
  EXPECT_LE(g, 0.5);
  EXPECT_TRUE(margin_only(flip_net(), uniform_budget({0.5}, g), 0, 0.0).nonnegative());
}

TEST(CertifyUniform, MisclassifiedAndZeroRoom) {
  EXPECT_THROW(certify_uniform(flip_net(), {0.5}, 1, 0.0), CertificationError);
  // forward margin is exactly 1
  EXPECT_EQ(certify_uniform(flip_net(), {0.5}, 0, 1.0), 0.0);
}

TEST(Slack, Examples) {
  EXPECT_EQ(optimal_slack({1}, {0}, 10), (Vector{1}));
  EXPECT_EQ(optimal_slack({-2}, {0}, 10), (Vector{0}));
  EXPECT_EQ(optimal_slack({-1}, {5}, 10), (Vector{0}));
  EXPECT_EQ(optimal_slack({-1}, {15}, 10), (Vector{0.5}));
  EXPECT_THROW(optimal_slack({1}, {0}, 0), std::invalid_argument);
}

TEST(Lagrangian, Examples) {
  EXPECT_DOUBLE_EQ(lagrangian_value({1, 1}, {0.3}, {0.3}, {7}, 3), 0.0);
  EXPECT_NEAR(lagrangian_value({0.5, 0.5}, {0.3}, {0.3}, {7}, 3), 2 * std::log(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(lagrangian_value({1}, {1}, {0}, {0}, 2), 1.0);
}

TEST(Shrink, AlreadyFeasibleIsUnchanged) {
  const auto r = shrink_to_feasible(flip_net(), {0.5}, 0, {0.3}, 0.99, 0.0);
  EXPECT_EQ(r.steps, 0);
  EXPECT_EQ(r.eps, (Vector{0.3}));
}

TEST(Shrink, StepCountFromClosedForm) {
  const double gamma = 0.5;
  const auto r = shrink_to_feasible(flip_net(), {0.5}, 0, {2 * gamma}, 0.99, 0.0);
  const int expect = static_cast<int>(std::ceil(std::log(0.5) / std::log(0.99)));
  EXPECT_EQ(expect, 69);
  EXPECT_EQ(r.steps, expect);
  EXPECT_LE(r.eps[0], gamma);
  EXPECT_THROW(shrink_to_feasible(flip_net(), {0.5}, 1, {0.1}, 0.99, 0.0), CertificationError);
  EXPECT_THROW(shrink_to_feasible(flip_net(), {0.5}, 0, {0.1}, 1.0, 0.0), std::invalid_argument);
}

TEST(CertifyNonuniform, LinearClassifierNearOptimum) {
  const Vector w{1, 0.1}, x{1, 1};
  const Network net = fixtures::linear_classifier(w);
  AlConfig cfg;
  cfg.delta = 0.0;
  const CertResult r = certify_nonuniform(net, x, 0, cfg);
  const double opt = grid_optimum(w, x, 0.0);
  EXPECT_NEAR(opt, std::sqrt(0.55 * 5.5), 1e-3);
  ASSERT_TRUE(r.feasible);
  EXPECT_GE(r.geo_mean, 0.95 * opt);
  EXPECT_LE(r.geo_mean, opt + 1e-9);
  EXPECT_NEAR(r.gamma_uniform, 1.0, 1e-6);
  EXPECT_GE(r.geo_mean / r.gamma_uniform, 1.5);
  EXPECT_NEAR(r.geo_mean, geo_mean_volume(r.eps), 1e-12);
  EXPECT_TRUE(margin_only(net, {x, r.eps}, 0, 0.0).nonnegative());
}

TEST(CertifyNonuniform, NeverWorseThanUniform) {
  std::mt19937_64 rng(41);
  int done = 0;
  for (int t = 0; t < 40 && done < 8; ++t) {
    const Network net = fixtures::random_net(rng, {2, 8, 8, 3});
    const Vector x = fixtures::random_vector(rng, 2, -1, 1);
    const std::size_t c = argmax(forward(net, x));
    AlConfig cfg;
    cfg.outer_iters = 6;
    cfg.inner_steps = 20;
    CertResult r;
    try {
      r = certify_nonuniform(net, x, c, cfg);
    } catch (const CertificationError&) {
      continue;  // margin below delta
    }
    ++done;
    EXPECT_TRUE(r.feasible);
    EXPECT_GE(r.geo_mean, r.gamma_uniform - 1e-9);
    EXPECT_TRUE(margin_only(net, {x, r.eps}, c, cfg.delta).nonnegative());
  }
  EXPECT_GT(done, 0);
}

TEST(CertifyNonuniform, ToyNetBoxPassesOracles) {
  // two outputs: the toy net's logit against a constant 0.05 - logit
  const Network net(Activation::relu,
                    {{Matrix{{1, -1}, {-1, 1}}, {0, 0}}, {Matrix{{-1, -1}, {1, 1}}, {0.3, 0.0}}});
  const Vector x{0.5, 0.5};
  ASSERT_EQ(argmax(forward(net, x)), 0u);
  const CertResult r = certify_nonuniform(net, x, 0);
  ASSERT_TRUE(r.feasible);
  const Budget b{x, r.eps};
  EXPECT_EQ(sample_soundness(net, b, bounds_combined(net, b), 100000, 1), 0u);
  EXPECT_TRUE(prediction_constant(net, b, 0, 200));
}

TEST(CertifyNonuniform, MisclassifiedPointThrows) {
  EXPECT_THROW(certify_nonuniform(flip_net(), {0.5}, 1), CertificationError);
  EXPECT_THROW(certify_nonuniform(flip_net(), {-0.5}, 0), CertificationError);
}

TEST(AlConfigTest, JsonAndValidation) {
  const AlConfig c = al_config_from_json(nlohmann::json::parse(R"({"outer_iters": 3, "eta": 0.9})"));
  EXPECT_EQ(c.outer_iters, 3);
  EXPECT_EQ(c.eta, 0.9);
  EXPECT_EQ(c.inner_steps, 50);
  EXPECT_THROW(al_config_from_json(nlohmann::json::parse(R"({"bogus": 1})")), FormatError);
  EXPECT_THROW(al_config_from_json(nlohmann::json::parse(R"({"eta": 1.5})")), std::invalid_argument);
  AlConfig d;
  EXPECT_EQ(d.rho(1), 1.0);
  EXPECT_EQ(d.rho(4), 8.0);
  EXPECT_EQ(d.rho(30), 1e4);
}
