#include <gtest/gtest.h>

#include <random>

#include "nubox/io.hpp"
#include "nubox/network.hpp"
#include "support.hpp"

using namespace nubox;

TEST(Forward, SingleAffineLayer) {
  const Network net(Activation::relu, {{Matrix{{2}}, {1}}});
  EXPECT_EQ(forward(net, Vector{3}), (Vector{7}));
}

TEST(Forward, AbsoluteValueConstruction) {
  const Network net(Activation::relu, {{Matrix{{1}, {-1}}, {0, 0}}, {Matrix{{1, 1}}, {0}}});
  EXPECT_EQ(forward(net, Vector{2}), (Vector{2}));
  EXPECT_EQ(forward(net, Vector{-3}), (Vector{3}));
}

TEST(Forward, ToyNetOnDiagonalIsZero) {
  EXPECT_EQ(forward(fixtures::toy_net1(1, 1), Vector{0.5, 0.5}), (Vector{0}));
}

TEST(Forward, ActivationsAndDerivatives) {
  EXPECT_DOUBLE_EQ(activate(Activation::sigmoid, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(activate(Activation::tanh, 0.3), std::tanh(0.3));
  EXPECT_EQ(activate_derivative(Activation::relu, 0.0), 0.0);
  EXPECT_EQ(activate_derivative(Activation::relu, 1e-9), 1.0);
  EXPECT_THROW(parse_activation("gelu"), FormatError);
}

TEST(Network, RejectsBadShapes) {
  EXPECT_THROW(Network(Activation::relu, {{Matrix{{1, 2}}, {0}}, {Matrix{{1, 2}}, {0}}}), DimensionError);
  EXPECT_THROW(Network(Activation::relu, {{Matrix{{1, 2}}, {0, 0}}}), DimensionError);
  EXPECT_THROW(Network(Activation::relu, {}), DimensionError);
  const Network net(Activation::relu, {{Matrix{{1, 2}}, {0}}});
  EXPECT_THROW(forward(net, Vector{1}), DimensionError);
}

TEST(Dag, ChainMatchesNetworkExactly) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const Network net = fixtures::random_net(rng, fixtures::random_sizes(rng, 3, 4, 1, 4, 2, 9));
    const DagNetwork dag = to_dag(net);
    for (int s = 0; s < 10; ++s) {
      const Vector x = fixtures::random_vector(rng, 3, -1, 1);
      EXPECT_EQ(forward(dag, x), forward(net, x));
    }
  }
}

TEST(Dag, TopologicalOrder) {
  const Network net(Activation::relu, {{Matrix{{1}}, {0}}, {Matrix{{1}}, {0}}});
  EXPECT_EQ(topo_paths_check(to_dag(net)), (std::vector<std::size_t>{1, 2, 3}));

  const DagNetwork skip(Activation::relu, {1, 1, 1},
                        {{1, 2, Matrix{{1}}}, {2, 3, Matrix{{1}}}, {1, 3, Matrix{{2}}}}, {{0}, {0}});
  EXPECT_EQ(topo_paths_check(skip), (std::vector<std::size_t>{1, 2, 3}));
  // relu(x) + 2x at x = -1
  EXPECT_EQ(forward(skip, Vector{-1}), (Vector{-2}));
}

TEST(Dag, UnreachableNodeIsRejected) {
  auto build = [] {
    const DagNetwork dag(Activation::relu, {1, 1, 1}, {{1, 2, Matrix{{1}}}}, {{0}, {0}});
    return topo_paths_check(dag);
  };
  EXPECT_THROW(build(), DimensionError);
}

TEST(Dag, RejectsBadEdges) {
  EXPECT_THROW(DagNetwork(Activation::relu, {1, 1}, {{2, 1, Matrix{{1}}}}, {{0}}), DimensionError);
  EXPECT_THROW(DagNetwork(Activation::relu, {1, 2}, {{1, 2, Matrix{{1}}}}, {{0, 0}}), DimensionError);
  EXPECT_THROW(DagNetwork(Activation::relu, {1, 1}, {{1, 2, Matrix{{1}}}, {1, 2, Matrix{{1}}}}, {{0}}),
               DimensionError);
}

TEST(ModelIo, MinimalDocument) {
  const Model m = load_model(R"({"version":1,"activation":"relu","sizes":[1,1],
                                  "layers":[{"weight":[[2]],"bias":[1]}]})");
  ASSERT_TRUE(std::holds_alternative<Network>(m));
  const auto& net = std::get<Network>(m);
  EXPECT_EQ(net.depth(), 2u);
  EXPECT_EQ(forward(net, Vector{3}), (Vector{7}));
}

TEST(ModelIo, EdgeDocument) {
  const Model m = load_model(R"({"version":1,"activation":"tanh","sizes":[1,2,1],
      "edges":[{"from":1,"to":2,"weight":[[1],[2]]},{"from":2,"to":3,"weight":[[1,1]]},
               {"from":1,"to":3,"weight":[[3]]}],
      "biases":[[0,0],[0.5]]})");
  ASSERT_TRUE(std::holds_alternative<DagNetwork>(m));
  const auto& dag = std::get<DagNetwork>(m);
  EXPECT_DOUBLE_EQ(forward(dag, Vector{0.2})[0], std::tanh(0.2) + std::tanh(0.4) + 0.6 + 0.5);
}

TEST(ModelIo, ShapeAndFormatErrors) {
  EXPECT_THROW(load_model(R"({"version":1,"activation":"relu","sizes":[2,1],
                              "layers":[{"weight":[[1,2,3]],"bias":[0]}]})"),
               DimensionError);
  EXPECT_THROW(load_model("{not json"), FormatError);
  EXPECT_THROW(load_model(R"({"version":1,"activation":"swish","sizes":[1,1],
                              "layers":[{"weight":[[1]],"bias":[0]}]})"),
               FormatError);
  EXPECT_THROW(load_model(R"({"version":1,"activation":"relu","sizes":[1,1]})"), FormatError);
  EXPECT_THROW(load_model(R"({"version":2,"activation":"relu","sizes":[1,1],
                              "layers":[{"weight":[[1]],"bias":[0]}]})"),
               FormatError);
}

TEST(ModelIo, RoundTripIsExact) {
  std::mt19937_64 rng(9);
  const Network net = fixtures::random_net(rng, {3, 7, 5, 2}, Activation::sigmoid);
  const Model back = load_model(save_model(net));
  const auto& n2 = std::get<Network>(back);
  ASSERT_EQ(n2.sizes(), net.sizes());
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    EXPECT_EQ(n2.layers()[i].weight, net.layers()[i].weight);
    EXPECT_EQ(n2.layers()[i].bias, net.layers()[i].bias);
  }
  const DagNetwork dag = fixtures::residual_net(rng, 2, 4, 3);
  const Model dm = load_model(save_model(dag));
  const auto& d2 = std::get<DagNetwork>(dm);
  const Vector x{0.3, -0.7};
  EXPECT_EQ(forward(d2, x), forward(dag, x));
}

TEST(DatasetIo, ParseAndValidate) {
  const Dataset ds = parse_dataset("label,a,b\n1,0.5,-0.5\n0,1,2\n", true);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.points[0].label, 1u);
  EXPECT_EQ(ds.points[0].features, (Vector{0.5, -0.5}));
  EXPECT_NO_THROW(check_dataset(ds, 2, 2));
  EXPECT_THROW(check_dataset(ds, 3, 2), DimensionError);
  EXPECT_THROW(check_dataset(ds, 2, 1), DimensionError);
  EXPECT_THROW(parse_dataset("1,abc\n"), FormatError);
  EXPECT_THROW(parse_dataset("1,0.5\n0,1,2\n"), FormatError);
  const Dataset back = parse_dataset(format_dataset(ds));
  EXPECT_EQ(back.points[1].features, ds.points[1].features);
}
