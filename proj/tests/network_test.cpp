#include "gridsync/network.hpp"

#include <gtest/gtest.h>

#include <random>

#include "gridsync/errors.hpp"

namespace gridsync {
namespace {

Network four_cycle() { return Network(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}); }

TEST(Network, IncidenceFourCycle) {
  const Eigen::MatrixXd q = four_cycle().incidence();
  ASSERT_EQ(q.rows(), 4);
  ASSERT_EQ(q.cols(), 4);
  const Eigen::Vector4d row0 = q.row(0);
  EXPECT_EQ(row0(0), 1.0);
  EXPECT_EQ(row0(1), 0.0);
  EXPECT_EQ(row0(2), 0.0);
  EXPECT_EQ(row0(3), -1.0);
}

TEST(Network, IncidenceColumnStructure) {
  const Network net = Network::random_connected(7, 42);
  const Eigen::MatrixXd q = net.incidence();
  for (int l = 0; l < net.edge_count(); ++l) {
    EXPECT_DOUBLE_EQ(q.col(l).sum(), 0.0);
    EXPECT_DOUBLE_EQ(q.col(l).cwiseAbs().sum(), 2.0);
    EXPECT_DOUBLE_EQ(q.col(l).maxCoeff(), 1.0);
    EXPECT_DOUBLE_EQ(q.col(l).minCoeff(), -1.0);
  }
}

TEST(Network, IncidenceRankIsNodesMinusOne) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Network net = Network::random_connected(6, seed);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(net.incidence());
    EXPECT_EQ(lu.rank(), net.node_count() - 1);
  }
}

TEST(Network, EdgeInputsFourCycle) {
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  const Eigen::VectorXd u = edge_inputs(four_cycle(), y);
  Eigen::VectorXd expected(4);
  expected << -1, -1, -1, 3;
  EXPECT_TRUE(u.isApprox(expected));
}

TEST(Network, EdgeInputsConstantVectorInKernel) {
  const Network net = Network::random_connected(8, 9);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(8, 2.75);
  EXPECT_DOUBLE_EQ(edge_inputs(net, y).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Network, NodeInputsSingleEdgeBothSigns) {
  const Network net(2, {{0, 1}});
  Eigen::VectorXd y(1);
  y << 0.5;
  const Eigen::VectorXd up = node_inputs(net, y, FeedbackSign::positive);
  EXPECT_DOUBLE_EQ(up(0), 0.5);
  EXPECT_DOUBLE_EQ(up(1), -0.5);
  const Eigen::VectorXd un = node_inputs(net, y, FeedbackSign::negative);
  EXPECT_DOUBLE_EQ(un(0), -0.5);
  EXPECT_DOUBLE_EQ(un(1), 0.5);
}

// <Q y_c, y_p> = <y_c, Q^T y_p>: node aggregation is adjoint to edge differences.
TEST(Network, AdjointnessProperty) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Network net = Network::random_connected(2 + static_cast<int>(rng() % 7), rng());
    Eigen::VectorXd yp(net.node_count());
    Eigen::VectorXd yc(net.edge_count());
    for (int i = 0; i < net.node_count(); ++i) yp(i) = dist(rng);
    for (int l = 0; l < net.edge_count(); ++l) yc(l) = dist(rng);
    const double lhs = node_inputs(net, yc, FeedbackSign::positive).dot(yp);
    const double rhs = yc.dot(edge_inputs(net, yp));
    EXPECT_NEAR(lhs, rhs, 1e-12);
  }
}

TEST(Network, MatchesIncidenceMatrix) {
  const Network net = Network::random_connected(6, 123);
  const Eigen::MatrixXd q = net.incidence();
  Eigen::VectorXd yp(6);
  yp << 0.3, -1.2, 2.0, 0.7, -0.5, 1.1;
  EXPECT_TRUE(edge_inputs(net, yp).isApprox(q.transpose() * yp, 1e-14));
  Eigen::VectorXd yc = Eigen::VectorXd::LinSpaced(net.edge_count(), -1.0, 1.0);
  EXPECT_TRUE(node_inputs(net, yc, FeedbackSign::positive).isApprox(q * yc, 1e-14));
  EXPECT_TRUE(node_inputs(net, yc, FeedbackSign::negative).isApprox(-q * yc, 1e-14));
}

TEST(Network, ChannelVariantsMatchRowWise) {
  const Network net = Network::random_connected(5, 5);
  Eigen::MatrixXd y(3, 5);
  y.setRandom();
  const Eigen::MatrixXd u = edge_input_channels(net, y);
  for (int row = 0; row < 3; ++row) {
    EXPECT_TRUE(
        u.row(row).transpose().isApprox(edge_inputs(net, y.row(row).transpose()), 1e-14));
  }
  Eigen::MatrixXd yc(2, net.edge_count());
  yc.setRandom();
  const Eigen::MatrixXd up = node_input_channels(net, yc, FeedbackSign::negative);
  for (int row = 0; row < 2; ++row) {
    EXPECT_TRUE(up.row(row).transpose().isApprox(
        node_inputs(net, yc.row(row).transpose(), FeedbackSign::negative), 1e-14));
  }
}

TEST(Network, RandomConnectedTwoNodesIsSingleEdge) {
  const Network net = Network::random_connected(2, 31);
  EXPECT_EQ(net.node_count(), 2);
  EXPECT_EQ(net.edge_count(), 1);
}

TEST(Network, RandomConnectedDeterministic) {
  const Network a = Network::random_connected(8, 2024);
  const Network b = Network::random_connected(8, 2024);
  ASSERT_EQ(a.edge_count(), b.edge_count());
  for (int l = 0; l < a.edge_count(); ++l) {
    EXPECT_EQ(a.edge(l).from, b.edge(l).from);
    EXPECT_EQ(a.edge(l).to, b.edge(l).to);
  }
}

TEST(Network, RandomConnectedAlwaysValid) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const int n = 2 + static_cast<int>(seed % 7);
    // Constructor throws on disconnected / duplicate / self-loop inputs.
    EXPECT_NO_THROW(Network::random_connected(n, seed));
  }
}

TEST(Network, RejectsSelfLoop) {
  EXPECT_THROW(Network(3, {{0, 1}, {1, 1}}), ConfigError);
}

TEST(Network, RejectsDuplicateEdgeEitherOrientation) {
  EXPECT_THROW(Network(3, {{0, 1}, {1, 2}, {1, 0}}), ConfigError);
}

TEST(Network, RejectsOutOfRangeNode) {
  EXPECT_THROW(Network(3, {{0, 1}, {1, 3}}), ConfigError);
}

TEST(Network, RejectsDisconnectedGraphNamingNodes) {
  try {
    Network(4, {{0, 1}, {2, 3}});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& error) {
    const std::string message = error.what();
    EXPECT_NE(message.find("3"), std::string::npos) << message;
  }
}

TEST(Network, DimensionMismatchThrows) {
  const Network net = four_cycle();
  EXPECT_THROW(edge_inputs(net, Eigen::VectorXd::Zero(3)), ConfigError);
  EXPECT_THROW(node_inputs(net, Eigen::VectorXd::Zero(5), FeedbackSign::positive), ConfigError);
}

}  // namespace
}  // namespace gridsync
