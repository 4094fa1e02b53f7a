#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gridsync/errors.hpp"

namespace gridsync {

// Oriented edge; node ids are 0-based internally (1-based in external formats).
struct Edge {
  int from = 0;  // initial node
  int to = 0;    // terminal node
};

// Connected undirected graph with a fixed edge orientation, immutable after
// construction.
class Network {
 public:
  struct Adjacent {
    int node;  // neighbor node id
    int edge;  // index of the connecting edge
  };

  Network() = default;
  Network(int node_count, std::vector<Edge> edges);

  int node_count() const noexcept { return node_count_; }
  int edge_count() const noexcept { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Edge& edge(int l) const { return edges_.at(static_cast<std::size_t>(l)); }
  const std::vector<std::vector<Adjacent>>& adjacency() const noexcept { return adjacency_; }

  // N x L incidence matrix: +1 if the node is the edge's initial node, -1 if
  // terminal, 0 otherwise.
  const Eigen::MatrixXd& incidence() const noexcept { return incidence_; }

  // Deterministic connected graph for a given seed: random spanning tree plus
  // random extra edges.
  static Network random_connected(int node_count, std::uint64_t seed);

 private:
  int node_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<Adjacent>> adjacency_;
  Eigen::MatrixXd incidence_;
};

enum class FeedbackSign { positive, negative };

// Edge difference map: u_l = y_i - y_j for edge l = (i, j), i.e. Q^T * Y.
Eigen::VectorXd edge_inputs(const Network& net, const Eigen::VectorXd& node_outputs);

// Node aggregation map: u_i = +/- sum_l q_il * y_l, i.e. +/- Q * Y.
Eigen::VectorXd node_inputs(const Network& net, const Eigen::VectorXd& edge_outputs,
                            FeedbackSign sign);

// m-channel variants; outputs are stored one column per node/edge, so these
// compute (Q^T (x) I_m) and +/-(Q (x) I_m) applied to the stacked vector.
Eigen::MatrixXd edge_input_channels(const Network& net, const Eigen::MatrixXd& node_outputs);
Eigen::MatrixXd node_input_channels(const Network& net, const Eigen::MatrixXd& edge_outputs,
                                    FeedbackSign sign);

}  // namespace gridsync
