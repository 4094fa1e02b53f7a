#include "gridsync/network.hpp"

#include <algorithm>
#include <deque>
#include <random>
#include <set>
#include <sstream>
#include <utility>

namespace gridsync {

namespace {

std::pair<int, int> unordered_key(const Edge& e) {
  return {std::min(e.from, e.to), std::max(e.from, e.to)};
}

}  // namespace

Network::Network(int node_count, std::vector<Edge> edges)
    : node_count_(node_count), edges_(std::move(edges)) {
  if (node_count_ < 1) {
    throw ConfigError("network needs at least one node");
  }
  std::set<std::pair<int, int>> seen;
  for (std::size_t l = 0; l < edges_.size(); ++l) {
    const Edge& e = edges_[l];
    if (e.from < 0 || e.from >= node_count_ || e.to < 0 || e.to >= node_count_) {
      std::ostringstream msg;
      msg << "edge " << l + 1 << " references node outside 1.." << node_count_;
      throw ConfigError(msg.str());
    }
    if (e.from == e.to) {
      std::ostringstream msg;
      msg << "edge " << l + 1 << " is a self-loop on node " << e.from + 1;
      throw ConfigError(msg.str());
    }
    if (!seen.insert(unordered_key(e)).second) {
      std::ostringstream msg;
      msg << "edge " << l + 1 << " duplicates pair (" << e.from + 1 << ", " << e.to + 1 << ")";
      throw ConfigError(msg.str());
    }
  }

  adjacency_.assign(static_cast<std::size_t>(node_count_), {});
  incidence_ = Eigen::MatrixXd::Zero(node_count_, static_cast<int>(edges_.size()));
  for (std::size_t l = 0; l < edges_.size(); ++l) {
    const Edge& e = edges_[l];
    const int li = static_cast<int>(l);
    adjacency_[static_cast<std::size_t>(e.from)].push_back({e.to, li});
    adjacency_[static_cast<std::size_t>(e.to)].push_back({e.from, li});
    incidence_(e.from, li) = 1.0;
    incidence_(e.to, li) = -1.0;
  }

  // Connectivity check (BFS from node 0); report every unreachable node.
  std::vector<bool> reached(static_cast<std::size_t>(node_count_), false);
  std::deque<int> frontier{0};
  reached[0] = true;
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop_front();
    for (const Adjacent& a : adjacency_[static_cast<std::size_t>(i)]) {
      if (!reached[static_cast<std::size_t>(a.node)]) {
        reached[static_cast<std::size_t>(a.node)] = true;
        frontier.push_back(a.node);
      }
    }
  }
  std::vector<int> unreachable;
  for (int i = 0; i < node_count_; ++i) {
    if (!reached[static_cast<std::size_t>(i)]) unreachable.push_back(i + 1);
  }
  if (!unreachable.empty()) {
    std::ostringstream msg;
    msg << "network is disconnected; unreachable nodes:";
    for (int id : unreachable) msg << ' ' << id;
    throw ConfigError(msg.str());
  }
}

Network Network::random_connected(int node_count, std::uint64_t seed) {
  if (node_count < 2) {
    throw ConfigError("random_connected requires at least 2 nodes");
  }
  std::mt19937_64 rng(seed);
  const auto next_below = [&rng](int bound) {
    return static_cast<int>(rng() % static_cast<std::uint64_t>(bound));
  };

  // Random spanning tree: attach each node (in shuffled order) to a random
  // earlier node.
  std::vector<int> order(static_cast<std::size_t>(node_count));
  for (int i = 0; i < node_count; ++i) order[static_cast<std::size_t>(i)] = i;
  for (int i = node_count - 1; i > 0; --i) {
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(next_below(i + 1))]);
  }

  std::vector<Edge> edges;
  std::set<std::pair<int, int>> used;
  for (int k = 1; k < node_count; ++k) {
    const int a = order[static_cast<std::size_t>(k)];
    const int b = order[static_cast<std::size_t>(next_below(k))];
    edges.push_back({a, b});
    used.insert(unordered_key(edges.back()));
  }

  // Up to node_count random extra edges (duplicates and self-loops skipped).
  for (int attempt = 0; attempt < node_count; ++attempt) {
    const int a = next_below(node_count);
    const int b = next_below(node_count);
    if (a == b) continue;
    Edge e{a, b};
    if (used.insert(unordered_key(e)).second) edges.push_back(e);
  }

  return Network(node_count, std::move(edges));
}

Eigen::VectorXd edge_inputs(const Network& net, const Eigen::VectorXd& node_outputs) {
  if (node_outputs.size() != net.node_count()) {
    throw ConfigError("edge_inputs: node output dimension mismatch");
  }
  Eigen::VectorXd result(net.edge_count());
  for (int l = 0; l < net.edge_count(); ++l) {
    const Edge& e = net.edge(l);
    result(l) = node_outputs(e.from) - node_outputs(e.to);
  }
  return result;
}

Eigen::VectorXd node_inputs(const Network& net, const Eigen::VectorXd& edge_outputs,
                            FeedbackSign sign) {
  if (edge_outputs.size() != net.edge_count()) {
    throw ConfigError("node_inputs: edge output dimension mismatch");
  }
  Eigen::VectorXd result = Eigen::VectorXd::Zero(net.node_count());
  for (int l = 0; l < net.edge_count(); ++l) {
    const Edge& e = net.edge(l);
    result(e.from) += edge_outputs(l);
    result(e.to) -= edge_outputs(l);
  }
  if (sign == FeedbackSign::negative) result = -result;
  return result;
}

Eigen::MatrixXd edge_input_channels(const Network& net, const Eigen::MatrixXd& node_outputs) {
  if (node_outputs.cols() != net.node_count()) {
    throw ConfigError("edge_input_channels: node output dimension mismatch");
  }
  Eigen::MatrixXd result(node_outputs.rows(), net.edge_count());
  for (int l = 0; l < net.edge_count(); ++l) {
    const Edge& e = net.edge(l);
    result.col(l) = node_outputs.col(e.from) - node_outputs.col(e.to);
  }
  return result;
}

Eigen::MatrixXd node_input_channels(const Network& net, const Eigen::MatrixXd& edge_outputs,
                                    FeedbackSign sign) {
  if (edge_outputs.cols() != net.edge_count()) {
    throw ConfigError("node_input_channels: edge output dimension mismatch");
  }
  Eigen::MatrixXd result = Eigen::MatrixXd::Zero(edge_outputs.rows(), net.node_count());
  for (int l = 0; l < net.edge_count(); ++l) {
    const Edge& e = net.edge(l);
    result.col(e.from) += edge_outputs.col(l);
    result.col(e.to) -= edge_outputs.col(l);
  }
  if (sign == FeedbackSign::negative) result = -result;
  return result;
}

}  // namespace gridsync
