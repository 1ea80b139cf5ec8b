#pragma once

// Shared fixtures and brute-force oracles for the unit tests.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sparrl/graph.h"
#include "sparrl/rng.h"

namespace test {

using sparrl::Graph;
using sparrl::NodeId;

inline Graph make_graph(NodeId n, std::vector<std::pair<NodeId, NodeId>> edges, bool directed = false) {
  return Graph::from_edges(n, directed, edges);
}

inline Graph path_graph(NodeId n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return make_graph(n, e);
}

inline Graph complete_graph(NodeId n) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return make_graph(n, e);
}

inline Graph star_graph(NodeId leaves) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return make_graph(leaves + 1, e);
}

// two triangles {0,1,2} and {3,4,5}, optionally joined by (2,3)
inline Graph two_triangles(bool bridge) {
  std::vector<std::pair<NodeId, NodeId>> e{{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}};
  if (bridge) e.emplace_back(2, 3);
  return make_graph(6, e);
}

// two K5 on 0..4 and 5..9 joined by the bridge (4,5)
inline Graph barbell() {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId base : {0u, 5u})
    for (NodeId i = 0; i < 5; ++i)
      for (NodeId j = i + 1; j < 5; ++j) e.emplace_back(base + i, base + j);
  e.emplace_back(4, 5);
  return make_graph(10, e);
}

inline Graph random_graph(NodeId n, double p, sparrl::Rng &rng, bool directed = false) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = directed ? 0 : i + 1; j < n; ++j)
      if (i != j && sparrl::uniform_unit(rng) < p) e.emplace_back(i, j);
  return make_graph(n, e, directed);
}

// random spanning tree plus G(n, p) extras
inline Graph random_connected_graph(NodeId n, double p, sparrl::Rng &rng) {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId i = 1; i < n; ++i) e.emplace_back(static_cast<NodeId>(sparrl::uniform_index(rng, i)), i);
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (sparrl::uniform_unit(rng) < p) e.emplace_back(i, j);
  return make_graph(n, e);
}

inline constexpr int kInf = std::numeric_limits<int>::max() / 4;

// all-pairs hop distances over live edges
inline std::vector<std::vector<int>> floyd_warshall(const Graph &g) {
  const NodeId n = g.node_count();
  std::vector<std::vector<int>> d(n, std::vector<int>(n, kInf));
  for (NodeId i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto id : g.live_edges()) {
    const auto &e = g.edge(id);
    d[e.source][e.destination] = 1;
    if (!g.directed()) d[e.destination][e.source] = 1;
  }
  for (NodeId k = 0; k < n; ++k)
    for (NodeId i = 0; i < n; ++i)
      for (NodeId j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

// ARI from raw pair agreement counts over all node pairs
inline double brute_ari(const std::vector<std::int32_t> &a, const std::vector<std::int32_t> &b) {
  double both = 0, only_a = 0, only_b = 0, pairs = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      both += sa && sb;
      only_a += sa && !sb;
      only_b += !sa && sb;
      pairs += 1;
    }
  const double same_a = both + only_a, same_b = both + only_b;
  const double expected = same_a * same_b / pairs;
  const double max_index = 0.5 * (same_a + same_b);
  return (both - expected) / (max_index - expected);
}

// dense Newman formula: (1/2m) sum_ij [A_ij - k_i k_j / 2m] delta(c_i, c_j)
inline double brute_modularity(const Graph &g, const std::vector<std::int32_t> &c) {
  const NodeId n = g.node_count();
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (const auto id : g.live_edges()) {
    const auto &e = g.edge(id);
    a[e.source][e.destination] += 1;
    a[e.destination][e.source] += 1;
  }
  std::vector<double> k(n, 0.0);
  double two_m = 0;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = 0; j < n; ++j) {
      k[i] += a[i][j];
      two_m += a[i][j];
    }
  if (two_m == 0) return 0.0;
  double q = 0;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = 0; j < n; ++j)
      if (c[i] == c[j]) q += a[i][j] - k[i] * k[j] / two_m;
  return q / two_m;
}

inline std::string data_path(const std::string &name) {
  return std::string(SPARRL_TEST_DATA) + "/" + name;
}

// fresh scratch directory under the build tree
inline std::filesystem::path scratch_dir(const std::string &name) {
  const auto dir = std::filesystem::path(SPARRL_TEST_SCRATCH) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace test
