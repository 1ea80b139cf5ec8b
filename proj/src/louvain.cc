#include <algorithm>
#include <numeric>
#include <vector>

#include "sparrl/metrics.h"

namespace sparrl::metrics {

namespace {

constexpr double kMinGain = 1e-12;
constexpr int kMaxPasses = 1000;

struct WeightedGraph {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adjacency; // no self-loops
  std::vector<double> self_loop;                                        // internal weight, counted once

  [[nodiscard]] std::uint32_t size() const { return static_cast<std::uint32_t>(adjacency.size()); }
};

WeightedGraph from_graph(const Graph &g) {
  WeightedGraph w;
  w.adjacency.resize(g.node_count());
  w.self_loop.assign(g.node_count(), 0.0);
  for (NodeId u = 0; u < g.node_count(); ++u) {
    g.for_each_neighbor(u, [&](const NodeId v, EdgeId) { w.adjacency[u].emplace_back(v, 1.0); });
  }
  return w;
}

// Moves nodes between communities until a full pass makes no move.
// Returns true if any node changed community.
bool local_moving(const WeightedGraph &w, std::vector<std::uint32_t> &community, Rng &rng) {
  const std::uint32_t n = w.size();
  std::vector<double> strength(n, 0.0);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (const auto &[j, weight] : w.adjacency[i]) {
      strength[i] += weight;
    }
    strength[i] += 2.0 * w.self_loop[i];
  }
  const double two_m = std::accumulate(strength.begin(), strength.end(), 0.0);
  if (two_m == 0.0) {
    return false;
  }

  community.resize(n);
  std::iota(community.begin(), community.end(), 0u);
  std::vector<double> total(strength);

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> link_weight(n, 0.0);
  std::vector<std::uint8_t> is_touched(n, 0);
  std::vector<std::uint32_t> touched;
  bool any_move = false;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    bool moved = false;
    for (const std::uint32_t i : order) {
      const std::uint32_t current = community[i];
      touched.clear();
      touched.push_back(current);
      link_weight[current] = 0.0;
      is_touched[current] = 1;
      for (const auto &[j, weight] : w.adjacency[i]) {
        const std::uint32_t c = community[j];
        if (!is_touched[c]) {
          is_touched[c] = 1;
          touched.push_back(c);
        }
        link_weight[c] += weight;
      }

      total[current] -= strength[i];
      const double k = strength[i] / two_m;
      std::uint32_t best = current;
      double best_gain = link_weight[current] - total[current] * k;
      for (const std::uint32_t c : touched) {
        const double gain = link_weight[c] - total[c] * k;
        if (gain > best_gain + kMinGain) {
          best = c;
          best_gain = gain;
        }
      }
      total[best] += strength[i];
      community[i] = best;
      if (best != current) {
        moved = true;
        any_move = true;
      }
      for (const std::uint32_t c : touched) {
        link_weight[c] = 0.0;
        is_touched[c] = 0;
      }
    }
    if (!moved) {
      break;
    }
  }
  return any_move;
}

std::uint32_t renumber(std::vector<std::uint32_t> &community) {
  std::vector<std::int64_t> remap(community.size(), -1);
  std::uint32_t next = 0;
  for (std::uint32_t &c : community) {
    if (remap[c] < 0) {
      remap[c] = next++;
    }
    c = static_cast<std::uint32_t>(remap[c]);
  }
  return next;
}

WeightedGraph aggregate(const WeightedGraph &w, const std::vector<std::uint32_t> &community, const std::uint32_t count) {
  std::vector<std::vector<std::uint32_t>> members(count);
  for (std::uint32_t i = 0; i < w.size(); ++i) {
    members[community[i]].push_back(i);
  }
  WeightedGraph coarse;
  coarse.adjacency.resize(count);
  coarse.self_loop.assign(count, 0.0);
  std::vector<double> accum(count, 0.0);
  std::vector<std::uint32_t> touched;
  for (std::uint32_t c = 0; c < count; ++c) {
    touched.clear();
    for (const std::uint32_t i : members[c]) {
      coarse.self_loop[c] += w.self_loop[i];
      for (const auto &[j, weight] : w.adjacency[i]) {
        const std::uint32_t d = community[j];
        if (d == c) {
          // Each internal edge is seen from both endpoints.
          coarse.self_loop[c] += 0.5 * weight;
          continue;
        }
        if (accum[d] == 0.0) {
          touched.push_back(d);
        }
        accum[d] += weight;
      }
    }
    for (const std::uint32_t d : touched) {
      coarse.adjacency[c].emplace_back(d, accum[d]);
      accum[d] = 0.0;
    }
  }
  return coarse;
}

} // namespace

Partition louvain(const Graph &g, Rng &rng) {
  if (g.directed()) {
    throw std::invalid_argument("louvain: graph must be undirected");
  }
  const NodeId n = g.node_count();
  std::vector<std::uint32_t> membership(n);
  std::iota(membership.begin(), membership.end(), 0u);

  WeightedGraph level = from_graph(g);
  std::vector<std::uint32_t> community;
  while (true) {
    const bool moved = local_moving(level, community, rng);
    if (!moved) {
      break;
    }
    const std::uint32_t count = renumber(community);
    for (std::uint32_t &m : membership) {
      m = community[m];
    }
    level = aggregate(level, community, count);
  }

  Partition p;
  p.labels.assign(membership.begin(), membership.end());
  std::vector<std::uint32_t> dense(membership);
  p.community_count = static_cast<std::int32_t>(renumber(dense));
  p.labels.assign(dense.begin(), dense.end());
  p.modularity = modularity(g, p.labels);
  return p;
}

} // namespace sparrl::metrics
