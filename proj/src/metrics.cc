#include "sparrl/metrics.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <unordered_map>

namespace sparrl::metrics {

PageRankDivergence::PageRankDivergence(const int iterations, const double residual, std::vector<double> last_iterate)
    : std::runtime_error(
          "pagerank did not converge after " + std::to_string(iterations) +
          " iterations (residual " + std::to_string(residual) + ")"
      ),
      _residual(residual),
      _last(std::move(last_iterate)) {}

RankVector RankVector::from_scores(std::vector<double> scores) {
  RankVector r;
  r.ranks = average_ranks(scores);
  r.scores = std::move(scores);
  return r;
}

RankVector pagerank(const Graph &g, const PageRankOptions &options) {
  const NodeId n = g.node_count();
  if (n == 0) {
    throw std::invalid_argument("pagerank: empty graph");
  }
  const double d = options.damping;
  const double inv_n = 1.0 / n;

  std::vector<double> out_weight(n, 0.0);
  for (NodeId u = 0; u < n; ++u) {
    std::uint32_t out = 0;
    g.for_each_out_neighbor(u, [&](NodeId, EdgeId) { ++out; });
    out_weight[u] = out > 0 ? 1.0 / out : 0.0;
  }

  std::vector<double> rank(n, inv_n);
  std::vector<double> next(n);
  double residual = 0.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    double dangling = 0.0;
    for (NodeId u = 0; u < n; ++u) {
      if (out_weight[u] == 0.0) {
        dangling += rank[u];
      }
    }
    const double base = (1.0 - d) * inv_n + d * dangling * inv_n;
    std::fill(next.begin(), next.end(), base);
    for (NodeId u = 0; u < n; ++u) {
      if (out_weight[u] == 0.0) {
        continue;
      }
      const double share = d * rank[u] * out_weight[u];
      g.for_each_out_neighbor(u, [&](const NodeId v, EdgeId) { next[v] += share; });
    }
    // Renormalize away floating drift so the sum stays at 1.
    const double total = std::accumulate(next.begin(), next.end(), 0.0);
    for (double &x : next) {
      x /= total;
    }
    residual = 0.0;
    for (NodeId u = 0; u < n; ++u) {
      residual += std::abs(next[u] - rank[u]);
    }
    rank.swap(next);
    if (residual < options.tolerance) {
      return RankVector::from_scores(std::move(rank));
    }
  }
  throw PageRankDivergence(options.max_iterations, residual, std::move(rank));
}

std::vector<double> average_ranks(const std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](const std::size_t a, const std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) {
      ++j;
    }
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      ranks[order[k]] = avg;
    }
    i = j + 1;
  }
  return ranks;
}

namespace {

double pearson(const std::span<const double> a, const std::span<const double> b) {
  const std::size_t n = a.size();
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double cov = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a <= 0.0 || var_b <= 0.0) {
    throw std::domain_error("spearman_rho: zero rank variance, correlation undefined");
  }
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

} // namespace

double spearman_rho(const std::span<const double> a, const std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("spearman_rho: length mismatch");
  }
  if (a.size() < 2) {
    throw std::invalid_argument("spearman_rho: need at least two entries");
  }
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

double spearman_rho(const RankVector &a, const RankVector &b) {
  if (a.ranks.size() != b.ranks.size()) {
    throw std::invalid_argument("spearman_rho: length mismatch");
  }
  if (a.ranks.size() < 2) {
    throw std::invalid_argument("spearman_rho: need at least two entries");
  }
  return pearson(a.ranks, b.ranks);
}

double modularity(const Graph &g, const std::span<const std::int32_t> labels) {
  if (g.directed()) {
    throw std::invalid_argument("modularity: graph must be undirected");
  }
  if (labels.size() != g.node_count()) {
    throw std::invalid_argument("modularity: label count does not match node count");
  }
  const double m = static_cast<double>(g.edge_count());
  if (m == 0.0) {
    return 0.0;
  }
  std::unordered_map<std::int32_t, std::pair<double, double>> per_community; // (intra edges, degree sum)
  for (NodeId u = 0; u < g.node_count(); ++u) {
    if (labels[u] < 0) {
      throw std::invalid_argument("modularity: node " + std::to_string(u) + " is unlabeled");
    }
    per_community[labels[u]].second += g.degree(u);
  }
  for (const EdgeId e : g.live_edge_pool()) {
    const EdgeRef &ref = g.edge(e);
    if (labels[ref.source] == labels[ref.destination]) {
      per_community[labels[ref.source]].first += 1.0;
    }
  }
  // Sum in label order so the result does not depend on hash iteration order.
  std::map<std::int32_t, std::pair<double, double>> ordered(per_community.begin(), per_community.end());
  double q = 0.0;
  for (const auto &[label, stats] : ordered) {
    const double frac = stats.second / (2.0 * m);
    q += stats.first / m - frac * frac;
  }
  return q;
}

double adjusted_rand_index(const std::span<const std::int32_t> a, const std::span<const std::int32_t> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("adjusted_rand_index: label vectors differ in length");
  }
  std::map<std::pair<std::int32_t, std::int32_t>, std::uint64_t> cells;
  std::map<std::int32_t, std::uint64_t> rows;
  std::map<std::int32_t, std::uint64_t> cols;
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == kUnlabeled || b[i] == kUnlabeled) {
      continue;
    }
    ++cells[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
    ++n;
  }
  if (n < 2) {
    throw std::invalid_argument("adjusted_rand_index: need at least two labeled nodes");
  }
  const auto choose2 = [](const std::uint64_t x) { return 0.5 * static_cast<double>(x) * static_cast<double>(x - 1); };
  double index = 0.0;
  for (const auto &[key, count] : cells) {
    index += choose2(count);
  }
  double sum_rows = 0.0;
  for (const auto &[key, count] : rows) {
    sum_rows += choose2(count);
  }
  double sum_cols = 0.0;
  for (const auto &[key, count] : cols) {
    sum_cols += choose2(count);
  }
  const double expected = sum_rows * sum_cols / choose2(n);
  const double max_index = 0.5 * (sum_rows + sum_cols);
  const double denom = max_index - expected;
  if (denom == 0.0) {
    // Both partitions are all-singletons or both a single block.
    return 1.0;
  }
  return (index - expected) / denom;
}

std::vector<Distance> bfs_distances(const Graph &g, const NodeId source) {
  if (source >= g.node_count()) {
    throw std::out_of_range("bfs_distances: source out of range");
  }
  std::vector<Distance> dist(g.node_count());
  std::vector<NodeId> frontier{source};
  std::vector<NodeId> next;
  dist[source] = 0;
  std::uint32_t level = 0;
  while (!frontier.empty()) {
    ++level;
    next.clear();
    for (const NodeId u : frontier) {
      g.for_each_out_neighbor(u, [&](const NodeId v, EdgeId) {
        if (!dist[v]) {
          dist[v] = level;
          next.push_back(v);
        }
      });
    }
    frontier.swap(next);
  }
  return dist;
}

Distance shortest_path_distance(const Graph &g, const NodeId u, const NodeId v) {
  if (u >= g.node_count() || v >= g.node_count()) {
    throw std::out_of_range("shortest_path_distance: node out of range");
  }
  if (u == v) {
    return 0;
  }
  return bfs_distances(g, u)[v];
}

std::vector<Distance> batch_spsp(const Graph &g, const std::span<const NodePair> pairs) {
  std::map<NodeId, std::vector<std::size_t>> by_source;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].first >= g.node_count() || pairs[i].second >= g.node_count()) {
      throw std::out_of_range("batch_spsp: node out of range");
    }
    by_source[pairs[i].first].push_back(i);
  }
  std::vector<Distance> result(pairs.size());
  for (const auto &[source, items] : by_source) {
    const auto dist = bfs_distances(g, source);
    for (const std::size_t i : items) {
      result[i] = dist[pairs[i].second];
    }
  }
  return result;
}

PathQuerySet make_query_set(const Graph &reference, std::vector<NodePair> pairs) {
  for (const auto &[u, v] : pairs) {
    if (u == v) {
      throw std::invalid_argument("path query pairs need distinct endpoints");
    }
  }
  PathQuerySet q;
  q.baseline = batch_spsp(reference, pairs);
  q.pairs = std::move(pairs);
  return q;
}

std::vector<NodePair> sample_node_pairs(const NodeId node_count, const bool directed, const std::size_t count, Rng &rng) {
  const std::uint64_t n = node_count;
  const std::uint64_t total = directed ? n * (n - 1) : n * (n - 1) / 2;
  std::vector<NodePair> pairs;
  if (n < 2) {
    return pairs;
  }
  const auto normalize = [directed](NodeId u, NodeId v) {
    if (!directed && v < u) {
      std::swap(u, v);
    }
    return NodePair{u, v};
  };
  if (count >= total) {
    for (NodeId u = 0; u < n; ++u) {
      for (NodeId v = directed ? 0 : u + 1; v < n; ++v) {
        if (u != v) {
          pairs.emplace_back(u, v);
        }
      }
    }
    return pairs;
  }
  std::set<NodePair> seen;
  while (pairs.size() < count) {
    const auto u = static_cast<NodeId>(uniform_index(rng, n));
    const auto v = static_cast<NodeId>(uniform_index(rng, n));
    if (u == v) {
      continue;
    }
    if (seen.insert(normalize(u, v)).second) {
      pairs.push_back(normalize(u, v));
    }
  }
  return pairs;
}

double mean_distance_increase(const Graph &g, const PathQuerySet &queries) {
  if (queries.pairs.empty()) {
    return 0.0;
  }
  const auto now = batch_spsp(g, queries.pairs);
  const double penalty = static_cast<double>(g.node_count());
  double total = 0.0;
  for (std::size_t i = 0; i < now.size(); ++i) {
    const Distance &before = queries.baseline[i];
    if (!before) {
      continue;
    }
    total += now[i] ? static_cast<double>(*now[i]) - static_cast<double>(*before) : penalty;
  }
  return total / static_cast<double>(now.size());
}

} // namespace sparrl::metrics
