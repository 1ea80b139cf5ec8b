#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sparrl/graph.h"
#include "sparrl/rng.h"

namespace sparrl::metrics {

struct RankVector {
  std::vector<double> scores;
  std::vector<double> ranks; // 1-based, ties share their average rank

  static RankVector from_scores(std::vector<double> scores);
};

struct PageRankOptions {
  double damping = 0.85;
  double tolerance = 1e-10;
  int max_iterations = 200;
};

class PageRankDivergence : public std::runtime_error {
public:
  PageRankDivergence(int iterations, double residual, std::vector<double> last_iterate);
  [[nodiscard]] const std::vector<double> &last_iterate() const { return _last; }
  [[nodiscard]] double residual() const { return _residual; }

private:
  double _residual;
  std::vector<double> _last;
};

/// Power iteration over live edges (both directions for undirected graphs).
/// Dangling mass is spread uniformly. Throws PageRankDivergence after
/// `max_iterations` without reaching an L1 change below `tolerance`.
RankVector pagerank(const Graph &g, const PageRankOptions &options = {});

std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. Throws std::domain_error when either
/// side has zero rank variance.
double spearman_rho(std::span<const double> a, std::span<const double> b);
double spearman_rho(const RankVector &a, const RankVector &b);

struct Partition {
  std::vector<std::int32_t> labels; // dense, 0..community_count-1
  std::int32_t community_count = 0;
  double modularity = 0.0;
};

/// Newman modularity over live edges. Returns 0 for an edgeless graph.
double modularity(const Graph &g, std::span<const std::int32_t> labels);

/// Multi-level Louvain: shuffled local moving, then aggregation, until no
/// level improves modularity. Requires an undirected graph.
Partition louvain(const Graph &g, Rng &rng);

/// Chance-corrected pair-counting agreement. Entries equal to kUnlabeled in
/// either vector are skipped. Throws std::invalid_argument with fewer than 2
/// usable nodes.
double adjusted_rand_index(std::span<const std::int32_t> a, std::span<const std::int32_t> b);

/// Hop count; std::nullopt means unreachable.
using Distance = std::optional<std::uint32_t>;
using NodePair = std::pair<NodeId, NodeId>;

std::vector<Distance> bfs_distances(const Graph &g, NodeId source);
Distance shortest_path_distance(const Graph &g, NodeId u, NodeId v);

/// One BFS per distinct source; results in input order.
std::vector<Distance> batch_spsp(const Graph &g, std::span<const NodePair> pairs);

struct PathQuerySet {
  std::vector<NodePair> pairs;
  std::vector<Distance> baseline;

  [[nodiscard]] std::size_t size() const { return pairs.size(); }
};

/// Attaches baseline distances measured on `reference`. Rejects u == v.
PathQuerySet make_query_set(const Graph &reference, std::vector<NodePair> pairs);

/// min(count, all distinct pairs) pairs drawn without repetition. Undirected
/// graphs treat (u, v) and (v, u) as the same pair.
std::vector<NodePair> sample_node_pairs(NodeId node_count, bool directed, std::size_t count, Rng &rng);

/// Mean over pairs of (distance on g - baseline distance). A pair that is
/// unreachable on g but was reachable in the baseline contributes the node
/// count. Pairs unreachable in the baseline contribute 0.
double mean_distance_increase(const Graph &g, const PathQuerySet &queries);

} // namespace sparrl::metrics
