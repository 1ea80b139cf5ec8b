#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sparrl/graph.h"
#include "sparrl/rng.h"

namespace sparrl {

/**
 * One agent observation: a batch of candidate edges plus everything the
 * Q-network reads about them, frozen at sampling time. The snapshot carries
 * each endpoint's live 1-hop neighborhood so a transition replayed after
 * further pruning still sees the graph as it was.
 */
struct CandidateSubgraph {
  std::vector<EdgeRef> edges;
  double edge_ratio = 1.0;
  bool directed = false;

  // Distinct endpoints of `edges` in order of first appearance.
  std::vector<NodeId> nodes;
  std::vector<Degree> node_degrees;
  // Slots into `nodes` per edge.
  std::vector<std::uint32_t> source_slot;
  std::vector<std::uint32_t> destination_slot;
  // CSR over `nodes`: live neighbors (direction ignored, deduplicated, sorted).
  std::vector<std::uint32_t> neighborhood_offsets;
  std::vector<NodeId> neighborhood;

  [[nodiscard]] std::size_t size() const { return edges.size(); }
  [[nodiscard]] bool empty() const { return edges.empty(); }
  [[nodiscard]] Degree source_degree(std::size_t i) const { return node_degrees[source_slot[i]]; }
  [[nodiscard]] Degree destination_degree(std::size_t i) const { return node_degrees[destination_slot[i]]; }
  [[nodiscard]] std::span<const NodeId> neighbors_of_slot(std::size_t slot) const {
    return {neighborhood.data() + neighborhood_offsets[slot], neighborhood.data() + neighborhood_offsets[slot + 1]};
  }
};

/// Snapshot of the given live edges of `g`, in the given order.
CandidateSubgraph snapshot_subgraph(const Graph &g, std::span<const EdgeId> edges);

/// min(size, live edges) distinct live edges sampled uniformly without replacement.
/// Throws std::invalid_argument for size 0 and std::logic_error when no edge is live.
CandidateSubgraph sample_subgraph(const Graph &g, std::size_t size, Rng &rng);

/// Throws std::logic_error if any edge of the snapshot has since been pruned.
void require_live(const Graph &g, const CandidateSubgraph &sub);

} // namespace sparrl
