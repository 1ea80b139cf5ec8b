#include "sparrl/subgraph.h"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace sparrl {

CandidateSubgraph snapshot_subgraph(const Graph &g, const std::span<const EdgeId> edges) {
  CandidateSubgraph sub;
  sub.directed = g.directed();
  sub.edge_ratio = g.edge_kept_ratio();
  sub.edges.reserve(edges.size());
  sub.source_slot.reserve(edges.size());
  sub.destination_slot.reserve(edges.size());

  std::unordered_map<NodeId, std::uint32_t> slot_of;
  const auto slot = [&](const NodeId u) {
    const auto [it, inserted] = slot_of.try_emplace(u, static_cast<std::uint32_t>(sub.nodes.size()));
    if (inserted) {
      sub.nodes.push_back(u);
    }
    return it->second;
  };

  for (const EdgeId e : edges) {
    if (!g.is_live(e)) {
      throw std::logic_error("snapshot_subgraph: edge " + std::to_string(e) + " is not live");
    }
    const EdgeRef &ref = g.edge(e);
    sub.edges.push_back(ref);
    sub.source_slot.push_back(slot(ref.source));
    sub.destination_slot.push_back(slot(ref.destination));
  }

  sub.node_degrees.reserve(sub.nodes.size());
  sub.neighborhood_offsets.reserve(sub.nodes.size() + 1);
  sub.neighborhood_offsets.push_back(0);
  std::vector<NodeId> scratch;
  for (const NodeId u : sub.nodes) {
    sub.node_degrees.push_back(g.degrees(u));
    scratch.clear();
    g.for_each_neighbor(u, [&](const NodeId v, EdgeId) { scratch.push_back(v); });
    std::sort(scratch.begin(), scratch.end());
    scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
    sub.neighborhood.insert(sub.neighborhood.end(), scratch.begin(), scratch.end());
    sub.neighborhood_offsets.push_back(static_cast<std::uint32_t>(sub.neighborhood.size()));
  }
  return sub;
}

CandidateSubgraph sample_subgraph(const Graph &g, const std::size_t size, Rng &rng) {
  if (size == 0) {
    throw std::invalid_argument("sample_subgraph: size must be at least 1");
  }
  if (g.edge_count() == 0) {
    throw std::logic_error("sample_subgraph: graph has no live edges");
  }
  const auto pool = g.live_edge_pool();
  const std::size_t take = std::min(size, pool.size());
  std::vector<EdgeId> chosen;
  chosen.reserve(take);
  for (const std::size_t i : sample_without_replacement(pool.size(), take, rng)) {
    chosen.push_back(pool[i]);
  }
  return snapshot_subgraph(g, chosen);
}

void require_live(const Graph &g, const CandidateSubgraph &sub) {
  for (const EdgeRef &e : sub.edges) {
    if (!g.is_live(e.id)) {
      throw std::logic_error("stale subgraph: edge " + std::to_string(e.id) + " has been pruned");
    }
  }
}

} // namespace sparrl
