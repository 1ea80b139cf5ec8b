#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sparrl/graph.h"
#include "sparrl/nn.h"
#include "sparrl/subgraph.h"

namespace sparrl {

struct QNetworkShape {
  NodeId node_count = 0;
  bool directed = false;
  std::size_t embedding_dim = 64;
  std::size_t hidden_units = 128;

  friend bool operator==(const QNetworkShape &, const QNetworkShape &) = default;
};

/// GAT output for a set of nodes plus the attention weights that produced it.
struct NodeAttention {
  nn::Matrix embeddings;                       // one row per requested node
  std::vector<std::vector<NodeId>> neighbors;  // attended nodes, self first
  std::vector<std::vector<double>> weights;    // aligned with `neighbors`
};

/**
 * Edge-scoring Q-network. For each candidate edge (u, v):
 *
 *   node encoder   GAT over the live 1-hop neighborhood of u (and v), then
 *                  [attended embedding, log1p degrees, edge ratio] through two
 *                  128-unit LeakyReLU layers
 *   edge encoder   sum of both endpoint encodings (concatenation, source
 *                  first, for directed graphs) through two 128-unit LeakyReLU
 *                  layers
 *   value head     one linear unit
 *
 * Every edge is scored independently, so any number of candidates may be
 * scored in one call.
 */
class QNetwork {
public:
  QNetwork() = default;
  QNetwork(const QNetworkShape &shape, Rng &rng);

  [[nodiscard]] const QNetworkShape &shape() const { return _shape; }
  [[nodiscard]] std::vector<nn::Parameter *> parameters();
  [[nodiscard]] std::vector<const nn::Parameter *> parameters() const;
  [[nodiscard]] std::size_t parameter_count() const;
  [[nodiscard]] static std::size_t parameter_count(const QNetworkShape &shape);

  /// Parameter leaves on one tape, shared by every forward pass built on it.
  struct Bound {
    std::vector<nn::Var> vars;
  };
  Bound bind(nn::Tape &tape);
  Bound bind_frozen(nn::Tape &tape) const;
  /// One subgraph and the edges of it to score (all edges when `edges` is empty).
  struct Query {
    const CandidateSubgraph *sub = nullptr;
    std::span<const std::uint32_t> edges;
  };
  /// Scores every query in one pass; rows of the result follow query order.
  nn::Var apply(nn::Tape &tape, const Bound &params, std::span<const Query> queries) const;
  nn::Var apply(nn::Tape &tape, const Bound &params, const CandidateSubgraph &sub, std::span<const std::uint32_t> edges = {}) const;

  /// Scores the selected edges of `sub` (all edges when `edges` is empty) as
  /// a column vector; gradients flow into this network's parameters.
  nn::Var forward(nn::Tape &tape, const CandidateSubgraph &sub, std::span<const std::uint32_t> edges = {});
  /// Same computation with parameters bound read-only.
  nn::Var forward_frozen(nn::Tape &tape, const CandidateSubgraph &sub, std::span<const std::uint32_t> edges = {}) const;

  [[nodiscard]] std::vector<double> q_values(const CandidateSubgraph &sub) const;
  /// Rejects snapshots naming edges that are no longer live in `g`.
  [[nodiscard]] std::vector<double> q_values(const Graph &g, const CandidateSubgraph &sub) const;

  /// Attention step of the node encoder on the live neighborhoods of `nodes`.
  [[nodiscard]] NodeAttention encode_nodes(const Graph &g, std::span<const NodeId> nodes) const;

  /// this <- (1 - rate) * this + rate * source
  void soft_update(const QNetwork &source, double rate);
  void copy_from(const QNetwork &source);

private:
  QNetworkShape _shape;
  nn::Parameter _embedding;
  nn::GraphAttention _attention;
  nn::Linear _node_hidden;
  nn::Linear _node_out;
  nn::Linear _edge_hidden;
  nn::Linear _edge_out;
  nn::Linear _head;
};

} // namespace sparrl
