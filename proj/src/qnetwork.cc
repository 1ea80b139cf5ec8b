#include "sparrl/qnetwork.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace sparrl {

namespace {

std::size_t degree_features(const bool directed) {
  return directed ? 2 : 1;
}

// Local node table for one forward pass: attention centers first, then any
// further neighbors they attend to.
struct LocalTable {
  std::vector<NodeId> nodes;
  std::unordered_map<NodeId, std::uint32_t> row_of;

  std::uint32_t row(const NodeId u) {
    const auto [it, inserted] = row_of.try_emplace(u, static_cast<std::uint32_t>(nodes.size()));
    if (inserted) {
      nodes.push_back(u);
    }
    return it->second;
  }
};

} // namespace

QNetwork::QNetwork(const QNetworkShape &shape, Rng &rng)
    : _shape(shape) {
  if (shape.node_count == 0 || shape.embedding_dim == 0 || shape.hidden_units == 0) {
    throw std::invalid_argument("QNetwork: node count and layer widths must be positive");
  }
  const std::size_t d = shape.embedding_dim;
  const std::size_t h = shape.hidden_units;
  _embedding = nn::Parameter("node_embedding", nn::Matrix(shape.node_count, d));
  nn::init_uniform(_embedding, 0.1, rng);
  _attention = nn::GraphAttention("attention", d, rng);
  _node_hidden = nn::Linear("node_encoder.0", d + degree_features(shape.directed) + 1, h, rng);
  _node_out = nn::Linear("node_encoder.1", h, h, rng);
  _edge_hidden = nn::Linear("edge_encoder.0", shape.directed ? 2 * h : h, h, rng);
  _edge_out = nn::Linear("edge_encoder.1", h, h, rng);
  _head = nn::Linear("value_head", h, 1, rng);
}

std::vector<nn::Parameter *> QNetwork::parameters() {
  return {
      &_embedding,
      &_attention.projection,
      &_attention.coefficient,
      &_attention.coefficient_bias,
      &_node_hidden.weight,
      &_node_hidden.bias,
      &_node_out.weight,
      &_node_out.bias,
      &_edge_hidden.weight,
      &_edge_hidden.bias,
      &_edge_out.weight,
      &_edge_out.bias,
      &_head.weight,
      &_head.bias,
  };
}

std::vector<const nn::Parameter *> QNetwork::parameters() const {
  auto mutable_params = const_cast<QNetwork *>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

std::size_t QNetwork::parameter_count() const {
  std::size_t total = 0;
  for (const nn::Parameter *p : parameters()) {
    total += p->value.size();
  }
  return total;
}

std::size_t QNetwork::parameter_count(const QNetworkShape &s) {
  const std::size_t d = s.embedding_dim;
  const std::size_t h = s.hidden_units;
  const std::size_t node_in = d + degree_features(s.directed) + 1;
  const std::size_t edge_in = s.directed ? 2 * h : h;
  return s.node_count * d         // embedding table
         + d * d + 2 * d + 1      // attention
         + node_in * h + h        // node encoder
         + h * h + h              //
         + edge_in * h + h        // edge encoder
         + h * h + h              //
         + h + 1;                 // value head
}

QNetwork::Bound QNetwork::bind(nn::Tape &tape) {
  Bound b;
  for (nn::Parameter *p : parameters()) {
    b.vars.push_back(tape.parameter(*p));
  }
  return b;
}

QNetwork::Bound QNetwork::bind_frozen(nn::Tape &tape) const {
  Bound b;
  for (const nn::Parameter *p : parameters()) {
    b.vars.push_back(tape.frozen(*p));
  }
  return b;
}

nn::Var QNetwork::apply(
    nn::Tape &tape,
    const Bound &params,
    const CandidateSubgraph &sub,
    const std::span<const std::uint32_t> edges
) const {
  const Query q{&sub, edges};
  return apply(tape, params, std::span<const Query>(&q, 1));
}

nn::Var QNetwork::apply(nn::Tape &tape, const Bound &params, const std::span<const Query> queries) const {
  if (params.vars.size() != 14) {
    throw std::invalid_argument("q_forward: parameters not bound by this network");
  }
  if (queries.empty()) {
    throw std::invalid_argument("q_forward: no subgraphs to score");
  }
  // Same order as parameters().
  const std::vector<nn::Var> &p = params.vars;
  const nn::Var embedding = p[0];
  const nn::Var projection = p[1], coefficient = p[2], coefficient_bias = p[3];
  const nn::Var node_w0 = p[4], node_b0 = p[5], node_w1 = p[6], node_b1 = p[7];
  const nn::Var edge_w0 = p[8], edge_b0 = p[9], edge_w1 = p[10], edge_b1 = p[11];
  const nn::Var head_w = p[12], head_b = p[13];

  // A center is one endpoint within one query: the same node seen by two
  // snapshots carries different degrees and neighborhoods.
  struct Center {
    std::size_t query;
    std::uint32_t slot;
  };
  std::vector<Center> centers;
  std::vector<std::uint32_t> source_rows;
  std::vector<std::uint32_t> destination_rows;
  std::vector<std::int32_t> center_of_slot;
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    const CandidateSubgraph &sub = *queries[qi].sub;
    if (sub.empty()) {
      throw std::invalid_argument("q_forward: empty subgraph");
    }
    if (sub.directed != _shape.directed) {
      throw std::invalid_argument("q_forward: subgraph directedness does not match the network");
    }
    center_of_slot.assign(sub.nodes.size(), -1);
    const auto center = [&](const std::uint32_t slot) {
      if (center_of_slot[slot] < 0) {
        center_of_slot[slot] = static_cast<std::int32_t>(centers.size());
        centers.push_back({qi, slot});
      }
      return static_cast<std::uint32_t>(center_of_slot[slot]);
    };
    const auto score = [&](const std::uint32_t e) {
      if (e >= sub.size()) {
        throw std::out_of_range("q_forward: edge index outside subgraph");
      }
      source_rows.push_back(center(sub.source_slot[e]));
      destination_rows.push_back(center(sub.destination_slot[e]));
    };
    if (queries[qi].edges.empty()) {
      for (std::uint32_t e = 0; e < sub.size(); ++e) {
        score(e);
      }
    } else {
      for (const std::uint32_t e : queries[qi].edges) {
        score(e);
      }
    }
  }

  // Embedding rows are shared by node id.
  LocalTable table;
  for (const Center &c : centers) {
    table.row(queries[c.query].sub->nodes[c.slot]);
  }
  nn::AttentionLayout layout;
  layout.offsets.push_back(0);
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const CandidateSubgraph &sub = *queries[centers[c].query].sub;
    const std::uint32_t self = table.row(sub.nodes[centers[c].slot]);
    layout.center_row.push_back(self);
    layout.neighbor_row.push_back(self);
    for (const NodeId v : sub.neighbors_of_slot(centers[c].slot)) {
      layout.center_row.push_back(self);
      layout.neighbor_row.push_back(table.row(v));
    }
    layout.offsets.push_back(static_cast<std::uint32_t>(layout.center_row.size()));
  }

  const nn::Var embeddings = tape.gather_rows(embedding, std::vector<std::uint32_t>(table.nodes.begin(), table.nodes.end()));
  const nn::Var attended = nn::graph_attention(tape, embeddings, projection, coefficient, coefficient_bias, layout);

  const std::size_t dd = degree_features(_shape.directed);
  nn::Matrix extra(centers.size(), dd + 1);
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const CandidateSubgraph &sub = *queries[centers[c].query].sub;
    const Degree deg = sub.node_degrees[centers[c].slot];
    if (_shape.directed) {
      extra.at(c, 0) = std::log1p(static_cast<double>(deg.in));
      extra.at(c, 1) = std::log1p(static_cast<double>(deg.out));
    } else {
      extra.at(c, 0) = std::log1p(static_cast<double>(deg.out));
    }
    extra.at(c, dd) = sub.edge_ratio;
  }
  nn::Var node = tape.concat_cols(attended, tape.constant(std::move(extra)));
  node = tape.leaky_relu(nn::linear(tape, node, node_w0, node_b0), nn::kLeakySlope);
  node = tape.leaky_relu(nn::linear(tape, node, node_w1, node_b1), nn::kLeakySlope);

  const nn::Var src = tape.gather_rows(node, std::move(source_rows));
  const nn::Var dst = tape.gather_rows(node, std::move(destination_rows));
  nn::Var edge = _shape.directed ? tape.concat_cols(src, dst) : tape.add(src, dst);
  edge = tape.leaky_relu(nn::linear(tape, edge, edge_w0, edge_b0), nn::kLeakySlope);
  edge = tape.leaky_relu(nn::linear(tape, edge, edge_w1, edge_b1), nn::kLeakySlope);
  return nn::linear(tape, edge, head_w, head_b);
}

nn::Var QNetwork::forward(nn::Tape &tape, const CandidateSubgraph &sub, const std::span<const std::uint32_t> edges) {
  return apply(tape, bind(tape), sub, edges);
}

nn::Var QNetwork::forward_frozen(nn::Tape &tape, const CandidateSubgraph &sub, const std::span<const std::uint32_t> edges) const {
  return apply(tape, bind_frozen(tape), sub, edges);
}

std::vector<double> QNetwork::q_values(const CandidateSubgraph &sub) const {
  nn::Tape tape;
  return tape.value(forward_frozen(tape, sub)).data;
}

std::vector<double> QNetwork::q_values(const Graph &g, const CandidateSubgraph &sub) const {
  require_live(g, sub);
  return q_values(sub);
}

NodeAttention QNetwork::encode_nodes(const Graph &g, const std::span<const NodeId> nodes) const {
  LocalTable table;
  for (const NodeId u : nodes) {
    if (u >= g.node_count()) {
      throw std::out_of_range("encode_nodes: node outside graph");
    }
    table.row(u);
  }
  NodeAttention result;
  nn::AttentionLayout layout;
  layout.offsets.push_back(0);
  for (const NodeId u : nodes) {
    const std::uint32_t center = table.row(u);
    std::vector<NodeId> attended{u};
    g.for_each_neighbor(u, [&](const NodeId v, EdgeId) { attended.push_back(v); });
    std::sort(attended.begin() + 1, attended.end());
    attended.erase(std::unique(attended.begin() + 1, attended.end()), attended.end());
    for (const NodeId v : attended) {
      layout.center_row.push_back(center);
      layout.neighbor_row.push_back(table.row(v));
    }
    layout.offsets.push_back(static_cast<std::uint32_t>(layout.center_row.size()));
    result.neighbors.push_back(std::move(attended));
  }

  nn::Tape tape;
  nn::Var weights;
  const nn::Var embeddings = tape.gather_rows(tape.frozen(_embedding), std::vector<std::uint32_t>(table.nodes.begin(), table.nodes.end()));
  const nn::Var out = nn::graph_attention(
      tape,
      embeddings,
      tape.frozen(_attention.projection),
      tape.frozen(_attention.coefficient),
      tape.frozen(_attention.coefficient_bias),
      layout,
      &weights
  );
  // Centers may repeat in `nodes`; the layout has one segment per request.
  result.embeddings = tape.value(out);
  const nn::Matrix &w = tape.value(weights);
  for (std::size_t c = 0; c < nodes.size(); ++c) {
    result.weights.emplace_back(w.data.begin() + layout.offsets[c], w.data.begin() + layout.offsets[c + 1]);
  }
  return result;
}

void QNetwork::soft_update(const QNetwork &source, const double rate) {
  if (!(source._shape == _shape)) {
    throw std::invalid_argument("soft_update: network shapes differ");
  }
  auto mine = parameters();
  const auto theirs = source.parameters();
  for (std::size_t k = 0; k < mine.size(); ++k) {
    auto &dst = mine[k]->value.data;
    const auto &src = theirs[k]->value.data;
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = (1.0 - rate) * dst[i] + rate * src[i];
    }
  }
}

void QNetwork::copy_from(const QNetwork &source) {
  if (!(source._shape == _shape)) {
    throw std::invalid_argument("copy_from: network shapes differ");
  }
  auto mine = parameters();
  const auto theirs = source.parameters();
  for (std::size_t k = 0; k < mine.size(); ++k) {
    mine[k]->value = theirs[k]->value;
  }
}

} // namespace sparrl
