#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sparrl/rng.h"

namespace sparrl {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

/// Raised for malformed or inconsistent input data (edge lists, label files, checkpoints).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
public:
  ParseError(std::size_t line, const std::string &what);
  ParseError(const std::string &path, const ParseError &inner);
  [[nodiscard]] std::size_t line() const { return _line; }

private:
  std::size_t _line;
};

struct EdgeRef {
  NodeId source = 0;
  NodeId destination = 0;
  EdgeId id = 0;

  friend bool operator==(const EdgeRef &, const EdgeRef &) = default;
};

/// Undirected graphs report the same value in both fields.
struct Degree {
  std::uint32_t in = 0;
  std::uint32_t out = 0;

  friend bool operator==(const Degree &, const Degree &) = default;
};

struct LoadReport {
  std::size_t lines_read = 0;
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_dropped = 0;
};

/**
 * Edge set over a fixed vertex set. Every edge of the original graph keeps a
 * stable id for the graph's lifetime; pruning flips a liveness flag so that
 * edge ids stored elsewhere (replay transitions, reports) never dangle.
 *
 * Undirected edges are stored once and are reachable from both endpoints.
 */
class Graph {
public:
  struct Incidence {
    NodeId neighbor;
    EdgeId edge;
    bool outgoing; // always true for undirected graphs
  };

  Graph() = default;

  /// Builds a simple graph. Self-loops and duplicate edges (for undirected
  /// graphs: either orientation) are dropped and counted in `report`.
  static Graph from_edges(
      NodeId node_count,
      bool directed,
      std::span<const std::pair<NodeId, NodeId>> edges,
      LoadReport *report = nullptr
  );

  [[nodiscard]] NodeId node_count() const { return static_cast<NodeId>(_incidence.size()); }
  [[nodiscard]] bool directed() const { return _directed; }
  [[nodiscard]] std::size_t edge_count() const { return _live_list.size(); }
  [[nodiscard]] std::size_t original_edge_count() const { return _edges.size(); }
  [[nodiscard]] double edge_kept_ratio() const;

  [[nodiscard]] const EdgeRef &edge(EdgeId id) const { return _edges.at(id); }
  [[nodiscard]] bool is_live(EdgeId id) const { return _live.at(id) != 0; }
  [[nodiscard]] std::optional<EdgeId> find_edge(NodeId u, NodeId v) const;

  /// Total live degree (in + out for directed graphs).
  [[nodiscard]] std::uint32_t degree(NodeId u) const;
  [[nodiscard]] Degree degrees(NodeId u) const;
  [[nodiscard]] std::vector<Degree> degree_vector() const;

  /// All original incidences of `u`, live or not.
  [[nodiscard]] std::span<const Incidence> incidences(NodeId u) const { return _incidence.at(u); }

  /// Visits live neighbors ignoring direction.
  template <typename Visitor> void for_each_neighbor(NodeId u, Visitor &&visit) const {
    for (const Incidence &inc : _incidence[u]) {
      if (_live[inc.edge]) {
        visit(inc.neighbor, inc.edge);
      }
    }
  }

  /// Visits live neighbors reachable along edge direction.
  template <typename Visitor> void for_each_out_neighbor(NodeId u, Visitor &&visit) const {
    for (const Incidence &inc : _incidence[u]) {
      if (inc.outgoing && _live[inc.edge]) {
        visit(inc.neighbor, inc.edge);
      }
    }
  }

  /// Live edge ids in ascending order.
  [[nodiscard]] std::vector<EdgeId> live_edges() const;
  /// Live edge ids in internal (unordered) layout; index i is valid for i < edge_count().
  [[nodiscard]] std::span<const EdgeId> live_edge_pool() const { return _live_list; }

  /// Throws std::logic_error if the edge is already pruned.
  void prune_edge(EdgeId id);
  void prune_edge(const EdgeRef &e) { prune_edge(e.id); }

  /// Original node tokens as they appeared in the input file (index = compact id).
  [[nodiscard]] const std::vector<std::string> &node_names() const { return _names; }
  void set_node_names(std::vector<std::string> names);
  [[nodiscard]] std::optional<NodeId> node_by_name(const std::string &name) const;

private:
  bool _directed = false;
  std::vector<EdgeRef> _edges;
  std::vector<std::uint8_t> _live;
  std::vector<EdgeId> _live_list;
  std::vector<std::uint32_t> _live_position;
  std::vector<std::vector<Incidence>> _incidence;
  std::vector<Degree> _degrees;
  std::vector<std::string> _names;
};

struct LoadedGraph {
  Graph graph;
  LoadReport report;
};

/// Parses whitespace-separated "u v" lines; '#' starts a comment line.
/// Node tokens are compacted to 0..|V|-1 in order of first appearance.
LoadedGraph parse_edge_list(std::istream &in, bool directed);
LoadedGraph load_edge_list(const std::string &path, bool directed);

/// Writes live edges ordered by edge id using the original node tokens.
void write_edge_list(const Graph &g, std::ostream &out, std::span<const std::string> header = {});
void save_edge_list(const Graph &g, const std::string &path, std::span<const std::string> header = {});

/// Persisted id map: "compact_id original_token" per line.
void write_id_map(const Graph &g, std::ostream &out);

/// Copy of `original` in which only the edges listed in `in` are live.
/// Listed edges must exist in `original`.
Graph restrict_to_edge_list(const Graph &original, std::istream &in);
Graph load_sparsified(const Graph &original, const std::string &path);

inline constexpr std::int32_t kUnlabeled = -1;

/// One community per line; node tokens resolved through the graph's id map.
/// Returns a per-node label (kUnlabeled for nodes listed nowhere).
std::vector<std::int32_t> parse_communities(std::istream &in, const Graph &g);
std::vector<std::int32_t> load_communities(const std::string &path, const Graph &g);

/// Prunes `count` distinct live edges chosen uniformly at random.
void random_prune(Graph &g, std::size_t count, Rng &rng);

/// `count` distinct indices from [0, population) chosen uniformly (Floyd's algorithm).
std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t count, Rng &rng);

} // namespace sparrl
