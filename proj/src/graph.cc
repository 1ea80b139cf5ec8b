#include "sparrl/graph.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace sparrl {

namespace {

std::uint64_t pair_key(NodeId u, NodeId v, const bool directed) {
  if (!directed && v < u) {
    std::swap(u, v);
  }
  return (static_cast<std::uint64_t>(u) << 32) | v;
}

std::ifstream open_input(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open '" + path + "'");
  }
  return in;
}

bool is_blank_or_comment(const std::string &line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#' || line[first] == '%';
}

} // namespace

ParseError::ParseError(const std::size_t line, const std::string &what)
    : DataError("line " + std::to_string(line) + ": " + what),
      _line(line) {}

ParseError::ParseError(const std::string &path, const ParseError &inner)
    : DataError(path + ": " + inner.what()),
      _line(inner.line()) {}

Graph Graph::from_edges(
    const NodeId node_count,
    const bool directed,
    const std::span<const std::pair<NodeId, NodeId>> edges,
    LoadReport *report
) {
  Graph g;
  g._directed = directed;
  g._incidence.resize(node_count);
  g._degrees.resize(node_count);

  std::unordered_set<std::uint64_t> seen;
  seen.reserve(edges.size() * 2);
  std::size_t self_loops = 0;
  std::size_t duplicates = 0;
  for (const auto &[u, v] : edges) {
    if (u >= node_count || v >= node_count) {
      throw std::out_of_range("edge endpoint exceeds node count");
    }
    if (u == v) {
      ++self_loops;
      continue;
    }
    if (!seen.insert(pair_key(u, v, directed)).second) {
      ++duplicates;
      continue;
    }
    const auto id = static_cast<EdgeId>(g._edges.size());
    g._edges.push_back({u, v, id});
    g._incidence[u].push_back({v, id, true});
    g._incidence[v].push_back({u, id, !directed});
    if (directed) {
      ++g._degrees[u].out;
      ++g._degrees[v].in;
    } else {
      ++g._degrees[u].in;
      ++g._degrees[u].out;
      ++g._degrees[v].in;
      ++g._degrees[v].out;
    }
  }
  g._live.assign(g._edges.size(), 1);
  g._live_list.resize(g._edges.size());
  g._live_position.resize(g._edges.size());
  for (EdgeId e = 0; e < g._edges.size(); ++e) {
    g._live_list[e] = e;
    g._live_position[e] = e;
  }
  g._names.resize(node_count);
  for (NodeId u = 0; u < node_count; ++u) {
    g._names[u] = std::to_string(u);
  }
  if (report != nullptr) {
    report->self_loops_dropped += self_loops;
    report->duplicates_dropped += duplicates;
  }
  return g;
}

double Graph::edge_kept_ratio() const {
  if (_edges.empty()) {
    return 0.0;
  }
  return static_cast<double>(_live_list.size()) / static_cast<double>(_edges.size());
}

std::optional<EdgeId> Graph::find_edge(const NodeId u, const NodeId v) const {
  if (u >= node_count() || v >= node_count()) {
    return std::nullopt;
  }
  const NodeId scan = _incidence[u].size() <= _incidence[v].size() ? u : v;
  const NodeId other = scan == u ? v : u;
  for (const Incidence &inc : _incidence[scan]) {
    if (inc.neighbor != other) {
      continue;
    }
    const EdgeRef &e = _edges[inc.edge];
    if (!_directed || (e.source == u && e.destination == v)) {
      return inc.edge;
    }
  }
  return std::nullopt;
}

std::uint32_t Graph::degree(const NodeId u) const {
  const Degree &d = _degrees.at(u);
  return _directed ? d.in + d.out : d.out;
}

Degree Graph::degrees(const NodeId u) const {
  return _degrees.at(u);
}

std::vector<Degree> Graph::degree_vector() const {
  return _degrees;
}

std::vector<EdgeId> Graph::live_edges() const {
  std::vector<EdgeId> ids(_live_list.begin(), _live_list.end());
  std::sort(ids.begin(), ids.end());
  return ids;
}

void Graph::prune_edge(const EdgeId id) {
  if (id >= _edges.size()) {
    throw std::out_of_range("prune_edge: unknown edge id " + std::to_string(id));
  }
  if (!_live[id]) {
    throw std::logic_error("prune_edge: edge " + std::to_string(id) + " is already pruned");
  }
  _live[id] = 0;

  const std::uint32_t pos = _live_position[id];
  const EdgeId last = _live_list.back();
  _live_list[pos] = last;
  _live_position[last] = pos;
  _live_list.pop_back();

  const EdgeRef &e = _edges[id];
  if (_directed) {
    --_degrees[e.source].out;
    --_degrees[e.destination].in;
  } else {
    for (const NodeId x : {e.source, e.destination}) {
      --_degrees[x].in;
      --_degrees[x].out;
    }
  }
}

void Graph::set_node_names(std::vector<std::string> names) {
  if (names.size() != node_count()) {
    throw std::invalid_argument("node name count does not match node count");
  }
  _names = std::move(names);
}

std::optional<NodeId> Graph::node_by_name(const std::string &name) const {
  // Linear scan; callers that resolve many names build their own index.
  for (NodeId u = 0; u < _names.size(); ++u) {
    if (_names[u] == name) {
      return u;
    }
  }
  return std::nullopt;
}

LoadedGraph parse_edge_list(std::istream &in, const bool directed) {
  std::unordered_map<std::string, NodeId> ids;
  std::vector<std::string> names;
  std::vector<std::pair<NodeId, NodeId>> pairs;
  LoadReport report;

  const auto intern = [&](const std::string &token) {
    const auto [it, inserted] = ids.try_emplace(token, static_cast<NodeId>(names.size()));
    if (inserted) {
      names.push_back(token);
    }
    return it->second;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank_or_comment(line)) {
      continue;
    }
    std::istringstream fields(line);
    std::string a;
    std::string b;
    std::string extra;
    if (!(fields >> a >> b)) {
      throw ParseError(line_no, "expected two node ids, got '" + line + "'");
    }
    if (fields >> extra) {
      throw ParseError(line_no, "trailing field '" + extra + "'");
    }
    ++report.lines_read;
    const NodeId u = intern(a);
    const NodeId v = intern(b);
    pairs.emplace_back(u, v);
  }

  LoadedGraph loaded;
  loaded.graph = Graph::from_edges(static_cast<NodeId>(names.size()), directed, pairs, &report);
  if (loaded.graph.original_edge_count() == 0) {
    throw DataError("edge list contains no usable edges");
  }
  loaded.graph.set_node_names(std::move(names));
  loaded.report = report;
  return loaded;
}

LoadedGraph load_edge_list(const std::string &path, const bool directed) {
  auto in = open_input(path);
  try {
    return parse_edge_list(in, directed);
  } catch (const ParseError &e) {
    throw ParseError(path, e);
  }
}

void write_edge_list(const Graph &g, std::ostream &out, const std::span<const std::string> header) {
  for (const std::string &line : header) {
    out << "# " << line << '\n';
  }
  const auto &names = g.node_names();
  for (const EdgeId e : g.live_edges()) {
    const EdgeRef &ref = g.edge(e);
    out << names[ref.source] << ' ' << names[ref.destination] << '\n';
  }
}

void save_edge_list(const Graph &g, const std::string &path, const std::span<const std::string> header) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write '" + path + "'");
  }
  write_edge_list(g, out, header);
}

void write_id_map(const Graph &g, std::ostream &out) {
  const auto &names = g.node_names();
  for (NodeId u = 0; u < names.size(); ++u) {
    out << u << ' ' << names[u] << '\n';
  }
}

namespace {

std::unordered_map<std::string, NodeId> name_index(const Graph &g) {
  std::unordered_map<std::string, NodeId> index;
  const auto &names = g.node_names();
  index.reserve(names.size());
  for (NodeId u = 0; u < names.size(); ++u) {
    index.emplace(names[u], u);
  }
  return index;
}

} // namespace

Graph restrict_to_edge_list(const Graph &original, std::istream &in) {
  const auto index = name_index(original);
  std::vector<std::uint8_t> keep(original.original_edge_count(), 0);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank_or_comment(line)) {
      continue;
    }
    std::istringstream fields(line);
    std::string a;
    std::string b;
    if (!(fields >> a >> b)) {
      throw ParseError(line_no, "expected two node ids, got '" + line + "'");
    }
    const auto ua = index.find(a);
    const auto ub = index.find(b);
    if (ua == index.end() || ub == index.end()) {
      throw ParseError(line_no, "node '" + (ua == index.end() ? a : b) + "' is not in the original graph");
    }
    const auto e = original.find_edge(ua->second, ub->second);
    if (!e) {
      throw ParseError(line_no, "edge (" + a + ", " + b + ") is not in the original graph");
    }
    keep[*e] = 1;
  }

  Graph g = original;
  for (const EdgeId e : original.live_edges()) {
    if (!keep[e]) {
      g.prune_edge(e);
    }
  }
  return g;
}

Graph load_sparsified(const Graph &original, const std::string &path) {
  auto in = open_input(path);
  try {
    return restrict_to_edge_list(original, in);
  } catch (const ParseError &e) {
    throw ParseError(path, e);
  }
}

std::vector<std::int32_t> parse_communities(std::istream &in, const Graph &g) {
  const auto index = name_index(g);
  std::vector<std::int32_t> labels(g.node_count(), kUnlabeled);

  std::string line;
  std::size_t line_no = 0;
  std::int32_t community = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank_or_comment(line)) {
      continue;
    }
    std::istringstream fields(line);
    std::string token;
    while (fields >> token) {
      const auto it = index.find(token);
      if (it == index.end()) {
        throw ParseError(line_no, "node '" + token + "' is not in the graph");
      }
      std::int32_t &label = labels[it->second];
      if (label != kUnlabeled && label != community) {
        throw ParseError(line_no, "node '" + token + "' belongs to more than one community");
      }
      label = community;
    }
    ++community;
  }
  return labels;
}

std::vector<std::int32_t> load_communities(const std::string &path, const Graph &g) {
  auto in = open_input(path);
  try {
    return parse_communities(in, g);
  } catch (const ParseError &e) {
    throw ParseError(path, e);
  }
}

std::vector<std::size_t> sample_without_replacement(const std::size_t population, const std::size_t count, Rng &rng) {
  if (count > population) {
    throw std::invalid_argument("cannot sample more items than the population holds");
  }
  std::vector<std::size_t> chosen;
  chosen.reserve(count);
  std::unordered_set<std::size_t> taken;
  taken.reserve(count * 2);
  for (std::size_t j = population - count; j < population; ++j) {
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    if (taken.insert(t).second) {
      chosen.push_back(t);
    } else {
      taken.insert(j);
      chosen.push_back(j);
    }
  }
  return chosen;
}

void random_prune(Graph &g, const std::size_t count, Rng &rng) {
  if (count > g.edge_count()) {
    throw std::invalid_argument(
        "random_prune: asked for " + std::to_string(count) + " prunes but only " +
        std::to_string(g.edge_count()) + " edges are live"
    );
  }
  const auto pool = g.live_edge_pool();
  std::vector<EdgeId> victims;
  victims.reserve(count);
  for (const std::size_t i : sample_without_replacement(pool.size(), count, rng)) {
    victims.push_back(pool[i]);
  }
  for (const EdgeId e : victims) {
    g.prune_edge(e);
  }
}

} // namespace sparrl
