#include "sparrl/baselines.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace sparrl::baselines {

namespace {

std::string format_double(const double x) {
  std::ostringstream out;
  out.precision(10);
  out << x;
  return out.str();
}

// Live incident edges of v as (neighbor, edge) ordered by `before`.
template <typename Less>
std::vector<std::pair<NodeId, EdgeId>> ranked_incidences(const Graph &g, const NodeId v, Less before) {
  std::vector<std::pair<NodeId, EdgeId>> inc;
  g.for_each_neighbor(v, [&](const NodeId u, const EdgeId e) { inc.emplace_back(u, e); });
  std::sort(inc.begin(), inc.end(), before);
  return inc;
}

// Per-node rankings used by LD (neighbor degree, descending).
std::vector<std::vector<std::pair<NodeId, EdgeId>>> degree_rankings(const Graph &g) {
  std::vector<std::vector<std::pair<NodeId, EdgeId>>> out(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) {
    out[v] = ranked_incidences(g, v, [&](const auto &a, const auto &b) {
      const auto da = g.degree(a.first);
      const auto db = g.degree(b.first);
      return da != db ? da > db : a.first < b.first;
    });
  }
  return out;
}

// Per-node rankings used by L-Spar (closed-neighborhood Jaccard, descending).
std::vector<std::vector<std::pair<NodeId, EdgeId>>> jaccard_rankings(const Graph &g) {
  std::vector<double> score(g.original_edge_count(), 0.0);
  for (const EdgeId e : g.live_edges()) {
    score[e] = closed_jaccard(g, g.edge(e).source, g.edge(e).destination);
  }
  std::vector<std::vector<std::pair<NodeId, EdgeId>>> out(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) {
    out[v] = ranked_incidences(g, v, [&](const auto &a, const auto &b) {
      return score[a.second] != score[b.second] ? score[a.second] > score[b.second] : a.first < b.first;
    });
  }
  return out;
}

// Keeps, at every node, the first keep(deg) entries of its ranking.
template <typename KeepCount>
Graph apply_keep_rule(
    const Graph &g,
    const std::vector<std::vector<std::pair<NodeId, EdgeId>>> &rankings,
    KeepCount keep
) {
  std::vector<std::uint8_t> kept(g.original_edge_count(), 0);
  for (NodeId v = 0; v < g.node_count(); ++v) {
    const auto &rank = rankings[v];
    const std::size_t k = std::min(rank.size(), keep(rank.size()));
    for (std::size_t i = 0; i < k; ++i) {
      kept[rank[i].second] = 1;
    }
  }
  Graph out = g;
  for (const EdgeId e : g.live_edges()) {
    if (!kept[e]) {
      out.prune_edge(e);
    }
  }
  return out;
}

// Smallest exponent at which each edge survives, given per-node rank thresholds.
std::vector<double> edge_thresholds(
    const Graph &g,
    const std::vector<std::vector<std::pair<NodeId, EdgeId>>> &rankings,
    double (*rank_threshold)(std::size_t rank, std::size_t degree)
) {
  std::vector<double> theta(g.original_edge_count(), std::numeric_limits<double>::infinity());
  for (NodeId v = 0; v < g.node_count(); ++v) {
    const auto &rank = rankings[v];
    for (std::size_t i = 0; i < rank.size(); ++i) {
      theta[rank[i].second] = std::min(theta[rank[i].second], rank_threshold(i + 1, rank.size()));
    }
  }
  std::vector<double> live;
  for (const EdgeId e : g.live_edges()) {
    live.push_back(theta[e]);
  }
  return live;
}

struct ExponentChoice {
  double exponent = 1.0;
  std::size_t kept = 0;
};

// Survivor count is a step function of the exponent with steps at the edge
// thresholds. Takes one exponent strictly inside each step (clipped below at
// `lo`), which sidesteps rounding exactly at a threshold, and returns the one whose count is nearest to `target`
// (ties: more edges kept).
ExponentChoice choose_exponent(std::vector<double> theta, const std::size_t target, const double lo) {
  std::sort(theta.begin(), theta.end());
  constexpr double kMerge = 1e-12;
  std::vector<double> groups;
  std::vector<std::size_t> cumulative;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (groups.empty() || theta[i] - groups.back() > kMerge) {
      groups.push_back(theta[i]);
      cumulative.push_back(0);
    }
    cumulative.back() = i + 1;
  }
  ExponentChoice best;
  bool found = false;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const bool last = i + 1 == groups.size();
    const double lower = std::max(groups[i], lo);
    const double upper = last ? 1.0 : groups[i + 1];
    if (!last && !(upper > lower)) {
      continue;
    }
    const double x = last ? 1.0 : 0.5 * (lower + upper);
    const std::size_t kept = cumulative[i];
    const auto dist = [&](const std::size_t k) { return k > target ? k - target : target - k; };
    if (!found || dist(kept) < dist(best.kept) || (dist(kept) == dist(best.kept) && kept > best.kept)) {
      best = {x, kept};
      found = true;
    }
  }
  return best;
}

double ld_rank_threshold(const std::size_t rank, const std::size_t degree) {
  if (rank <= 1 || degree <= 1) {
    return 0.0;
  }
  return std::log(static_cast<double>(rank)) / std::log(static_cast<double>(degree));
}

double lspar_rank_threshold(const std::size_t rank, const std::size_t degree) {
  if (rank <= 1 || degree <= 1) {
    return -std::numeric_limits<double>::infinity();
  }
  return std::log(static_cast<double>(rank - 1)) / std::log(static_cast<double>(degree));
}

std::size_t ld_keep(const std::size_t degree, const double alpha) {
  return static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(degree), alpha)));
}

std::size_t lspar_keep(const std::size_t degree, const double exponent) {
  return static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(degree), exponent)));
}

Result finish_threshold_method(
    const std::string &method,
    const std::string &key,
    Graph graph,
    const ExponentChoice &choice,
    const std::size_t target
) {
  Result r;
  r.method = method;
  r.params = key + "=" + format_double(choice.exponent);
  if (graph.edge_count() != target) {
    r.notes.push_back(
        method + ": no exponent keeps exactly " + std::to_string(target) + " edges; nearest achievable is " +
        std::to_string(graph.edge_count()) + " (" + key + "=" + format_double(choice.exponent) + ")"
    );
  }
  r.graph = std::move(graph);
  return r;
}

} // namespace

std::size_t target_edge_count(const Graph &g, const double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw std::invalid_argument("edge-kept ratio must lie in (0, 1]");
  }
  return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(g.edge_count())));
}

Result random_edge(const Graph &g, const double ratio, Rng &rng) {
  const std::size_t target = target_edge_count(g, ratio);
  Result r;
  r.method = "RE";
  r.graph = g;
  random_prune(r.graph, g.edge_count() - target, rng);
  return r;
}

Graph local_degree_keep(const Graph &g, const double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("local degree alpha must lie in [0, 1]");
  }
  return apply_keep_rule(g, degree_rankings(g), [alpha](const std::size_t d) { return ld_keep(d, alpha); });
}

Result local_degree(const Graph &g, const double ratio) {
  const std::size_t target = target_edge_count(g, ratio);
  const auto rankings = degree_rankings(g);
  const ExponentChoice choice = choose_exponent(edge_thresholds(g, rankings, ld_rank_threshold), target, 0.0);
  Graph out = apply_keep_rule(g, rankings, [&](const std::size_t d) { return ld_keep(d, choice.exponent); });
  return finish_threshold_method("LD", "alpha", std::move(out), choice, target);
}

double closed_jaccard(const Graph &g, const NodeId u, const NodeId v) {
  const auto closed = [&](const NodeId x) {
    std::vector<NodeId> n{x};
    g.for_each_neighbor(x, [&](const NodeId y, EdgeId) { n.push_back(y); });
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
    return n;
  };
  const std::vector<NodeId> a = closed(u);
  const std::vector<NodeId> b = closed(v);
  std::vector<NodeId> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  const std::size_t uni = a.size() + b.size() - common.size();
  return static_cast<double>(common.size()) / static_cast<double>(uni);
}

Graph l_spar_keep(const Graph &g, const double exponent) {
  if (!(exponent > 0.0 && exponent <= 1.0)) {
    throw std::invalid_argument("L-Spar exponent must lie in (0, 1]");
  }
  return apply_keep_rule(g, jaccard_rankings(g), [exponent](const std::size_t d) { return lspar_keep(d, exponent); });
}

Result l_spar(const Graph &g, const double ratio) {
  const std::size_t target = target_edge_count(g, ratio);
  const auto rankings = jaccard_rankings(g);
  const ExponentChoice choice = choose_exponent(edge_thresholds(g, rankings, lspar_rank_threshold), target, 0.0);
  Graph out = apply_keep_rule(g, rankings, [&](const std::size_t d) { return lspar_keep(d, choice.exponent); });
  return finish_threshold_method("L-Spar", "e", std::move(out), choice, target);
}

std::vector<std::uint64_t> forest_fire_visits(const Graph &g, const ForestFireOptions &options, Rng &rng) {
  const double p = options.burn_probability;
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("forest fire burn probability must lie in (0, 1)");
  }
  std::vector<std::uint64_t> visits(g.original_edge_count(), 0);
  const NodeId n = g.node_count();
  if (g.edge_count() == 0 || n == 0) {
    return visits;
  }
  const auto budget = static_cast<std::uint64_t>(std::ceil(options.budget_factor * static_cast<double>(g.edge_count())));
  // Burn counts have mean p / (1 - p).
  std::geometric_distribution<std::uint64_t> burns(1.0 - p);

  std::vector<NodeId> unstarted(n);
  std::iota(unstarted.begin(), unstarted.end(), 0u);
  std::size_t unstarted_count = n;
  std::vector<std::uint8_t> burnt(n, 0);
  std::vector<NodeId> touched;
  std::vector<NodeId> queue;
  std::vector<std::pair<NodeId, EdgeId>> fresh;

  std::uint64_t total = 0;
  for (std::uint64_t fires = 0; total < budget && fires < budget; ++fires) {
    if (unstarted_count == 0) {
      unstarted_count = n;
    }
    const std::size_t pick = uniform_index(rng, unstarted_count);
    const NodeId start = unstarted[pick];
    std::swap(unstarted[pick], unstarted[unstarted_count - 1]);
    --unstarted_count;

    for (const NodeId v : touched) {
      burnt[v] = 0;
    }
    touched.assign(1, start);
    burnt[start] = 1;
    queue.assign(1, start);
    for (std::size_t head = 0; head < queue.size() && total < budget; ++head) {
      const NodeId v = queue[head];
      fresh.clear();
      g.for_each_neighbor(v, [&](const NodeId u, const EdgeId e) {
        if (!burnt[u]) {
          fresh.emplace_back(u, e);
        }
      });
      const auto x = std::min<std::uint64_t>(burns(rng), fresh.size());
      for (std::uint64_t i = 0; i < x && total < budget; ++i) {
        const std::size_t j = i + uniform_index(rng, fresh.size() - i);
        std::swap(fresh[i], fresh[j]);
        const auto [u, e] = fresh[i];
        if (burnt[u]) {
          continue; // reached twice from v through parallel candidates
        }
        ++visits[e];
        ++total;
        burnt[u] = 1;
        touched.push_back(u);
        queue.push_back(u);
      }
    }
  }
  return visits;
}

Result edge_forest_fire(const Graph &g, const double ratio, Rng &rng, const ForestFireOptions &options) {
  const std::size_t target = target_edge_count(g, ratio);
  const std::vector<std::uint64_t> visits = forest_fire_visits(g, options, rng);
  std::vector<std::pair<std::pair<std::uint64_t, std::uint64_t>, EdgeId>> order;
  for (const EdgeId e : g.live_edges()) {
    order.push_back({{visits[e], rng()}, e});
  }
  std::sort(order.begin(), order.end());
  Result r;
  r.method = "EFF";
  r.params = "p=" + format_double(options.burn_probability) + ";budget_factor=" + format_double(options.budget_factor);
  r.graph = g;
  for (std::size_t i = 0; i < g.edge_count() - target; ++i) {
    r.graph.prune_edge(order[i].second);
  }
  return r;
}

int effective_stretch(const int t) {
  if (t < 1) {
    throw std::invalid_argument("stretch must be at least 1");
  }
  return t % 2 == 1 ? t : t - 1;
}

Graph baswana_sen_spanner(const Graph &g, const int stretch, Rng &rng) {
  if (stretch < 1 || stretch % 2 == 0) {
    throw std::invalid_argument(
        "spanner stretch must be odd (t = 2k - 1); got " + std::to_string(stretch) + ", use " +
        std::to_string(std::max(1, stretch - 1)) + " or " + std::to_string(stretch + 1)
    );
  }
  const int k = (stretch + 1) / 2;
  const NodeId n = g.node_count();
  constexpr std::int64_t kNone = -1;

  std::vector<std::int64_t> cluster(n);
  std::iota(cluster.begin(), cluster.end(), 0);
  std::vector<std::uint8_t> remaining(g.original_edge_count(), 0);
  for (const EdgeId e : g.live_edges()) {
    remaining[e] = 1;
  }
  std::vector<std::uint8_t> in_spanner(g.original_edge_count(), 0);
  const double keep_probability = n > 0 ? std::pow(static_cast<double>(n), -1.0 / k) : 0.0;

  // Remaining incident edges of v grouped by the neighbor's cluster: first
  // edge per cluster, in incidence order.
  const auto adjacent_clusters = [&](const NodeId v, const std::vector<std::int64_t> &cl) {
    std::vector<std::pair<std::int64_t, EdgeId>> first;
    for (const Graph::Incidence &inc : g.incidences(v)) {
      if (!remaining[inc.edge] || cl[inc.neighbor] == kNone) {
        continue;
      }
      const std::int64_t c = cl[inc.neighbor];
      if (std::none_of(first.begin(), first.end(), [c](const auto &f) { return f.first == c; })) {
        first.emplace_back(c, inc.edge);
      }
    }
    return first;
  };
  const auto discard_edges_to = [&](const NodeId v, const std::int64_t c, const std::vector<std::int64_t> &cl) {
    for (const Graph::Incidence &inc : g.incidences(v)) {
      if (remaining[inc.edge] && (c == kNone || cl[inc.neighbor] == c)) {
        remaining[inc.edge] = 0;
      }
    }
  };

  for (int round = 1; round < k; ++round) {
    std::vector<std::uint8_t> sampled(n, 0);
    for (NodeId c = 0; c < n; ++c) {
      sampled[c] = uniform_unit(rng) < keep_probability ? 1 : 0;
    }
    std::vector<std::int64_t> next = cluster;
    for (NodeId v = 0; v < n; ++v) {
      if (cluster[v] == kNone || sampled[cluster[v]]) {
        continue;
      }
      const auto adjacent = adjacent_clusters(v, cluster);
      const auto joined = std::find_if(adjacent.begin(), adjacent.end(), [&](const auto &a) { return sampled[a.first]; });
      if (joined != adjacent.end()) {
        in_spanner[joined->second] = 1;
        next[v] = joined->first;
        discard_edges_to(v, joined->first, cluster);
      } else {
        for (const auto &[c, e] : adjacent) {
          in_spanner[e] = 1;
        }
        discard_edges_to(v, kNone, cluster);
        next[v] = kNone;
      }
    }
    cluster = std::move(next);
    for (const EdgeId e : g.live_edges()) {
      const EdgeRef &ref = g.edge(e);
      if (!remaining[e]) {
        continue;
      }
      const std::int64_t a = cluster[ref.source];
      const std::int64_t b = cluster[ref.destination];
      if (a == kNone || b == kNone || a == b) {
        remaining[e] = 0;
      }
    }
  }
  for (NodeId v = 0; v < n; ++v) {
    if (cluster[v] == kNone) {
      continue;
    }
    for (const auto &[c, e] : adjacent_clusters(v, cluster)) {
      in_spanner[e] = 1;
    }
  }

  Graph out = g;
  for (const EdgeId e : g.live_edges()) {
    if (!in_spanner[e]) {
      out.prune_edge(e);
    }
  }
  return out;
}

std::vector<SpannerRow> spanner_comparison_protocol(
    const Graph &g,
    const std::vector<int> &stretch_values,
    const metrics::PathQuerySet &queries,
    const EdgeCountSparsifier &sparsifier,
    const std::uint64_t seed,
    const std::size_t runs
) {
  if (runs == 0) {
    throw std::invalid_argument("spanner protocol needs at least one run");
  }
  std::vector<SpannerRow> rows;
  for (const int t : stretch_values) {
    SpannerRow row;
    row.stretch = t;
    row.effective_stretch = effective_stretch(t);
    if (row.effective_stretch != t) {
      row.note = "stretch " + std::to_string(t) + " is even; ran t=" + std::to_string(row.effective_stretch) +
                 " (k=" + std::to_string((row.effective_stretch + 1) / 2) + ")";
    }
    double edges = 0.0;
    double penalty = 0.0;
    for (std::size_t run = 0; run < runs; ++run) {
      Rng rng = make_stream(derive_seed(seed, "spanner", static_cast<std::uint64_t>(t) * 1000003u + run), "spanner");
      const Graph s = baswana_sen_spanner(g, row.effective_stretch, rng);
      edges += static_cast<double>(s.edge_count());
      penalty += metrics::mean_distance_increase(s, queries);
    }
    row.mean_edges = edges / static_cast<double>(runs);
    row.mean_ratio = row.mean_edges / static_cast<double>(g.original_edge_count());
    row.spanner_rspsp = penalty / static_cast<double>(runs);
    row.sparrl_edges = static_cast<std::size_t>(std::llround(row.mean_edges));
    const Graph learned = sparsifier(g, row.sparrl_edges, derive_seed(seed, "sparrl", static_cast<std::uint64_t>(t)));
    if (learned.edge_count() != row.sparrl_edges) {
      throw std::logic_error("spanner protocol: sparsifier missed the matched edge count");
    }
    row.sparrl_rspsp = metrics::mean_distance_increase(learned, queries);
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace sparrl::baselines
