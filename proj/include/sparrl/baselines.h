#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sparrl/graph.h"
#include "sparrl/metrics.h"
#include "sparrl/rng.h"

namespace sparrl::baselines {

/// Sparsifier output plus the parameters actually used, for run reports.
struct Result {
  Graph graph;
  std::string method;
  std::string params; // "key=value;key=value"
  std::vector<std::string> notes;
};

/// round(r * |E|) for the input's live edge count; rejects r outside (0, 1].
std::size_t target_edge_count(const Graph &g, double ratio);

Result random_edge(const Graph &g, double ratio, Rng &rng);

// Local Degree. Node v ranks its incident edges by the other endpoint's degree
// (descending, ties by node id) and keeps the top floor(deg(v)^alpha); an edge
// survives if either endpoint keeps it.
Graph local_degree_keep(const Graph &g, double alpha);
/// Picks alpha so the survivor count is nearest to round(r * |E|).
Result local_degree(const Graph &g, double ratio);

// L-Spar. Edge score is the Jaccard similarity of the closed neighborhoods;
// node v keeps its top ceil(deg(v)^e) edges by score (ties by node id).
double closed_jaccard(const Graph &g, NodeId u, NodeId v);
Graph l_spar_keep(const Graph &g, double exponent);
Result l_spar(const Graph &g, double ratio);

// Edge Forest Fire.
struct ForestFireOptions {
  double burn_probability = 0.95;
  double budget_factor = 5.0; // total edge burns per fire sequence, times |E|
};
/// Per-edge visit counts (indexed by edge id) from repeated fires.
std::vector<std::uint64_t> forest_fire_visits(const Graph &g, const ForestFireOptions &options, Rng &rng);
Result edge_forest_fire(const Graph &g, double ratio, Rng &rng, const ForestFireOptions &options = {});

/// Randomized clustering spanner for unweighted graphs with stretch t = 2k - 1.
/// Throws std::invalid_argument for even or non-positive t.
Graph baswana_sen_spanner(const Graph &g, int stretch, Rng &rng);

/// Largest odd stretch not above t (t >= 1).
int effective_stretch(int t);

struct SpannerRow {
  int stretch = 0;           // as requested
  int effective_stretch = 0; // odd value actually run
  double mean_ratio = 0.0;   // spanner edge-kept ratio, averaged over runs
  double mean_edges = 0.0;
  double spanner_rspsp = 0.0;
  std::size_t sparrl_edges = 0;
  double sparrl_rspsp = 0.0;
  std::string note;
};

/// Sparsifies the graph to exactly the given live-edge count.
using EdgeCountSparsifier = std::function<Graph(const Graph &, std::size_t target_edges, std::uint64_t seed)>;

/// For each stretch: `runs` spanner constructions, mean kept edges and mean
/// SPSP penalty on `queries`; then the learned sparsifier at the rounded mean
/// edge count on the same queries.
std::vector<SpannerRow> spanner_comparison_protocol(
    const Graph &g,
    const std::vector<int> &stretch_values,
    const metrics::PathQuerySet &queries,
    const EdgeCountSparsifier &sparsifier,
    std::uint64_t seed,
    std::size_t runs = 16
);

} // namespace sparrl::baselines
