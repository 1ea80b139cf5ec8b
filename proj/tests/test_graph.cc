#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "sparrl/graph.h"
#include "sparrl/subgraph.h"
#include "support.h"

using namespace sparrl;

TEST_SUITE("graph") {

TEST_CASE("karate loads with 34 nodes and 78 edges") {
  const LoadedGraph loaded = load_edge_list(test::data_path("karate.txt"), false);
  CHECK(loaded.graph.node_count() == 34);
  CHECK(loaded.graph.edge_count() == 78);
  CHECK(loaded.report.duplicates_dropped == 0);
  CHECK(loaded.report.self_loops_dropped == 0);
}

TEST_CASE("reversed duplicate collapses when undirected") {
  std::istringstream in("0 1\n1 0\n");
  const LoadedGraph loaded = parse_edge_list(in, false);
  CHECK(loaded.graph.edge_count() == 1);
  CHECK(loaded.report.duplicates_dropped == 1);

  std::istringstream directed("0 1\n1 0\n");
  CHECK(parse_edge_list(directed, true).graph.edge_count() == 2);
}

TEST_CASE("self loop is dropped and counted") {
  std::istringstream in("# comment\n3 3\n3 4\n");
  const LoadedGraph loaded = parse_edge_list(in, false);
  CHECK(loaded.graph.edge_count() == 1);
  CHECK(loaded.report.self_loops_dropped == 1);
}

TEST_CASE("malformed line reports its line number") {
  std::istringstream in("0 1\n1 2\nbroken\n");
  try {
    parse_edge_list(in, false);
    FAIL("expected a parse error");
  } catch (const ParseError &e) {
    CHECK(e.line() == 3);
  }
  std::istringstream extra("0 1 2\n");
  CHECK_THROWS_AS(parse_edge_list(extra, false), ParseError);
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(parse_edge_list(empty, false), DataError);
  std::istringstream loops("1 1\n");
  CHECK_THROWS_AS(parse_edge_list(loops, false), DataError);
}

TEST_CASE("sparse ids are compacted in order of first appearance") {
  std::istringstream in("100 7\n7 42\n");
  const Graph g = parse_edge_list(in, false).graph;
  REQUIRE(g.node_count() == 3);
  CHECK(g.node_names() == std::vector<std::string>{"100", "7", "42"});
  CHECK(g.node_by_name("42") == NodeId{2});
  std::ostringstream map;
  write_id_map(g, map);
  CHECK(map.str() == "0 100\n1 7\n2 42\n");
}

TEST_CASE("communities map nodes to line index") {
  std::istringstream edges("0 1\n1 2\n2 3\n3 4\n");
  const Graph g = parse_edge_list(edges, false).graph;
  std::istringstream in("0 1 2\n3 4\n");
  CHECK(parse_communities(in, g) == std::vector<std::int32_t>{0, 0, 0, 1, 1});

  std::istringstream overlap("0 1 2\n2 3\n");
  CHECK_THROWS_AS(parse_communities(overlap, g), ParseError);
  std::istringstream absent("0 1\n99\n");
  CHECK_THROWS_WITH_AS(parse_communities(absent, g), doctest::Contains("99"), ParseError);
  std::istringstream partial("0 1\n");
  CHECK(parse_communities(partial, g)[4] == kUnlabeled);
}

TEST_CASE("karate ground truth labels every node") {
  const Graph g = load_edge_list(test::data_path("karate.txt"), false).graph;
  const auto labels = load_communities(test::data_path("karate_communities.txt"), g);
  CHECK(std::count(labels.begin(), labels.end(), 0) == 17);
  CHECK(std::count(labels.begin(), labels.end(), 1) == 17);
}

TEST_CASE("prune updates degrees on both endpoints") {
  Graph g = test::make_graph(3, {{0, 1}, {1, 2}, {0, 2}});
  g.prune_edge(*g.find_edge(1, 0));
  CHECK(g.degree(0) == 1);
  CHECK(g.degree(1) == 1);
  CHECK(g.degree(2) == 2);
  CHECK(g.edge_count() == 2);
  CHECK(g.original_edge_count() == 3);
}

TEST_CASE("pruning a path edge isolates the end") {
  Graph g = test::path_graph(3);
  g.prune_edge(*g.find_edge(0, 1));
  CHECK(g.degree(0) == 0);
  CHECK(test::floyd_warshall(g)[0][2] == test::kInf);
}

TEST_CASE("pruning a dead edge is a logic error") {
  Graph g = test::path_graph(3);
  const EdgeId e = *g.find_edge(0, 1);
  g.prune_edge(e);
  CHECK_THROWS_AS(g.prune_edge(e), std::logic_error);
}

TEST_CASE("edge ids are stable and orientation free when undirected") {
  const Graph g = test::complete_graph(5);
  std::set<EdgeId> ids;
  for (NodeId u = 0; u < 5; ++u)
    for (NodeId v = u + 1; v < 5; ++v) {
      CHECK(g.find_edge(u, v) == g.find_edge(v, u));
      ids.insert(*g.find_edge(u, v));
    }
  CHECK(ids.size() == 10);

  const Graph d = test::make_graph(2, {{0, 1}}, true);
  CHECK(d.find_edge(0, 1).has_value());
  CHECK_FALSE(d.find_edge(1, 0).has_value());
  CHECK(d.degrees(0) == Degree{0, 1});
  CHECK(d.degrees(1) == Degree{1, 0});
}

TEST_CASE("edge kept ratio") {
  Graph g = test::make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 2}, {0, 3}, {0, 4}, {1, 3}});
  CHECK(g.edge_kept_ratio() == 1.0);
  g.prune_edge(0);
  g.prune_edge(5);
  CHECK(g.edge_kept_ratio() == 0.75);
  for (const EdgeId e : g.live_edges()) g.prune_edge(e);
  CHECK(g.edge_kept_ratio() == 0.0);
}

TEST_CASE("incremental degrees match recomputation under random prunes") {
  Rng rng = make_stream(11, "test");
  for (int trial = 0; trial < 30; ++trial) {
    const bool directed = trial % 2 == 1;
    Graph g = test::random_graph(10, 0.4, rng, directed);
    while (g.edge_count() > 0) {
      random_prune(g, 1, rng);
      std::vector<Degree> recomputed(g.node_count());
      std::size_t live = 0;
      for (EdgeId e = 0; e < g.original_edge_count(); ++e) {
        if (!g.is_live(e)) continue;
        ++live;
        const EdgeRef &ref = g.edge(e);
        if (directed) {
          ++recomputed[ref.source].out;
          ++recomputed[ref.destination].in;
        } else {
          for (NodeId x : {ref.source, ref.destination}) {
            ++recomputed[x].in;
            ++recomputed[x].out;
          }
        }
      }
      REQUIRE(g.degree_vector() == recomputed);
      REQUIRE(g.edge_count() == live);
    }
  }
}

TEST_CASE("random prune edge cases") {
  Rng rng = make_stream(1, "test");
  Graph g = test::complete_graph(4);
  random_prune(g, 0, rng);
  CHECK(g.edge_count() == 6);
  CHECK_THROWS_AS(random_prune(g, 7, rng), std::invalid_argument);
  random_prune(g, 6, rng);
  CHECK(g.edge_count() == 0);
}

TEST_CASE("random prune of one K4 edge is uniform") {
  Rng rng = make_stream(2, "test");
  const Graph k4 = test::complete_graph(4);
  std::vector<int> removed(6, 0);
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    Graph g = k4;
    random_prune(g, 1, rng);
    for (EdgeId e = 0; e < 6; ++e) removed[e] += g.is_live(e) ? 0 : 1;
  }
  for (const int c : removed) CHECK(std::abs(c / double(trials) - 1.0 / 6.0) < 0.02);
}

TEST_CASE("sample_subgraph draws distinct live edges uniformly") {
  Rng rng = make_stream(3, "test");
  const Graph k4 = test::complete_graph(4);
  std::vector<int> picked(6, 0);
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const CandidateSubgraph s = sample_subgraph(k4, 1, rng);
    REQUIRE(s.size() == 1);
    ++picked[s.edges[0].id];
  }
  for (const int c : picked) CHECK(std::abs(c / double(trials) - 1.0 / 6.0) < 0.02);

  Graph g = test::random_graph(12, 0.5, rng);
  random_prune(g, g.edge_count() / 2, rng);
  for (int t = 0; t < 200; ++t) {
    const CandidateSubgraph s = sample_subgraph(g, 8, rng);
    std::set<EdgeId> ids;
    for (const EdgeRef &e : s.edges) {
      REQUIRE(g.is_live(e.id));
      ids.insert(e.id);
    }
    REQUIRE(ids.size() == s.size());
  }
}

TEST_CASE("sample_subgraph snapshot fields") {
  Rng rng = make_stream(4, "test");
  Graph g = test::make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 2}, {0, 3}, {0, 4}, {1, 3}});
  const CandidateSubgraph all = sample_subgraph(g, 100, rng);
  CHECK(all.size() == 8);
  g.prune_edge(0);
  g.prune_edge(1);
  const CandidateSubgraph s = sample_subgraph(g, 3, rng);
  CHECK(s.edge_ratio == 0.75);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.source_degree(i).out == g.degree(s.edges[i].source));
    CHECK(s.destination_degree(i).out == g.degree(s.edges[i].destination));
    const auto nb = s.neighbors_of_slot(s.source_slot[i]);
    CHECK(nb.size() == g.degree(s.edges[i].source));
  }
  CHECK_THROWS_AS(sample_subgraph(g, 0, rng), std::invalid_argument);
  g.prune_edge(s.edges[0].id);
  CHECK_THROWS_AS(require_live(g, s), std::logic_error);
  for (const EdgeId e : g.live_edges()) g.prune_edge(e);
  CHECK_THROWS_AS(sample_subgraph(g, 1, rng), std::logic_error);
}

TEST_CASE("save and reload gives the same live edge set") {
  Rng rng = make_stream(5, "test");
  const Graph original = load_edge_list(test::data_path("karate.txt"), false).graph;
  Graph g = original;
  random_prune(g, 30, rng);
  std::stringstream buffer;
  const std::vector<std::string> header{"method=RE"};
  write_edge_list(g, buffer, header);
  CHECK(buffer.str().rfind("# method=RE\n", 0) == 0);
  const Graph back = restrict_to_edge_list(original, buffer);
  CHECK(back.live_edges() == g.live_edges());

  // reloading as a fresh graph is isomorphic under the id map
  std::stringstream again;
  write_edge_list(g, again);
  const Graph fresh = parse_edge_list(again, false).graph;
  CHECK(fresh.edge_count() == g.edge_count());
  for (const EdgeId e : fresh.live_edges()) {
    const EdgeRef &ref = fresh.edge(e);
    const auto u = original.node_by_name(fresh.node_names()[ref.source]);
    const auto v = original.node_by_name(fresh.node_names()[ref.destination]);
    REQUIRE(u);
    REQUIRE(v);
    const auto id = original.find_edge(*u, *v);
    REQUIRE(id);
    CHECK(g.is_live(*id));
  }

  std::istringstream foreign("0 1\n0 33\n");
  CHECK_THROWS_AS(restrict_to_edge_list(original, foreign), ParseError);
}

TEST_CASE("sample_without_replacement") {
  Rng rng = make_stream(6, "test");
  const auto s = sample_without_replacement(10, 10, rng);
  CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 10);
  CHECK_THROWS_AS(sample_without_replacement(3, 4, rng), std::invalid_argument);
}

TEST_CASE("named streams are independent and reproducible") {
  Rng a = make_stream(9, "exploration");
  Rng b = make_stream(9, "exploration");
  Rng c = make_stream(9, "replay");
  CHECK(a() == b());
  CHECK(a() != c());
  CHECK(derive_seed(9, "cell", 0) != derive_seed(9, "cell", 1));
  Rng d = make_stream(9, "x");
  d();
  const Rng restored = deserialize_rng(serialize_rng(d));
  CHECK(restored == d);
}

}
