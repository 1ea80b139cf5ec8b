#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "sparrl/metrics.h"
#include "support.h"

using namespace sparrl;
using namespace sparrl::metrics;

TEST_SUITE("metrics") {

TEST_CASE("pagerank on a directed 3-cycle is uniform") {
  const Graph g = test::make_graph(3, {{0, 1}, {1, 2}, {2, 0}}, true);
  for (const double s : pagerank(g).scores) CHECK(s == doctest::Approx(1.0 / 3).epsilon(1e-9));
}

TEST_CASE("pagerank spreads dangling mass") {
  const Graph g = test::make_graph(2, {}, false);
  const auto pr = pagerank(g).scores;
  CHECK(pr[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pr[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("pagerank hub of K1,4 matches the two-variable fixed point") {
  // h = (1-d)/5 + d*4*l,  l = (1-d)/5 + d*h/4
  const double d = 0.85, c = (1 - d) / 5;
  const double hub = (c + d * 4 * c) / (1 - d * d);
  const double leaf = c + d * hub / 4;
  const auto pr = pagerank(test::star_graph(4)).scores;
  CHECK(std::abs(pr[0] - hub) < 1e-9);
  CHECK(std::abs(hub - 0.475676) < 1e-6);
  for (int i = 1; i <= 4; ++i) CHECK(std::abs(pr[i] - leaf) < 1e-9);
}

TEST_CASE("pagerank is uniform on vertex-transitive graphs and always sums to one") {
  for (const Graph &g : {test::complete_graph(6), test::make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}})}) {
    const auto pr = pagerank(g).scores;
    for (const double s : pr) CHECK(std::abs(s - 1.0 / pr.size()) < 1e-9);
  }
  Rng rng = make_stream(1, "test");
  for (int t = 0; t < 50; ++t) {
    const Graph g = test::random_graph(15, 0.2, rng, t % 2 == 0);
    const auto pr = pagerank(g).scores;
    CHECK(std::abs(std::accumulate(pr.begin(), pr.end(), 0.0) - 1.0) < 1e-9);
    CHECK(*std::min_element(pr.begin(), pr.end()) >= 0.0);
  }
}

TEST_CASE("pagerank divergence carries the last iterate") {
  PageRankOptions o;
  o.max_iterations = 1;
  o.tolerance = 0.0;
  try {
    pagerank(test::star_graph(4), o);
    FAIL("expected divergence");
  } catch (const PageRankDivergence &e) {
    CHECK(e.last_iterate().size() == 5);
  }
}

TEST_CASE("average ranks share ties") {
  const std::vector<double> v{10, 20, 20, 5};
  CHECK(average_ranks(v) == std::vector<double>{2, 3.5, 3.5, 1});
}

TEST_CASE("spearman examples") {
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> r{4, 3, 2, 1};
  const std::vector<double> b{1, 2, 4, 3};
  CHECK(spearman_rho(a, a) == doctest::Approx(1.0));
  CHECK(spearman_rho(a, r) == doctest::Approx(-1.0));
  // 1 - 6 * 2 / (4 * 15)
  CHECK(spearman_rho(a, b) == doctest::Approx(0.8));
  const std::vector<double> flat{1, 1, 1, 1};
  CHECK_THROWS_AS(spearman_rho(a, flat), std::domain_error);
  const std::vector<double> one{1};
  CHECK_THROWS_AS(spearman_rho(one, one), std::invalid_argument);
}

TEST_CASE("spearman is symmetric and invariant under monotone transforms") {
  Rng rng = make_stream(2, "test");
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(12), b(12);
    for (auto &x : a) x = uniform_unit(rng);
    for (auto &x : b) x = std::floor(uniform_unit(rng) * 5);
    std::vector<double> ta(a.size());
    std::transform(a.begin(), a.end(), ta.begin(), [](double x) { return std::exp(3 * x) - 7; });
    CHECK(spearman_rho(a, b) == doctest::Approx(spearman_rho(b, a)).epsilon(1e-12));
    CHECK(spearman_rho(ta, b) == doctest::Approx(spearman_rho(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("modularity of two triangles is one half") {
  const Graph g = test::two_triangles(false);
  const std::vector<std::int32_t> truth{0, 0, 0, 1, 1, 1};
  CHECK(modularity(g, truth) == 0.5);
  const std::vector<std::int32_t> swapped{1, 1, 1, 0, 0, 0};
  CHECK(modularity(g, swapped) == 0.5);
  const std::vector<std::int32_t> one(6, 0);
  CHECK(modularity(g, one) == doctest::Approx(0.0));
  CHECK(modularity(test::make_graph(3, {}), std::vector<std::int32_t>{0, 1, 2}) == 0.0);
}

TEST_CASE("modularity matches the dense Newman formula") {
  Rng rng = make_stream(3, "test");
  for (int t = 0; t < 50; ++t) {
    const Graph g = test::random_graph(12, 0.3, rng);
    std::vector<std::int32_t> labels(12);
    for (auto &l : labels) l = static_cast<std::int32_t>(uniform_index(rng, 4));
    const double q = modularity(g, labels);
    CHECK(std::abs(q - test::brute_modularity(g, labels)) < 1e-12);
    CHECK(q >= -0.5);
    CHECK(q <= 1.0);
  }
}

TEST_CASE("louvain finds the two triangles") {
  Rng rng = make_stream(4, "test");
  const Partition p = louvain(test::two_triangles(false), rng);
  CHECK(p.community_count == 2);
  CHECK(p.labels[0] == p.labels[1]);
  CHECK(p.labels[1] == p.labels[2]);
  CHECK(p.labels[3] == p.labels[4]);
  CHECK(p.labels[0] != p.labels[3]);
  CHECK(p.modularity == 0.5);
}

TEST_CASE("louvain on an edgeless graph gives singletons") {
  Rng rng = make_stream(5, "test");
  const Partition p = louvain(test::make_graph(4, {}), rng);
  CHECK(p.community_count == 4);
  CHECK(p.modularity == 0.0);
}

TEST_CASE("louvain on karate lands in the known modularity band") {
  const Graph g = load_edge_list(test::data_path("karate.txt"), false).graph;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Rng rng = make_stream(seed, "louvain");
    const Partition p = louvain(g, rng);
    CHECK(p.modularity >= 0.38);
    CHECK(p.modularity <= 0.42);
    CHECK(std::abs(p.modularity - modularity(g, p.labels)) < 1e-12);
    CHECK(std::abs(p.modularity - test::brute_modularity(g, p.labels)) < 1e-12);
  }
}

TEST_CASE("louvain reported modularity equals recomputation on random graphs") {
  Rng rng = make_stream(6, "test");
  for (int t = 0; t < 30; ++t) {
    const Graph g = test::random_graph(20, 0.15, rng);
    const Partition p = louvain(g, rng);
    CHECK(std::abs(p.modularity - test::brute_modularity(g, p.labels)) < 1e-12);
    REQUIRE(p.labels.size() == 20);
    CHECK(*std::max_element(p.labels.begin(), p.labels.end()) == p.community_count - 1);
  }
  CHECK_THROWS_AS(louvain(test::make_graph(2, {{0, 1}}, true), rng), std::invalid_argument);
}

TEST_CASE("adjusted rand index") {
  const std::vector<std::int32_t> a{0, 0, 1, 1};
  const std::vector<std::int32_t> b{0, 1, 0, 1};
  CHECK(adjusted_rand_index(a, a) == doctest::Approx(1.0));
  CHECK(adjusted_rand_index(a, b) == doctest::Approx(test::brute_ari(a, b)));
  CHECK(adjusted_rand_index(a, b) == doctest::Approx(-0.5));
  const std::vector<std::int32_t> one{0};
  CHECK_THROWS_AS(adjusted_rand_index(one, one), std::invalid_argument);
}

TEST_CASE("ARI equals brute-force pair counting and is symmetric") {
  Rng rng = make_stream(7, "test");
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 14);
    std::vector<std::int32_t> a(n), b(n), pa(n);
    for (auto &x : a) x = static_cast<std::int32_t>(uniform_index(rng, 4));
    for (auto &x : b) x = static_cast<std::int32_t>(uniform_index(rng, 4));
    for (std::size_t i = 0; i < n; ++i) pa[i] = 7 - a[i];
    const double brute = test::brute_ari(a, b);
    if (!std::isfinite(brute)) continue; // degenerate: both sides all-same or all-distinct
    CHECK(adjusted_rand_index(a, b) == doctest::Approx(brute).epsilon(1e-12));
    CHECK(adjusted_rand_index(b, a) == doctest::Approx(brute).epsilon(1e-12));
    CHECK(adjusted_rand_index(pa, b) == doctest::Approx(brute).epsilon(1e-12));
  }
}

TEST_CASE("ARI of independent random labelings averages to zero") {
  Rng rng = make_stream(8, "test");
  std::vector<std::int32_t> a(60);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = static_cast<std::int32_t>(i % 3);
  double total = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<std::int32_t> b = a;
    std::shuffle(b.begin(), b.end(), rng);
    total += adjusted_rand_index(a, b);
  }
  CHECK(std::abs(total / 1000) < 0.02);
}

TEST_CASE("ARI skips unlabeled entries") {
  const std::vector<std::int32_t> a{0, 0, 1, 1, kUnlabeled};
  const std::vector<std::int32_t> b{5, 5, 6, 6, 5};
  CHECK(adjusted_rand_index(a, b) == doctest::Approx(1.0));
}

TEST_CASE("shortest path examples") {
  const Graph g = test::path_graph(4);
  CHECK(shortest_path_distance(g, 2, 2) == 0u);
  CHECK(shortest_path_distance(g, 0, 3) == 3u);
  const Graph split = test::make_graph(4, {{0, 1}, {2, 3}});
  CHECK_FALSE(shortest_path_distance(split, 0, 3).has_value());
}

TEST_CASE("BFS equals Floyd-Warshall on 50 random graphs") {
  Rng rng = make_stream(9, "test");
  for (int t = 0; t < 50; ++t) {
    const bool directed = t % 5 == 4;
    const Graph g = test::random_graph(12, 0.25, rng, directed);
    const auto fw = test::floyd_warshall(g);
    for (NodeId u = 0; u < 12; ++u) {
      const auto d = bfs_distances(g, u);
      for (NodeId v = 0; v < 12; ++v) {
        if (fw[u][v] == test::kInf) {
          REQUIRE_FALSE(d[v].has_value());
        } else {
          REQUIRE(d[v] == static_cast<std::uint32_t>(fw[u][v]));
        }
      }
    }
  }
}

TEST_CASE("BFS distances satisfy the triangle inequality") {
  Rng rng = make_stream(10, "test");
  for (int t = 0; t < 20; ++t) {
    const Graph g = test::random_graph(10, 0.3, rng);
    std::vector<std::vector<Distance>> d;
    for (NodeId u = 0; u < 10; ++u) d.push_back(bfs_distances(g, u));
    for (NodeId u = 0; u < 10; ++u)
      for (NodeId v = 0; v < 10; ++v)
        for (NodeId w = 0; w < 10; ++w)
          if (d[u][w] && d[u][v] && d[v][w]) REQUIRE(*d[u][w] <= *d[u][v] + *d[v][w]);
  }
}

TEST_CASE("batch spsp agrees with per-pair calls") {
  Rng rng = make_stream(11, "test");
  const Graph g = test::random_graph(15, 0.2, rng);
  CHECK(batch_spsp(g, {}).empty());
  std::vector<NodePair> pairs;
  for (int i = 0; i < 20; ++i) pairs.emplace_back(uniform_index(rng, 15), uniform_index(rng, 15));
  pairs.push_back(pairs.front());
  const auto got = batch_spsp(g, pairs);
  for (std::size_t i = 0; i < pairs.size(); ++i) CHECK(got[i] == shortest_path_distance(g, pairs[i].first, pairs[i].second));
  CHECK(got.back() == got.front());
}

TEST_CASE("node pair sampling caps at all distinct pairs") {
  Rng rng = make_stream(12, "test");
  const auto pairs = sample_node_pairs(34, false, 8196, rng);
  CHECK(pairs.size() == 561);
  std::set<std::pair<NodeId, NodeId>> seen;
  for (auto [u, v] : pairs) {
    CHECK(u != v);
    seen.insert({std::min(u, v), std::max(u, v)});
  }
  CHECK(seen.size() == 561);
  CHECK(sample_node_pairs(5, true, 100, rng).size() == 20);
}

TEST_CASE("mean distance increase uses the node count for lost pairs") {
  Graph g = test::path_graph(3);
  const PathQuerySet q = make_query_set(g, {{0, 2}});
  CHECK(mean_distance_increase(g, q) == 0.0);
  g.prune_edge(*g.find_edge(1, 2));
  CHECK(mean_distance_increase(g, q) == 3.0);
  CHECK_THROWS_AS(make_query_set(g, {{1, 1}}), std::invalid_argument);

  // pairs already unreachable in the baseline contribute nothing
  const Graph split = test::make_graph(4, {{0, 1}, {2, 3}});
  CHECK(mean_distance_increase(split, make_query_set(split, {{0, 3}})) == 0.0);
}

}
