#include <doctest.h>

#include <cmath>
#include <functional>

#include "sparrl/rewards.h"
#include "support.h"

using namespace sparrl;

namespace {

EdgeRef edge(const Graph &g, NodeId u, NodeId v) { return g.edge(g.find_edge(u, v).value()); }

// karate edges are named by file tokens, which differ from compact ids
EdgeRef named_edge(const Graph &g, const std::string &u, const std::string &v) {
  return edge(g, g.node_by_name(u).value(), g.node_by_name(v).value());
}

// highest-modularity partition by enumerating restricted growth strings
std::vector<std::int32_t> best_partition(const Graph &g) {
  const NodeId n = g.node_count();
  std::vector<std::int32_t> cur(n, 0), best;
  double best_q = -1;
  std::function<void(NodeId, std::int32_t)> rec = [&](NodeId i, std::int32_t used) {
    if (i == n) {
      const double q = test::brute_modularity(g, cur);
      if (q > best_q + 1e-12) {
        best_q = q;
        best = cur;
      }
      return;
    }
    for (std::int32_t c = 0; c <= used; ++c) {
      cur[i] = c;
      rec(i + 1, std::max(used, c + 1));
    }
  };
  cur[0] = 0;
  rec(1, 1);
  return best;
}

// two K4 joined by three edges
Graph loose_cliques() {
  std::vector<std::pair<NodeId, NodeId>> e;
  for (NodeId base : {0u, 4u})
    for (NodeId i = 0; i < 4; ++i)
      for (NodeId j = i + 1; j < 4; ++j) e.emplace_back(base + i, base + j);
  e.emplace_back(0, 4);
  e.emplace_back(1, 5);
  e.emplace_back(2, 6);
  return test::make_graph(8, e);
}

} // namespace

TEST_SUITE("rewards") {

TEST_CASE("pagerank reward is zero for the unpruned graph") {
  const Graph g = load_edge_list(test::data_path("karate.txt"), false).graph;
  CHECK(reward_pagerank(metrics::pagerank(g), g) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pagerank reward bottoms out at -2 for a reversed ranking") {
  const Graph chain = test::make_graph(4, {{0, 1}, {1, 2}, {2, 3}}, true);
  std::vector<double> reversed = metrics::pagerank(chain).scores;
  for (double &s : reversed) s = -s;
  CHECK(reward_pagerank(metrics::RankVector::from_scores(reversed), chain) == doctest::Approx(-2.0));
}

TEST_CASE("pagerank reward after a leaf prune matches the rho oracle") {
  const Graph star = test::star_graph(5);
  Graph pruned = star;
  pruned.prune_edge(*pruned.find_edge(0, 3));
  const auto ref = metrics::pagerank(star);
  const double rho = metrics::spearman_rho(ref.scores, metrics::pagerank(pruned).scores);
  CHECK(reward_pagerank(ref, pruned) == doctest::Approx(rho - 1.0));
  CHECK(reward_pagerank(ref, pruned) <= 0.0);
}

TEST_CASE("a constant pagerank counts as no preserved order") {
  const Graph star = test::star_graph(3);
  Graph empty = star;
  for (const EdgeId e : empty.live_edges()) empty.prune_edge(e);
  CHECK(reward_pagerank(metrics::pagerank(star), empty) == -1.0);
}

TEST_CASE("label term is exactly plus or minus one") {
  const Graph g = test::two_triangles(true);
  const std::vector<std::int32_t> labels{0, 0, 0, 1, 1, 1};
  CHECK(label_term(labels, edge(g, 2, 3)) == -1.0);
  CHECK(label_term(labels, edge(g, 0, 1)) == 1.0);
  CHECK(label_term(labels, edge(g, 2, 3), -1) == 1.0);
  CHECK(label_term(labels, edge(g, 0, 1), -1) == -1.0);
  const std::vector<std::int32_t> partial{0, 0, 0, kUnlabeled, 1, 1};
  CHECK_THROWS_AS(label_term(partial, edge(g, 2, 3)), std::invalid_argument);
}

TEST_CASE("community reward on an unchanged graph is the label term") {
  const Graph g = load_edge_list(test::data_path("karate.txt"), false).graph;
  const auto labels = load_communities(test::data_path("karate_communities.txt"), g);
  Rng a = make_stream(1, "louvain");
  const double ref = metrics::adjusted_rand_index(metrics::louvain(g, a).labels, labels);
  Rng b = make_stream(1, "louvain");
  CHECK(reward_community(g, labels, ref, named_edge(g, "0", "1"), b) == doctest::Approx(1.0));
  Rng c = make_stream(1, "louvain");
  CHECK(reward_community(g, labels, ref, named_edge(g, "0", "31"), c) == doctest::Approx(-1.0));
}

TEST_CASE("pruning the bridge of two triangles does not hurt ARI") {
  const Graph g = test::two_triangles(true);
  const std::vector<std::int32_t> truth{0, 0, 0, 1, 1, 1};
  Graph pruned = g;
  pruned.prune_edge(*pruned.find_edge(2, 3));
  const auto oracle = best_partition(pruned);
  const double oracle_ari = metrics::adjusted_rand_index(oracle, truth);
  CHECK(oracle_ari == 1.0);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Rng r1 = make_stream(seed, "louvain");
    const double ref = metrics::adjusted_rand_index(metrics::louvain(g, r1).labels, truth);
    Rng r2 = make_stream(seed, "louvain");
    const double total = reward_community(pruned, truth, ref, edge(g, 2, 3), r2);
    const double ari_term = total - (-1.0);
    CHECK(ari_term >= 0.0);
    Rng r3 = make_stream(seed, "louvain");
    CHECK(metrics::adjusted_rand_index(metrics::louvain(pruned, r3).labels, truth) == oracle_ari);
  }
}

TEST_CASE("spsp reward examples") {
  Graph g = test::path_graph(3);
  const metrics::PathQuerySet q = metrics::make_query_set(g, {{0, 2}});
  CHECK(reward_spsp(g, q) == 0.0);
  g.prune_edge(*g.find_edge(1, 2));
  CHECK(reward_spsp(g, q) == 3.0);
}

TEST_CASE("spsp reward matches Floyd-Warshall after random prunes") {
  Rng rng = make_stream(2, "test");
  for (int t = 0; t < 20; ++t) {
    const Graph g = test::random_connected_graph(12, 0.2, rng);
    const auto pairs = metrics::sample_node_pairs(12, false, 30, rng);
    const metrics::PathQuerySet q = metrics::make_query_set(g, pairs);
    Graph pruned = g;
    random_prune(pruned, 5, rng);
    const auto before = test::floyd_warshall(g);
    const auto after = test::floyd_warshall(pruned);
    double total = 0;
    for (auto [u, v] : pairs) total += after[u][v] == test::kInf ? 12.0 : after[u][v] - before[u][v];
    CHECK(reward_spsp(pruned, q) == doctest::Approx(total / pairs.size()).epsilon(1e-12));
  }
}

TEST_CASE("spsp penalty never decreases along an episode") {
  Rng rng = make_stream(3, "test");
  const Graph g = test::random_connected_graph(15, 0.2, rng);
  const metrics::PathQuerySet q = metrics::make_query_set(g, metrics::sample_node_pairs(15, false, 50, rng));
  Graph work = g;
  double last = 0;
  while (work.edge_count() > 0) {
    random_prune(work, 1, rng);
    const double now = reward_spsp(work, q);
    CHECK(now >= last);
    last = now;
  }
}

TEST_CASE("training pairs") {
  Rng rng = make_stream(4, "test");
  const Graph g = test::random_connected_graph(12, 0.2, rng);
  const EdgeRef e = g.edge(g.live_edges().front());
  const auto one = sample_training_pairs(g, e, 1, rng);
  CHECK(one.size() == 2);
  CHECK(one.pairs[0].first == e.source);
  CHECK(one.pairs[1].first == e.destination);
  const auto many = sample_training_pairs(g, e, 16, rng);
  CHECK(many.size() == 32);
  for (std::size_t i = 0; i < many.size(); ++i) {
    CHECK(many.baseline[i].has_value());
    CHECK(many.pairs[i].first != many.pairs[i].second);
  }
  Graph pruned = g;
  pruned.prune_edge(e.id);
  const metrics::PathQuerySet same = metrics::make_query_set(g, many.pairs);
  CHECK(reward_spsp(pruned, many) == reward_spsp(pruned, same));
  CHECK_THROWS_AS(sample_training_pairs(g, e, 0, rng), std::invalid_argument);
}

TEST_CASE("modularity reward examples") {
  const Graph g = loose_cliques();
  Rng a = make_stream(5, "louvain");
  const double q0 = metrics::louvain(g, a).modularity;
  Rng b = make_stream(5, "louvain");
  CHECK(reward_modularity(g, q0, b) == 0.0);

  Graph split = g;
  for (auto [u, v] : {std::pair<NodeId, NodeId>{0, 4}, {1, 5}, {2, 6}}) split.prune_edge(*split.find_edge(u, v));
  Rng c = make_stream(5, "louvain");
  CHECK(reward_modularity(split, q0, c) > 0.0);
  CHECK(test::brute_modularity(split, {0, 0, 0, 0, 1, 1, 1, 1}) == doctest::Approx(0.5));

  Graph empty = g;
  for (const EdgeId e : empty.live_edges()) empty.prune_edge(e);
  Rng d = make_stream(5, "louvain");
  CHECK(reward_modularity(empty, q0, d) == -q0);
}

TEST_CASE("reward function contexts and signs") {
  const Graph g = load_edge_list(test::data_path("karate.txt"), false).graph;
  RewardConfig rc;
  rc.objective = Objective::community;
  CHECK_THROWS_AS(RewardFunction(g, rc), std::invalid_argument);
  rc.label_sign = 0;
  CHECK_THROWS_AS(RewardFunction(g, rc, std::vector<std::int32_t>(34, 0)), std::invalid_argument);

  RewardConfig sp;
  sp.objective = Objective::spsp;
  RewardFunction spsp(g, sp);
  Rng rng = make_stream(6, "test");
  Graph work = g;
  const EdgeRef e = edge(g, 0, 1);
  CHECK_THROWS_AS(spsp.after_prune(work, e), std::logic_error);
  spsp.begin_episode(1);
  spsp.before_prune(work, e, rng);
  work.prune_edge(e.id);
  const RewardValue v = spsp.after_prune(work, e);
  CHECK(v.raw >= 0.0);
  CHECK(v.agent == -v.raw);

  for (const Objective o : {Objective::pagerank, Objective::community, Objective::spsp, Objective::modularity})
    CHECK(parse_objective(to_string(o)) == o);
  CHECK_THROWS_AS(parse_objective("ari"), std::invalid_argument);
  CHECK(parse_reward_baseline("original") == RewardBaseline::original);
}

TEST_CASE("label sign switch flips only the label term") {
  const Graph g = load_edge_list(test::data_path("karate.txt"), false).graph;
  const auto labels = load_communities(test::data_path("karate_communities.txt"), g);
  auto step = [&](int sign, const std::string &u, const std::string &v) {
    RewardConfig rc;
    rc.objective = Objective::community;
    rc.label_sign = sign;
    rc.seed = 7;
    RewardFunction f(g, rc, labels);
    f.begin_episode(3);
    Graph work = g;
    Rng rng = make_stream(1, "pairs");
    const EdgeRef e = named_edge(g, u, v);
    f.before_prune(work, e, rng);
    work.prune_edge(e.id);
    return f.after_prune(work, e).agent;
  };
  // intra-community edge (0,1) and inter-community edge (0,31)
  CHECK(step(1, "0", "1") - step(-1, "0", "1") == doctest::Approx(2.0));
  CHECK(step(1, "0", "31") - step(-1, "0", "31") == doctest::Approx(-2.0));
}

TEST_CASE("per-step modularity rewards telescope to the level change") {
  const Graph g = load_edge_list(test::data_path("karate.txt"), false).graph;
  RewardConfig rc;
  rc.objective = Objective::modularity;
  rc.baseline = RewardBaseline::previous;
  RewardFunction f(g, rc);
  f.begin_episode(42);
  Rng rng = make_stream(8, "test");
  Graph work = g;
  double total = 0;
  for (int t = 0; t < 10; ++t) {
    const EdgeRef e = g.edge(work.live_edges()[uniform_index(rng, work.edge_count())]);
    f.before_prune(work, e, rng);
    work.prune_edge(e.id);
    total += f.after_prune(work, e).agent;
  }
  Rng start = make_stream(42, "reward-louvain");
  Rng end = make_stream(42, "reward-louvain");
  const double level = metrics::louvain(work, end).modularity - metrics::louvain(g, start).modularity;
  CHECK(total == doctest::Approx(level).epsilon(1e-12));

  RewardConfig orig = rc;
  orig.baseline = RewardBaseline::original;
  RewardFunction level_reward(g, orig);
  level_reward.begin_episode(42);
  Graph w2 = g;
  const EdgeRef e = edge(g, 0, 1);
  level_reward.before_prune(w2, e, rng);
  w2.prune_edge(e.id);
  Rng r = make_stream(42, "reward-louvain");
  CHECK(level_reward.after_prune(w2, e).raw ==
        doctest::Approx(metrics::louvain(w2, r).modularity - level_reward.reference_modularity()));
}

}
