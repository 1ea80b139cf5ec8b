#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparrl/graph.h"
#include "sparrl/metrics.h"
#include "sparrl/rng.h"

namespace sparrl {

enum class Objective { pagerank, community, spsp, modularity };

std::string to_string(Objective o);
Objective parse_objective(const std::string &name);

// Stateless reward terms. `reference` is always the unpruned graph's cached value.

/// rho(PR(G), PR(G')) - 1, with rho = 0 when PR(G') is constant.
double reward_pagerank(const metrics::RankVector &reference, const Graph &sparsified);

/// +1 if the endpoints share a label, -1 otherwise (times `label_sign`).
double label_term(std::span<const std::int32_t> labels, const EdgeRef &pruned, int label_sign = 1);

/// ARI(louvain(G'), labels) - reference_ari + label_term
double reward_community(
    const Graph &sparsified,
    std::span<const std::int32_t> labels,
    double reference_ari,
    const EdgeRef &pruned,
    Rng &louvain_rng,
    int label_sign = 1
);

/// Mean distance increase over the query set (a penalty; the agent gets its negation).
double reward_spsp(const Graph &sparsified, const metrics::PathQuerySet &queries);

/// modularity(G', louvain(G')) - reference_modularity
double reward_modularity(const Graph &sparsified, double reference_modularity, Rng &louvain_rng);

/// `k` random nodes paired with each endpoint of `pruned`, baseline distances
/// measured on `g` (call before the prune). Nodes equal to the endpoint are skipped.
metrics::PathQuerySet sample_training_pairs(const Graph &g, const EdgeRef &pruned, std::size_t k, Rng &rng);

/// What "G" means in the community and modularity rewards: the unpruned graph
/// (a level reward) or the graph just before this step's prune (a per-step
/// difference whose episode sum telescopes to the level change).
enum class RewardBaseline { original, previous };

std::string to_string(RewardBaseline b);
RewardBaseline parse_reward_baseline(const std::string &name);

struct RewardConfig {
  Objective objective = Objective::pagerank;
  RewardBaseline baseline = RewardBaseline::previous;
  int label_sign = 1;
  std::size_t pairs_per_endpoint = 16;
  std::uint64_t seed = 0;
};

struct RewardValue {
  double raw = 0.0;   // the objective as defined (spsp: penalty)
  double agent = 0.0; // what the agent maximizes
};

/**
 * Reward bound to one original graph. Baseline values on the original graph
 * are computed once at construction.
 */
class RewardFunction {
public:
  RewardFunction(const Graph &original, RewardConfig config, std::optional<std::vector<std::int32_t>> labels = {});

  [[nodiscard]] const RewardConfig &config() const { return _config; }
  [[nodiscard]] Objective objective() const { return _config.objective; }

  /// Fixes the Louvain seed used for every reward of the episode.
  void begin_episode(std::uint64_t episode_seed);
  /// Called on the graph state just before `e` is pruned.
  void before_prune(const Graph &g, const EdgeRef &e, Rng &rng);
  RewardValue after_prune(const Graph &g, const EdgeRef &e);

  [[nodiscard]] double reference_ari() const { return _reference_ari; }
  [[nodiscard]] double reference_modularity() const { return _reference_modularity; }

private:
  RewardConfig _config;
  std::vector<std::int32_t> _labels;
  metrics::RankVector _reference_rank;
  double _reference_ari = 0.0;
  double _reference_modularity = 0.0;
  double _step_reference = 0.0;
  std::uint64_t _episode_seed = 0;
  metrics::PathQuerySet _pairs;
};

} // namespace sparrl
