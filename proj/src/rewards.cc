#include "sparrl/rewards.h"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace sparrl {

std::string to_string(const Objective o) {
  switch (o) {
  case Objective::pagerank:
    return "pagerank";
  case Objective::community:
    return "community";
  case Objective::spsp:
    return "spsp";
  case Objective::modularity:
    return "modularity";
  }
  return "?";
}

Objective parse_objective(const std::string &name) {
  if (name == "pagerank") return Objective::pagerank;
  if (name == "community") return Objective::community;
  if (name == "spsp") return Objective::spsp;
  if (name == "modularity") return Objective::modularity;
  throw std::invalid_argument("unknown objective '" + name + "' (pagerank, community, spsp, modularity)");
}

std::string to_string(const RewardBaseline b) {
  return b == RewardBaseline::original ? "original" : "previous";
}

RewardBaseline parse_reward_baseline(const std::string &name) {
  if (name == "original") return RewardBaseline::original;
  if (name == "previous") return RewardBaseline::previous;
  throw std::invalid_argument("unknown reward baseline '" + name + "' (original, previous)");
}

double reward_pagerank(const metrics::RankVector &reference, const Graph &sparsified) {
  const metrics::RankVector pruned = metrics::pagerank(sparsified);
  const auto &r = pruned.ranks;
  if (std::adjacent_find(r.begin(), r.end(), std::not_equal_to<>()) == r.end()) {
    // a constant ranking (e.g. no edges left) carries no order: rho taken as 0
    return -1.0;
  }
  return metrics::spearman_rho(reference, pruned) - 1.0;
}

double label_term(const std::span<const std::int32_t> labels, const EdgeRef &pruned, const int label_sign) {
  const std::int32_t a = labels[pruned.source];
  const std::int32_t b = labels[pruned.destination];
  if (a == kUnlabeled || b == kUnlabeled) {
    throw std::invalid_argument("community reward: pruned edge has an unlabeled endpoint");
  }
  return (a == b ? 1.0 : -1.0) * label_sign;
}

double reward_community(
    const Graph &sparsified,
    const std::span<const std::int32_t> labels,
    const double reference_ari,
    const EdgeRef &pruned,
    Rng &louvain_rng,
    const int label_sign
) {
  const double r_label = label_term(labels, pruned, label_sign);
  const metrics::Partition p = metrics::louvain(sparsified, louvain_rng);
  return metrics::adjusted_rand_index(p.labels, labels) - reference_ari + r_label;
}

double reward_spsp(const Graph &sparsified, const metrics::PathQuerySet &queries) {
  return metrics::mean_distance_increase(sparsified, queries);
}

double reward_modularity(const Graph &sparsified, const double reference_modularity, Rng &louvain_rng) {
  return metrics::louvain(sparsified, louvain_rng).modularity - reference_modularity;
}

metrics::PathQuerySet sample_training_pairs(const Graph &g, const EdgeRef &pruned, const std::size_t k, Rng &rng) {
  if (k == 0) {
    throw std::invalid_argument("training pair count must be positive");
  }
  std::vector<metrics::NodePair> pairs;
  pairs.reserve(2 * k);
  for (const NodeId endpoint : {pruned.source, pruned.destination}) {
    for (std::size_t i = 0; i < k; ++i) {
      NodeId other = endpoint;
      while (other == endpoint) {
        other = static_cast<NodeId>(uniform_index(rng, g.node_count()));
      }
      pairs.emplace_back(endpoint, other);
    }
  }
  return metrics::make_query_set(g, std::move(pairs));
}

RewardFunction::RewardFunction(
    const Graph &original,
    RewardConfig config,
    std::optional<std::vector<std::int32_t>> labels
)
    : _config(config) {
  if (config.label_sign != 1 && config.label_sign != -1) {
    throw std::invalid_argument("label_sign must be +1 or -1");
  }
  Rng rng = make_stream(config.seed, "reward-reference");
  switch (config.objective) {
  case Objective::pagerank:
    _reference_rank = metrics::pagerank(original);
    break;
  case Objective::community: {
    if (!labels) {
      throw std::invalid_argument("community objective requires ground-truth labels");
    }
    if (labels->size() != original.node_count()) {
      throw std::invalid_argument("label vector does not match the graph");
    }
    _labels = std::move(*labels);
    _reference_ari = metrics::adjusted_rand_index(metrics::louvain(original, rng).labels, _labels);
    break;
  }
  case Objective::spsp:
    if (config.pairs_per_endpoint == 0) {
      throw std::invalid_argument("spsp objective requires a positive pair count");
    }
    break;
  case Objective::modularity:
    _reference_modularity = metrics::louvain(original, rng).modularity;
    break;
  }
}

void RewardFunction::begin_episode(const std::uint64_t episode_seed) {
  _episode_seed = episode_seed;
}

void RewardFunction::before_prune(const Graph &g, const EdgeRef &e, Rng &rng) {
  if (_config.objective == Objective::spsp) {
    _pairs = sample_training_pairs(g, e, _config.pairs_per_endpoint, rng);
    return;
  }
  if (_config.baseline == RewardBaseline::previous) {
    Rng louvain_rng = make_stream(_episode_seed, "reward-louvain");
    if (_config.objective == Objective::community) {
      _step_reference = metrics::adjusted_rand_index(metrics::louvain(g, louvain_rng).labels, _labels);
    } else if (_config.objective == Objective::modularity) {
      _step_reference = metrics::louvain(g, louvain_rng).modularity;
    }
  }
}

RewardValue RewardFunction::after_prune(const Graph &g, const EdgeRef &e) {
  Rng louvain_rng = make_stream(_episode_seed, "reward-louvain");
  switch (_config.objective) {
  case Objective::pagerank: {
    const double r = reward_pagerank(_reference_rank, g);
    return {r, r};
  }
  case Objective::community: {
    const double reference = _config.baseline == RewardBaseline::previous ? _step_reference : _reference_ari;
    const double r = reward_community(g, _labels, reference, e, louvain_rng, _config.label_sign);
    return {r, r};
  }
  case Objective::spsp: {
    if (_pairs.size() == 0) {
      throw std::logic_error("spsp reward: before_prune was not called");
    }
    const double r = reward_spsp(g, _pairs);
    _pairs = {};
    return {r, -r};
  }
  case Objective::modularity: {
    const double reference =
        _config.baseline == RewardBaseline::previous ? _step_reference : _reference_modularity;
    const double r = reward_modularity(g, reference, louvain_rng);
    return {r, r};
  }
  }
  return {};
}

} // namespace sparrl
