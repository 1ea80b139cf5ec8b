#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparrl/graph.h"
#include "sparrl/optimizer.h"
#include "sparrl/qnetwork.h"
#include "sparrl/replay.h"
#include "sparrl/rewards.h"
#include "sparrl/rng.h"

namespace sparrl {

struct AgentConfig {
  double gamma = 0.95;
  double epsilon_start = 0.99;
  double epsilon_end = 0.05;
  std::uint64_t epsilon_decay_steps = 10000;
  double soft_update_rate = 0.001;
  std::uint32_t t_max = 8;
  std::size_t subgraph_len = 32;
  double learning_rate = 2e-4;
  std::size_t buffer_capacity = 100000;
  std::size_t batch_size = 32;
  double alpha = 0.6;
  double beta = 0.4;
  double priority_floor = 1e-3;
  std::size_t embedding_dim = 64;
  std::size_t hidden_units = 128;

  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;
};

/// Linear decay from start to end over decay_steps policy updates, then flat.
double epsilon_at(const AgentConfig &config, std::uint64_t step);

/// With probability epsilon a uniform index, else the argmax (lowest index on ties).
std::uint32_t select_action(std::span<const double> qvals, double epsilon, Rng &rng);

std::uint32_t argmax(std::span<const double> values);

/// y = r for terminal items, else r + gamma * Q_target(s', argmax_a Q_policy(s', a)).
std::vector<double> double_dqn_targets(
    const QNetwork &policy,
    const QNetwork &target,
    std::span<const Transition *const> batch,
    double gamma
);

struct TrainStats {
  double loss = 0.0;
  std::vector<double> td_errors;
};

struct EpisodeStep {
  EdgeRef pruned;
  std::uint32_t action = 0;
  std::size_t candidates = 0;
  double epsilon = 0.0;
  RewardValue reward;
  std::optional<double> loss;
};

struct EpisodeResult {
  std::uint32_t horizon = 0;         // T
  std::size_t random_prunes = 0;     // T_p
  std::vector<EpisodeStep> steps;
  bool terminal = false;
};

/**
 * Double DQN learner over edge subgraphs with prioritized replay. Owns the
 * policy and target networks, the optimizer, the buffer and its named rng
 * streams; all randomness derives from the seed given at construction.
 */
class Agent {
public:
  Agent(const Graph &g, const AgentConfig &config, std::uint64_t seed);

  [[nodiscard]] const AgentConfig &config() const { return _config; }
  [[nodiscard]] std::uint64_t seed() const { return _seed; }
  [[nodiscard]] QNetwork &policy() { return _policy; }
  [[nodiscard]] const QNetwork &policy() const { return _policy; }
  [[nodiscard]] QNetwork &target() { return _target; }
  [[nodiscard]] const QNetwork &target() const { return _target; }
  [[nodiscard]] ReplayBuffer &buffer() { return _buffer; }
  [[nodiscard]] const ReplayBuffer &buffer() const { return _buffer; }

  [[nodiscard]] std::uint64_t policy_updates() const { return _policy_updates; }
  [[nodiscard]] std::uint64_t env_steps() const { return _env_steps; }
  [[nodiscard]] std::uint64_t episodes() const { return _episodes; }
  [[nodiscard]] double epsilon() const { return epsilon_at(_config, _policy_updates); }

  /// One pass of the episode loop on a private copy of `g`.
  EpisodeResult run_episode(const Graph &g, RewardFunction &reward);

  /// Prioritized batch update; nullopt while the buffer holds fewer than
  /// batch_size items. Throws std::logic_error on an empty buffer.
  std::optional<TrainStats> train_step();
  /// Update on explicit buffer indices with given importance weights (no
  /// priority sampling); used by train_step and by tests.
  TrainStats train_on(const std::vector<std::size_t> &indices, const std::vector<double> &weights);

  /// Greedy pruning of `g` until round(ratio * |E_G|) edges remain.
  /// Throws std::invalid_argument if `g` already has fewer live edges.
  Graph sparsify(const Graph &g, double ratio, std::size_t eval_len, Rng &rng) const;
  /// Same, pruning in place toward an absolute live-edge count.
  void prune_to(Graph &g, std::size_t target_edges, std::size_t eval_len, Rng &rng) const;

  /// Parameters, optimizer state, counters and rng streams. The replay buffer
  /// is not saved.
  void save(const std::string &path, const std::string &extra_json = "{}") const;
  /// Restores into an agent built for the same graph shape. Returns the
  /// extra JSON stored with the checkpoint.
  std::string load(const std::string &path);

private:
  AgentConfig _config;
  std::uint64_t _seed;
  QNetwork _policy;
  QNetwork _target;
  nn::Adam _optimizer;
  ReplayBuffer _buffer;
  Rng _sampling_rng;
  Rng _exploration_rng;
  Rng _replay_rng;
  Rng _pair_rng;
  std::uint64_t _policy_updates = 0;
  std::uint64_t _env_steps = 0;
  std::uint64_t _episodes = 0;
};

/// Number of prunes sparsify performs for a given original edge count.
std::size_t prune_count(std::size_t original_edges, double ratio);

} // namespace sparrl
