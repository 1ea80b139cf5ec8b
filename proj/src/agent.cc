#include "sparrl/agent.h"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "sparrl/checkpoint.h"
#include "sparrl/subgraph.h"

namespace sparrl {

using json = nlohmann::json;

void AgentConfig::validate() const {
  const auto unit = [](const double v, const char *name) {
    if (!(v > 0.0 && v < 1.0)) {
      throw std::invalid_argument(std::string(name) + " must lie in (0, 1)");
    }
  };
  unit(gamma, "gamma");
  unit(epsilon_start, "epsilon_start");
  unit(epsilon_end, "epsilon_end");
  unit(alpha, "alpha");
  unit(beta, "beta");
  if (!(soft_update_rate >= 0.0 && soft_update_rate <= 1.0)) {
    throw std::invalid_argument("soft_update_rate must lie in [0, 1]");
  }
  if (epsilon_end > epsilon_start) {
    throw std::invalid_argument("epsilon_end must not exceed epsilon_start");
  }
  if (t_max < 1) throw std::invalid_argument("t_max must be at least 1");
  if (subgraph_len < 1) throw std::invalid_argument("subgraph_len must be at least 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (buffer_capacity < batch_size) throw std::invalid_argument("buffer_capacity must be at least batch_size");
  if (!(priority_floor > 0.0)) throw std::invalid_argument("priority_floor must be positive");
  if (embedding_dim < 1 || hidden_units < 1) throw std::invalid_argument("layer widths must be positive");
}

double epsilon_at(const AgentConfig &config, const std::uint64_t step) {
  if (config.epsilon_decay_steps == 0 || step >= config.epsilon_decay_steps) {
    return config.epsilon_end;
  }
  const double frac = static_cast<double>(step) / static_cast<double>(config.epsilon_decay_steps);
  return config.epsilon_start + frac * (config.epsilon_end - config.epsilon_start);
}

std::uint32_t argmax(const std::span<const double> values) {
  if (values.empty()) {
    throw std::invalid_argument("argmax of an empty vector");
  }
  std::uint32_t best = 0;
  for (std::uint32_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) {
      best = i;
    }
  }
  return best;
}

std::uint32_t select_action(const std::span<const double> qvals, const double epsilon, Rng &rng) {
  if (qvals.empty()) {
    throw std::invalid_argument("select_action: no candidates");
  }
  if (epsilon > 0.0 && uniform_unit(rng) < epsilon) {
    return static_cast<std::uint32_t>(uniform_index(rng, qvals.size()));
  }
  return argmax(qvals);
}

std::vector<double> double_dqn_targets(
    const QNetwork &policy,
    const QNetwork &target,
    const std::span<const Transition *const> batch,
    const double gamma
) {
  std::vector<double> y;
  y.reserve(batch.size());
  std::vector<QNetwork::Query> live;
  std::vector<std::size_t> live_items;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    y.push_back(batch[k]->reward);
    if (!batch[k]->terminal && gamma != 0.0) {
      live.push_back({&batch[k]->next_state, {}});
      live_items.push_back(k);
    }
  }
  if (live.empty()) {
    return y;
  }
  // Policy picks the next action over every candidate edge ...
  std::vector<std::uint32_t> best(live.size());
  {
    nn::Tape tape;
    const nn::Matrix &q = tape.value(policy.apply(tape, policy.bind_frozen(tape), live));
    std::size_t row = 0;
    for (std::size_t k = 0; k < live.size(); ++k) {
      const std::size_t n = live[k].sub->size();
      best[k] = argmax(std::span<const double>(q.data.data() + row, n));
      row += n;
    }
  }
  // ... and the target network scores only that edge.
  for (std::size_t k = 0; k < live.size(); ++k) {
    live[k].edges = std::span<const std::uint32_t>(&best[k], 1);
  }
  nn::Tape tape;
  const nn::Matrix &q = tape.value(target.apply(tape, target.bind_frozen(tape), live));
  for (std::size_t k = 0; k < live.size(); ++k) {
    y[live_items[k]] += gamma * q.data[k];
  }
  return y;
}

std::size_t prune_count(const std::size_t original_edges, const double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw std::invalid_argument("edge-kept ratio must lie in (0, 1]");
  }
  const auto keep = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(original_edges)));
  return original_edges - keep;
}

namespace {

QNetworkShape shape_for(const Graph &g, const AgentConfig &config) {
  return {g.node_count(), g.directed(), config.embedding_dim, config.hidden_units};
}

} // namespace

Agent::Agent(const Graph &g, const AgentConfig &config, const std::uint64_t seed)
    : _config(config),
      _seed(seed),
      _optimizer(config.learning_rate),
      _buffer(config.buffer_capacity, config.alpha, config.beta),
      _sampling_rng(make_stream(seed, "graph-sampling")),
      _exploration_rng(make_stream(seed, "exploration")),
      _replay_rng(make_stream(seed, "replay")),
      _pair_rng(make_stream(seed, "reward-pairs")) {
  config.validate();
  Rng init = make_stream(seed, "init");
  _policy = QNetwork(shape_for(g, config), init);
  _target = _policy;
}

EpisodeResult Agent::run_episode(const Graph &g, RewardFunction &reward) {
  if (g.edge_count() <= _config.t_max) {
    throw std::invalid_argument("episode needs more live edges than t_max");
  }
  if (g.node_count() != _policy.shape().node_count) {
    throw std::invalid_argument("episode graph does not match the agent's node table");
  }
  Graph work = g;
  EpisodeResult result;
  result.horizon = static_cast<std::uint32_t>(uniform_int(_sampling_rng, 1, _config.t_max));
  result.random_prunes = static_cast<std::size_t>(
      uniform_int(_sampling_rng, 1, static_cast<std::int64_t>(work.edge_count()) - result.horizon)
  );
  random_prune(work, result.random_prunes, _sampling_rng);
  reward.begin_episode(derive_seed(_seed, "episode", _episodes));

  CandidateSubgraph state = sample_subgraph(work, _config.subgraph_len, _sampling_rng);
  for (std::uint32_t t = 0; t < result.horizon; ++t) {
    EpisodeStep step;
    step.epsilon = epsilon();
    step.candidates = state.size();
    const std::vector<double> q = _policy.q_values(state);
    step.action = select_action(q, step.epsilon, _exploration_rng);
    step.pruned = state.edges[step.action];

    reward.before_prune(work, step.pruned, _pair_rng);
    work.prune_edge(step.pruned.id);
    step.reward = reward.after_prune(work, step.pruned);
    ++_env_steps;

    Transition tr;
    tr.action = step.action;
    tr.reward = step.reward.agent;
    tr.terminal = work.edge_count() == 0;
    if (!tr.terminal) {
      tr.next_state = sample_subgraph(work, _config.subgraph_len, _sampling_rng);
    }
    tr.state = std::move(state);
    state = tr.next_state;
    const bool terminal = tr.terminal;
    _buffer.add(std::move(tr));

    if (const auto stats = train_step()) {
      step.loss = stats->loss;
    }
    result.steps.push_back(step);
    if (terminal) {
      result.terminal = true;
      break;
    }
  }
  ++_episodes;
  return result;
}

std::optional<TrainStats> Agent::train_step() {
  if (_buffer.size() == 0) {
    throw std::logic_error("train_step on an empty replay buffer");
  }
  if (_buffer.size() < _config.batch_size) {
    return std::nullopt;
  }
  const ReplaySample sample = _buffer.sample(_config.batch_size, _replay_rng);
  TrainStats stats = train_on(sample.indices, sample.weights);
  _buffer.update_priorities(sample.indices, stats.td_errors, _config.priority_floor);
  return stats;
}

TrainStats Agent::train_on(const std::vector<std::size_t> &indices, const std::vector<double> &weights) {
  if (indices.empty() || indices.size() != weights.size()) {
    throw std::invalid_argument("train_on: indices and weights must be non-empty and aligned");
  }
  std::vector<const Transition *> batch;
  batch.reserve(indices.size());
  for (const std::size_t i : indices) {
    batch.push_back(&_buffer.at(i));
  }
  const std::vector<double> y = double_dqn_targets(_policy, _target, batch, _config.gamma);

  nn::Tape tape;
  std::vector<QNetwork::Query> queries;
  queries.reserve(batch.size());
  for (const Transition *t : batch) {
    queries.push_back({&t->state, std::span<const std::uint32_t>(&t->action, 1)});
  }
  const nn::Var pred = _policy.apply(tape, _policy.bind(tape), queries);
  const nn::Var loss = tape.weighted_squared_error(pred, y, weights);
  tape.backward(loss);

  TrainStats stats;
  stats.loss = tape.value(loss).data[0];
  const nn::Matrix &q = tape.value(pred);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    stats.td_errors.push_back(q.data[k] - y[k]);
  }
  std::vector<nn::Parameter *> params = _policy.parameters();
  _optimizer.step(params);
  _target.soft_update(_policy, _config.soft_update_rate);
  ++_policy_updates;
  return stats;
}

void Agent::prune_to(Graph &g, const std::size_t target_edges, const std::size_t eval_len, Rng &rng) const {
  if (eval_len == 0) {
    throw std::invalid_argument("evaluation subgraph length must be positive");
  }
  if (g.edge_count() < target_edges) {
    throw std::invalid_argument(
        "graph already has " + std::to_string(g.edge_count()) + " live edges, below the target " +
        std::to_string(target_edges)
    );
  }
  while (g.edge_count() > target_edges) {
    const CandidateSubgraph sub = sample_subgraph(g, eval_len, rng);
    const std::vector<double> q = _policy.q_values(sub);
    g.prune_edge(sub.edges[argmax(q)].id);
  }
}

Graph Agent::sparsify(const Graph &g, const double ratio, const std::size_t eval_len, Rng &rng) const {
  const std::size_t target = g.original_edge_count() - prune_count(g.original_edge_count(), ratio);
  Graph out = g;
  prune_to(out, target, eval_len, rng);
  return out;
}

namespace {

json config_to_json(const AgentConfig &c) {
  return {
      {"gamma", c.gamma},
      {"epsilon_start", c.epsilon_start},
      {"epsilon_end", c.epsilon_end},
      {"epsilon_decay_steps", c.epsilon_decay_steps},
      {"soft_update_rate", c.soft_update_rate},
      {"t_max", c.t_max},
      {"subgraph_len", c.subgraph_len},
      {"learning_rate", c.learning_rate},
      {"buffer_capacity", c.buffer_capacity},
      {"batch_size", c.batch_size},
      {"alpha", c.alpha},
      {"beta", c.beta},
      {"priority_floor", c.priority_floor},
      {"embedding_dim", c.embedding_dim},
      {"hidden_units", c.hidden_units},
  };
}

} // namespace

void Agent::save(const std::string &path, const std::string &extra_json) const {
  json header;
  header["format"] = "sparrl-agent";
  header["config"] = config_to_json(_config);
  header["seed"] = _seed;
  header["node_count"] = _policy.shape().node_count;
  header["directed"] = _policy.shape().directed;
  header["policy_updates"] = _policy_updates;
  header["env_steps"] = _env_steps;
  header["episodes"] = _episodes;
  header["optimizer_steps"] = _optimizer.step_count();
  header["rng"] = {
      {"graph-sampling", serialize_rng(_sampling_rng)},
      {"exploration", serialize_rng(_exploration_rng)},
      {"replay", serialize_rng(_replay_rng)},
      {"reward-pairs", serialize_rng(_pair_rng)},
  };
  header["extra"] = json::parse(extra_json);

  nn::TensorFile file;
  file.header = header.dump();
  const auto policy = _policy.parameters();
  const auto target = _target.parameters();
  const nn::AdamState adam = _optimizer.state();
  for (std::size_t k = 0; k < policy.size(); ++k) {
    file.tensors.emplace_back("policy/" + policy[k]->name, policy[k]->value);
    file.tensors.emplace_back("target/" + target[k]->name, target[k]->value);
    if (k < adam.first_moment.size()) {
      file.tensors.emplace_back("adam_m/" + policy[k]->name, adam.first_moment[k]);
      file.tensors.emplace_back("adam_v/" + policy[k]->name, adam.second_moment[k]);
    }
  }
  nn::write_tensor_file(path, file);
}

std::string Agent::load(const std::string &path) {
  const nn::TensorFile file = nn::read_tensor_file(path);
  json header;
  try {
    header = json::parse(file.header);
  } catch (const json::exception &e) {
    throw DataError("checkpoint '" + path + "' has a malformed header: " + e.what());
  }
  if (header.value("format", "") != "sparrl-agent") {
    throw DataError("checkpoint '" + path + "' is not an agent checkpoint");
  }
  if (header.at("node_count").get<NodeId>() != _policy.shape().node_count ||
      header.at("directed").get<bool>() != _policy.shape().directed ||
      header.at("config").at("embedding_dim").get<std::size_t>() != _config.embedding_dim ||
      header.at("config").at("hidden_units").get<std::size_t>() != _config.hidden_units) {
    throw DataError("checkpoint '" + path + "' was trained for a different graph or network shape");
  }
  auto policy = _policy.parameters();
  auto target = _target.parameters();
  nn::AdamState adam;
  adam.steps = header.at("optimizer_steps").get<std::uint64_t>();
  const bool has_moments = adam.steps > 0;
  for (std::size_t k = 0; k < policy.size(); ++k) {
    const nn::Matrix &p = file.find("policy/" + policy[k]->name);
    if (p.rows != policy[k]->value.rows || p.cols != policy[k]->value.cols) {
      throw DataError("checkpoint tensor '" + policy[k]->name + "' has shape " + p.shape());
    }
    policy[k]->value = p;
    target[k]->value = file.find("target/" + target[k]->name);
    if (has_moments) {
      adam.first_moment.push_back(file.find("adam_m/" + policy[k]->name));
      adam.second_moment.push_back(file.find("adam_v/" + policy[k]->name));
    }
  }
  _optimizer.restore(std::move(adam));
  _policy_updates = header.at("policy_updates").get<std::uint64_t>();
  _env_steps = header.at("env_steps").get<std::uint64_t>();
  _episodes = header.at("episodes").get<std::uint64_t>();
  const json &rng = header.at("rng");
  _sampling_rng = deserialize_rng(rng.at("graph-sampling").get<std::string>());
  _exploration_rng = deserialize_rng(rng.at("exploration").get<std::string>());
  _replay_rng = deserialize_rng(rng.at("replay").get<std::string>());
  _pair_rng = deserialize_rng(rng.at("reward-pairs").get<std::string>());
  return header.at("extra").dump();
}

} // namespace sparrl
