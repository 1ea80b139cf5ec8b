#include "sparrl/config.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace sparrl {

using json = nlohmann::json;

namespace {

// Reads declared fields out of one JSON object and rejects the rest.
class Reader {
public:
  Reader(const json &obj, std::string where) : _obj(obj), _where(std::move(where)) {
    if (!obj.is_object()) {
      throw DataError(_where + ": expected an object");
    }
  }

  template <typename T> void get(const char *key, T &out) {
    _seen.insert(key);
    const auto it = _obj.find(key);
    if (it == _obj.end()) {
      return;
    }
    try {
      out = it->template get<T>();
    } catch (const json::exception &e) {
      throw DataError(_where + "." + key + ": " + e.what());
    }
  }

  const json *object(const char *key) {
    _seen.insert(key);
    const auto it = _obj.find(key);
    return it == _obj.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto &[key, value] : _obj.items()) {
      if (!_seen.contains(key)) {
        throw DataError(_where + ": unknown key '" + key + "'");
      }
    }
  }

private:
  const json &_obj;
  std::string _where;
  std::set<std::string, std::less<>> _seen;
};

void read_agent(const json &obj, AgentConfig &a) {
  Reader r(obj, "agent");
  r.get("gamma", a.gamma);
  r.get("epsilon_start", a.epsilon_start);
  r.get("epsilon_end", a.epsilon_end);
  r.get("epsilon_decay_steps", a.epsilon_decay_steps);
  r.get("soft_update_rate", a.soft_update_rate);
  r.get("t_max", a.t_max);
  r.get("subgraph_len", a.subgraph_len);
  r.get("learning_rate", a.learning_rate);
  r.get("buffer_capacity", a.buffer_capacity);
  r.get("batch_size", a.batch_size);
  r.get("alpha", a.alpha);
  r.get("beta", a.beta);
  r.get("priority_floor", a.priority_floor);
  r.get("embedding_dim", a.embedding_dim);
  r.get("hidden_units", a.hidden_units);
  r.finish();
}

void read_reward(const json &obj, RewardConfig &rc) {
  Reader r(obj, "reward");
  std::string objective = to_string(rc.objective);
  std::string baseline = to_string(rc.baseline);
  r.get("objective", objective);
  r.get("baseline", baseline);
  r.get("label_sign", rc.label_sign);
  r.get("pairs_per_endpoint", rc.pairs_per_endpoint);
  r.finish();
  try {
    rc.objective = parse_objective(objective);
    rc.baseline = parse_reward_baseline(baseline);
  } catch (const std::invalid_argument &e) {
    throw DataError(std::string("reward: ") + e.what());
  }
}

} // namespace

void RunConfig::validate() const {
  agent.validate();
  if (ratios.empty()) {
    throw std::invalid_argument("ratios must not be empty");
  }
  for (const double r : ratios) {
    if (!(r > 0.0 && r <= 1.0)) {
      throw std::invalid_argument("every ratio must lie in (0, 1]");
    }
  }
  if (seeds < 1) throw std::invalid_argument("seeds must be at least 1");
  if (eval_subgraph_len < 1) throw std::invalid_argument("eval_subgraph_len must be at least 1");
  if (louvain_runs < 1) throw std::invalid_argument("louvain_runs must be at least 1");
  if (spsp_pairs < 1) throw std::invalid_argument("spsp_pairs must be at least 1");
  if (spanner_runs < 1) throw std::invalid_argument("spanner_runs must be at least 1");
  if (validate_every < 1) throw std::invalid_argument("validate_every must be at least 1");
  if (reward.label_sign != 1 && reward.label_sign != -1) throw std::invalid_argument("label_sign must be +1 or -1");
  if (!(eff_burn_probability > 0.0 && eff_burn_probability < 1.0)) {
    throw std::invalid_argument("eff_burn_probability must lie in (0, 1)");
  }
  for (const std::size_t h : h_values) {
    if (h < 1) throw std::invalid_argument("h_values must be positive");
  }
}

RunConfig parse_config(const std::string &text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception &e) {
    throw DataError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Reader r(root, "config");
  int version = 0;
  r.get("schema_version", version);
  if (version != kConfigSchemaVersion) {
    throw DataError(
        "config schema_version must be " + std::to_string(kConfigSchemaVersion) + " (got " + std::to_string(version) + ")"
    );
  }
  r.get("dataset", c.dataset);
  r.get("dataset_name", c.dataset_name);
  r.get("directed", c.directed);
  r.get("labels", c.labels);
  if (const json *a = r.object("agent")) read_agent(*a, c.agent);
  if (const json *rw = r.object("reward")) read_reward(*rw, c.reward);
  r.get("seed", c.seed);
  r.get("episodes", c.episodes);
  r.get("validate_every", c.validate_every);
  r.get("patience", c.patience);
  r.get("checkpoint_every", c.checkpoint_every);
  r.get("checkpoint", c.checkpoint);
  r.get("ratios", c.ratios);
  r.get("seeds", c.seeds);
  r.get("methods", c.methods);
  r.get("metrics", c.metrics);
  r.get("eval_subgraph_len", c.eval_subgraph_len);
  r.get("spsp_pairs", c.spsp_pairs);
  r.get("louvain_runs", c.louvain_runs);
  r.get("eff_burn_probability", c.eff_burn_probability);
  r.get("spanner_stretches", c.spanner_stretches);
  r.get("spanner_runs", c.spanner_runs);
  r.get("h_values", c.h_values);
  r.get("output_dir", c.output_dir);
  r.get("workers", c.workers);
  r.finish();
  c.reward.seed = c.seed;
  if (c.dataset_name.empty() && !c.dataset.empty()) {
    c.dataset_name = std::filesystem::path(c.dataset).stem().string();
  }
  try {
    c.validate();
  } catch (const std::invalid_argument &e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open config '" + path + "'");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string dump_config(const RunConfig &c) {
  const AgentConfig &a = c.agent;
  json j = {
      {"schema_version", kConfigSchemaVersion},
      {"dataset", c.dataset},
      {"dataset_name", c.dataset_name},
      {"directed", c.directed},
      {"labels", c.labels},
      {"agent",
       {
           {"gamma", a.gamma},
           {"epsilon_start", a.epsilon_start},
           {"epsilon_end", a.epsilon_end},
           {"epsilon_decay_steps", a.epsilon_decay_steps},
           {"soft_update_rate", a.soft_update_rate},
           {"t_max", a.t_max},
           {"subgraph_len", a.subgraph_len},
           {"learning_rate", a.learning_rate},
           {"buffer_capacity", a.buffer_capacity},
           {"batch_size", a.batch_size},
           {"alpha", a.alpha},
           {"beta", a.beta},
           {"priority_floor", a.priority_floor},
           {"embedding_dim", a.embedding_dim},
           {"hidden_units", a.hidden_units},
       }},
      {"reward",
       {
           {"objective", to_string(c.reward.objective)},
           {"baseline", to_string(c.reward.baseline)},
           {"label_sign", c.reward.label_sign},
           {"pairs_per_endpoint", c.reward.pairs_per_endpoint},
       }},
      {"seed", c.seed},
      {"episodes", c.episodes},
      {"validate_every", c.validate_every},
      {"patience", c.patience},
      {"checkpoint_every", c.checkpoint_every},
      {"checkpoint", c.checkpoint},
      {"ratios", c.ratios},
      {"seeds", c.seeds},
      {"methods", c.methods},
      {"metrics", c.metrics},
      {"eval_subgraph_len", c.eval_subgraph_len},
      {"spsp_pairs", c.spsp_pairs},
      {"louvain_runs", c.louvain_runs},
      {"eff_burn_probability", c.eff_burn_probability},
      {"spanner_stretches", c.spanner_stretches},
      {"spanner_runs", c.spanner_runs},
      {"h_values", c.h_values},
      {"output_dir", c.output_dir},
      {"workers", c.workers},
  };
  return j.dump(2) + "\n";
}

} // namespace sparrl
