#include "sparrl/harness.h"

#include "sparrl/checkpoint.h"

#include <json.hpp>

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace sparrl {

void parallel_for(const std::size_t count, std::size_t workers, const std::function<void(std::size_t)> &fn) {
  if (workers == 0) {
    workers = std::max(1u, std::thread::hardware_concurrency());
  }
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard lock(failure_mutex);
          if (!failure) {
            failure = std::current_exception();
          }
        }
      }
    });
  }
  for (std::thread &t : threads) {
    t.join();
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

Metric parse_metric(const std::string &name) {
  if (name == "pagerank") return Metric::pagerank;
  if (name == "community") return Metric::community;
  if (name == "spsp") return Metric::spsp;
  if (name == "modularity") return Metric::modularity;
  throw std::invalid_argument("unknown metric '" + name + "' (pagerank, community, spsp, modularity)");
}

std::string to_string(const Metric m) {
  switch (m) {
  case Metric::pagerank:
    return "pagerank";
  case Metric::community:
    return "community";
  case Metric::spsp:
    return "spsp";
  case Metric::modularity:
    return "modularity";
  }
  return "?";
}

Metric metric_for(const Objective objective) {
  switch (objective) {
  case Objective::pagerank:
    return Metric::pagerank;
  case Objective::community:
    return Metric::community;
  case Objective::spsp:
    return Metric::spsp;
  case Objective::modularity:
    return Metric::modularity;
  }
  return Metric::pagerank;
}

metrics::PathQuerySet evaluation_queries(const Graph &g, const std::size_t count, const std::uint64_t seed) {
  Rng rng = make_stream(seed, "spsp-queries");
  return metrics::make_query_set(g, metrics::sample_node_pairs(g.node_count(), g.directed(), count, rng));
}

Evaluator::Evaluator(
    const Graph &original,
    std::optional<std::vector<std::int32_t>> labels,
    const std::size_t spsp_pairs,
    const std::size_t louvain_runs,
    const std::uint64_t seed
)
    : _original(original),
      _labels(std::move(labels)),
      _rank(metrics::pagerank(original)),
      _louvain_runs(louvain_runs) {
  if (louvain_runs == 0) {
    throw std::invalid_argument("louvain_runs must be positive");
  }
  if (spsp_pairs > 0 && original.node_count() >= 2) {
    _queries = evaluation_queries(original, spsp_pairs, seed);
  }
}

double Evaluator::evaluate(const Graph &sparsified, const Metric metric, const std::uint64_t seed) const {
  const auto louvain_mean = [&](const auto &score) {
    double total = 0.0;
    for (std::size_t i = 0; i < _louvain_runs; ++i) {
      Rng rng = make_stream(derive_seed(seed, "louvain-eval", i), "louvain");
      total += score(metrics::louvain(sparsified, rng));
    }
    return total / static_cast<double>(_louvain_runs);
  };
  switch (metric) {
  case Metric::pagerank:
    return metrics::spearman_rho(_rank, metrics::pagerank(sparsified));
  case Metric::community:
    if (!_labels) {
      throw std::invalid_argument("community metric needs ground-truth labels");
    }
    return louvain_mean([&](const metrics::Partition &p) { return metrics::adjusted_rand_index(p.labels, *_labels); });
  case Metric::spsp:
    if (_queries.size() == 0) {
      throw std::invalid_argument("spsp metric needs at least one query pair");
    }
    return metrics::mean_distance_increase(sparsified, _queries);
  case Metric::modularity:
    return louvain_mean([](const metrics::Partition &p) { return p.modularity; });
  }
  return 0.0;
}

baselines::Result sparsify_with(
    const std::string &method,
    const Graph &g,
    const double ratio,
    const std::uint64_t seed,
    const Agent *agent,
    const std::size_t eval_len,
    const double eff_burn_probability
) {
  Rng rng = make_stream(seed, "sparsify");
  if (method == "RE") return baselines::random_edge(g, ratio, rng);
  if (method == "LD") return baselines::local_degree(g, ratio);
  if (method == "L-Spar") return baselines::l_spar(g, ratio);
  if (method == "EFF") {
    baselines::ForestFireOptions options;
    options.burn_probability = eff_burn_probability;
    return baselines::edge_forest_fire(g, ratio, rng, options);
  }
  if (method == "SparRL") {
    if (agent == nullptr) {
      throw std::invalid_argument("method SparRL needs a trained agent checkpoint");
    }
    baselines::Result r;
    r.method = "SparRL";
    r.params = "eval_subgraph_len=" + std::to_string(eval_len);
    r.graph = g;
    agent->prune_to(r.graph, baselines::target_edge_count(g, ratio), eval_len, rng);
    return r;
  }
  throw std::invalid_argument("unknown method '" + method + "' (RE, LD, EFF, L-Spar, SparRL)");
}

DatasetBundle load_dataset(const RunConfig &config) {
  if (config.dataset.empty()) {
    throw DataError("no dataset given");
  }
  LoadedGraph loaded = load_edge_list(config.dataset, config.directed);
  DatasetBundle bundle{std::move(loaded.graph), loaded.report, std::nullopt};
  if (!config.labels.empty()) {
    bundle.labels = load_communities(config.labels, bundle.graph);
  }
  return bundle;
}

AgentConfig agent_config_for(const RunConfig &config) {
  return config.agent;
}

std::string format_double(const double x) {
  // shortest representation that round-trips
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

std::string csv_escape(const std::string &field) {
  if (field.find_first_of(",\"\n") == std::string::npos) {
    return field;
  }
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  return out + "\"";
}

std::string checkpoint_extra(const RunConfig &config) {
  nlohmann::json extra;
  extra["run_config"] = nlohmann::json::parse(dump_config(config));
  return extra.dump();
}

std::unique_ptr<Agent> load_agent(const std::string &path, const Graph &g) {
  const nn::TensorFile file = nn::read_tensor_file(path);
  RunConfig config;
  std::uint64_t seed = 0;
  try {
    const nlohmann::json header = nlohmann::json::parse(file.header);
    seed = header.at("seed").get<std::uint64_t>();
    config = parse_config(header.at("extra").at("run_config").dump());
  } catch (const nlohmann::json::exception &e) {
    throw DataError("checkpoint '" + path + "' carries no run configuration: " + e.what());
  }
  auto agent = std::make_unique<Agent>(g, config.agent, seed);
  agent->load(path);
  return agent;
}

std::string train_log_header() {
  return "episode,step,epsilon,loss,mean_reward,buffer_size,mean_raw_reward";
}

std::string format_train_log_row(const TrainLogRow &row) {
  return std::to_string(row.episode) + "," + std::to_string(row.step) + "," + format_double(row.epsilon) + "," +
         (row.loss ? format_double(*row.loss) : std::string()) + "," + format_double(row.mean_reward) + "," +
         std::to_string(row.buffer_size) + "," + format_double(row.mean_raw_reward);
}

TrainOutcome train_agent(
    const RunConfig &config,
    const DatasetBundle &data,
    Agent &agent,
    std::ostream &log,
    const std::string &checkpoint_path
) {
  RewardConfig reward_config = config.reward;
  reward_config.seed = config.seed;
  RewardFunction reward(data.graph, reward_config, data.labels);

  const Metric metric = metric_for(config.reward.objective);
  const Evaluator evaluator(
      data.graph, data.labels, metric == Metric::spsp ? std::min<std::size_t>(config.spsp_pairs, 512) : 0,
      config.louvain_runs, derive_seed(config.seed, "validation")
  );
  const auto validate = [&] {
    Rng rng = make_stream(config.seed, "validation");
    Graph g = data.graph;
    agent.prune_to(g, baselines::target_edge_count(data.graph, 0.9), config.agent.subgraph_len, rng);
    const double value = evaluator.evaluate(g, metric, config.seed);
    return metric == Metric::spsp ? -value : value;
  };

  TrainOutcome outcome;
  std::optional<double> best;
  std::size_t stale = 0;
  if (agent.episodes() == 0) {
    log << train_log_header() << "\n";
  }
  while (agent.episodes() < config.episodes) {
    const EpisodeResult ep = agent.run_episode(data.graph, reward);
    ++outcome.episodes_run;

    TrainLogRow row;
    row.episode = agent.episodes();
    row.step = agent.policy_updates();
    row.epsilon = agent.epsilon();
    row.buffer_size = agent.buffer().size();
    double loss_sum = 0.0;
    std::size_t losses = 0;
    for (const EpisodeStep &s : ep.steps) {
      row.mean_reward += s.reward.agent;
      row.mean_raw_reward += s.reward.raw;
      if (s.loss) {
        loss_sum += *s.loss;
        ++losses;
      }
    }
    if (!ep.steps.empty()) {
      row.mean_reward /= static_cast<double>(ep.steps.size());
      row.mean_raw_reward /= static_cast<double>(ep.steps.size());
    }
    if (losses > 0) {
      row.loss = loss_sum / static_cast<double>(losses);
    }
    log << format_train_log_row(row) << "\n";

    if (config.checkpoint_every > 0 && agent.episodes() % config.checkpoint_every == 0 && !checkpoint_path.empty()) {
      agent.save(checkpoint_path, checkpoint_extra(config));
    }
    if (config.patience > 0 && agent.episodes() % config.validate_every == 0) {
      const double score = validate();
      if (!best || score > *best) {
        best = score;
        stale = 0;
      } else if (++stale >= config.patience) {
        outcome.stopped_early = true;
        break;
      }
    }
  }
  log.flush();
  outcome.best_validation = best.value_or(0.0);
  if (!checkpoint_path.empty()) {
    agent.save(checkpoint_path, checkpoint_extra(config));
  }
  return outcome;
}

std::string metric_row_header() {
  return "dataset,method,edge_kept_ratio,metric,seed,value,params,error";
}

std::string format_metric_row(const MetricRow &row) {
  return csv_escape(row.dataset) + "," + csv_escape(row.method) + "," + format_double(row.edge_kept_ratio) + "," +
         row.metric + "," + std::to_string(row.seed) + "," + (row.value ? format_double(*row.value) : std::string()) +
         "," + csv_escape(row.params) + "," + csv_escape(row.error);
}

std::vector<MetricRow> run_compare_grid(const RunConfig &config, const DatasetBundle &data, const Agent *agent) {
  std::vector<Metric> metric_list;
  for (const std::string &m : config.metrics) {
    metric_list.push_back(parse_metric(m));
  }
  const Evaluator evaluator(data.graph, data.labels, config.spsp_pairs, config.louvain_runs, config.seed);

  struct Cell {
    std::string method;
    double ratio;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const std::string &method : config.methods) {
    for (const double ratio : config.ratios) {
      for (std::size_t s = 0; s < config.seeds; ++s) {
        cells.push_back({method, ratio, derive_seed(config.seed, "cell", s)});
      }
    }
  }
  std::vector<std::vector<MetricRow>> out(cells.size());
  parallel_for(cells.size(), config.workers, [&](const std::size_t i) {
    const Cell &cell = cells[i];
    std::vector<MetricRow> rows;
    const auto row_for = [&](const Metric m) {
      MetricRow row;
      row.dataset = config.dataset_name;
      row.method = cell.method;
      row.edge_kept_ratio = cell.ratio;
      row.metric = to_string(m);
      row.seed = cell.seed;
      return row;
    };
    try {
      const baselines::Result r = sparsify_with(
          cell.method, data.graph, cell.ratio, cell.seed, agent, config.eval_subgraph_len, config.eff_burn_probability
      );
      std::string params = r.params;
      for (const std::string &note : r.notes) {
        params += (params.empty() ? "" : ";") + std::string("note=") + note;
      }
      params += (params.empty() ? "" : ";") + std::string("kept_edges=") + std::to_string(r.graph.edge_count());
      for (const Metric m : metric_list) {
        MetricRow row = row_for(m);
        row.params = params;
        try {
          row.value = evaluator.evaluate(r.graph, m, cell.seed);
        } catch (const std::exception &e) {
          row.error = e.what();
        }
        rows.push_back(std::move(row));
      }
    } catch (const std::exception &e) {
      for (const Metric m : metric_list) {
        MetricRow row = row_for(m);
        row.error = e.what();
        rows.push_back(std::move(row));
      }
    }
    out[i] = std::move(rows);
  });
  std::vector<MetricRow> flat;
  for (auto &rows : out) {
    for (auto &row : rows) {
      flat.push_back(std::move(row));
    }
  }
  return flat;
}

std::vector<SummaryRow> summarize(const std::vector<MetricRow> &rows) {
  std::vector<SummaryRow> summary;
  std::map<std::tuple<std::string, std::string, double, std::string>, std::size_t> index;
  for (const MetricRow &row : rows) {
    const auto key = std::make_tuple(row.dataset, row.method, row.edge_kept_ratio, row.metric);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, summary.size()).first;
      summary.push_back({row.dataset, row.method, row.edge_kept_ratio, row.metric, 0.0, 0, false});
    }
    if (row.value) {
      SummaryRow &s = summary[it->second];
      s.mean += *row.value;
      ++s.n_seeds;
    }
  }
  for (SummaryRow &s : summary) {
    if (s.n_seeds > 0) {
      s.mean /= static_cast<double>(s.n_seeds);
    }
  }
  // Best method per (dataset, ratio, metric) column.
  std::map<std::tuple<std::string, double, std::string>, std::size_t> best;
  for (std::size_t i = 0; i < summary.size(); ++i) {
    const SummaryRow &s = summary[i];
    if (s.n_seeds == 0) {
      continue;
    }
    const auto key = std::make_tuple(s.dataset, s.ratio, s.metric);
    const bool lower_better = s.metric == "spsp";
    const auto it = best.find(key);
    if (it == best.end() || (lower_better ? s.mean < summary[it->second].mean : s.mean > summary[it->second].mean)) {
      best[key] = i;
    }
  }
  for (const auto &[key, i] : best) {
    summary[i].best = true;
  }
  return summary;
}

std::string summary_header() {
  return "dataset,method,ratio,metric,mean,n_seeds,best";
}

std::string format_summary_row(const SummaryRow &row) {
  return csv_escape(row.dataset) + "," + csv_escape(row.method) + "," + format_double(row.ratio) + "," + row.metric +
         "," + format_double(row.mean) + "," + std::to_string(row.n_seeds) + "," + (row.best ? "1" : "0");
}

std::vector<HSweepRow> run_h_sweep(const RunConfig &config, const DatasetBundle &data, const Agent &agent) {
  const Metric metric = metric_for(config.reward.objective);
  const Evaluator evaluator(data.graph, data.labels, config.spsp_pairs, config.louvain_runs, config.seed);
  std::vector<HSweepRow> rows;
  for (const std::size_t h : config.h_values) {
    for (const double ratio : config.ratios) {
      for (std::size_t s = 0; s < config.seeds; ++s) {
        const std::uint64_t seed = derive_seed(config.seed, "cell", s);
        const auto start = std::chrono::steady_clock::now();
        const baselines::Result r = sparsify_with("SparRL", data.graph, ratio, seed, &agent, h);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rows.push_back({h, ratio, to_string(metric), seed, evaluator.evaluate(r.graph, metric, seed), seconds});
      }
    }
  }
  return rows;
}

std::string spanner_header() {
  return "t,effective_t,mean_ratio,mean_edges,spanner_rspsp,sparrl_edges,sparrl_rspsp,note";
}

std::string format_spanner_row(const baselines::SpannerRow &row) {
  return std::to_string(row.stretch) + "," + std::to_string(row.effective_stretch) + "," +
         format_double(row.mean_ratio) + "," + format_double(row.mean_edges) + "," + format_double(row.spanner_rspsp) +
         "," + std::to_string(row.sparrl_edges) + "," + format_double(row.sparrl_rspsp) + "," + csv_escape(row.note);
}

} // namespace sparrl
