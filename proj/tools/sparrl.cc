#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sparrl/harness.h"

namespace fs = std::filesystem;
using namespace sparrl;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Options shared by every subcommand; anything set on the command line wins
// over the config file.
struct Common {
  std::string config;
  std::string dataset;
  std::string labels;
  bool directed = false;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> workers;
  std::string checkpoint;
  std::optional<std::size_t> eval_len;
  std::string objective;
};

void add_common(CLI::App *cmd, Common &c) {
  cmd->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--dataset", c.dataset, "edge list file");
  cmd->add_option("--labels", c.labels, "ground-truth communities, one per line");
  cmd->add_flag("--directed", c.directed, "treat the edge list as directed");
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--workers", c.workers, "grid worker threads (0: all cores)");
  cmd->add_option("--checkpoint", c.checkpoint, "agent checkpoint");
  cmd->add_option("--eval-subgraph-len", c.eval_len, "candidate subgraph length at evaluation time");
  cmd->add_option("--objective", c.objective, "pagerank, community, spsp or modularity");
}

RunConfig resolve(const Common &c) {
  RunConfig config = c.config.empty() ? RunConfig{} : load_config(c.config);
  if (!c.dataset.empty()) {
    config.dataset = c.dataset;
    config.dataset_name = fs::path(c.dataset).stem().string();
  }
  if (!c.labels.empty()) config.labels = c.labels;
  if (c.directed) config.directed = true;
  if (c.seed) config.seed = *c.seed;
  config.reward.seed = config.seed;
  if (c.workers) config.workers = *c.workers;
  if (!c.checkpoint.empty()) config.checkpoint = c.checkpoint;
  if (c.eval_len) config.eval_subgraph_len = *c.eval_len;
  if (!c.objective.empty()) config.reward.objective = parse_objective(c.objective);
  if (config.dataset.empty()) {
    throw UsageError("a dataset is required (--dataset or the config's \"dataset\")");
  }
  config.validate();
  return config;
}

std::unique_ptr<Agent> agent_from(const RunConfig &config, const Graph &g) {
  if (config.checkpoint.empty()) {
    throw UsageError("this command needs --checkpoint");
  }
  return load_agent(config.checkpoint, g);
}

std::ofstream open_output(const fs::path &path) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write '" + path.string() + "'");
  }
  return out;
}

int cmd_train(const Common &c, const std::optional<std::size_t> episodes, const std::string &resume) {
  RunConfig config = resolve(c);
  if (episodes) config.episodes = *episodes;
  config.validate();
  const DatasetBundle data = load_dataset(config);
  const fs::path out_dir = c.out.empty() ? fs::path(config.output_dir) : fs::path(c.out);
  fs::create_directories(out_dir);
  const std::string checkpoint =
      c.checkpoint.empty() ? (out_dir / "agent.ckpt").string() : c.checkpoint;

  Agent agent(data.graph, agent_config_for(config), config.seed);
  if (!resume.empty()) {
    agent.load(resume);
  }
  // a resumed run appends to the existing log
  std::ofstream log(out_dir / "train_log.csv", resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) {
    throw DataError("cannot write '" + (out_dir / "train_log.csv").string() + "'");
  }
  const TrainOutcome outcome = train_agent(config, data, agent, log, checkpoint);
  std::cout << "trained " << outcome.episodes_run << " episodes (total " << agent.episodes() << ", "
            << agent.policy_updates() << " updates)" << (outcome.stopped_early ? ", stopped early" : "") << "\n"
            << "checkpoint: " << checkpoint << "\n";
  return 0;
}

int cmd_sparsify(const Common &c, std::string method, const double ratio) {
  const RunConfig config = resolve(c);
  const DatasetBundle data = load_dataset(config);
  if (method.empty()) {
    method = config.checkpoint.empty() ? "RE" : "SparRL";
  }
  std::unique_ptr<Agent> agent;
  if (method == "SparRL") {
    agent = agent_from(config, data.graph);
  }
  const baselines::Result r = sparsify_with(
      method, data.graph, ratio, config.seed, agent.get(), config.eval_subgraph_len, config.eff_burn_probability
  );
  std::vector<std::string> header{
      "sparsified by sparrl",
      "dataset=" + config.dataset,
      "method=" + r.method,
      "ratio=" + format_double(ratio),
      "seed=" + std::to_string(config.seed),
      "params=" + r.params,
      "kept_edges=" + std::to_string(r.graph.edge_count()) + "/" + std::to_string(data.graph.edge_count()),
  };
  if (!config.checkpoint.empty() && method == "SparRL") {
    header.push_back("checkpoint=" + config.checkpoint);
  }
  for (const std::string &note : r.notes) {
    header.push_back("note=" + note);
  }
  if (c.out.empty()) {
    write_edge_list(r.graph, std::cout, header);
  } else {
    std::ofstream out = open_output(c.out);
    write_edge_list(r.graph, out, header);
    std::cerr << r.graph.edge_count() << " edges written to " << c.out << "\n";
  }
  return 0;
}

int cmd_evaluate(const Common &c, const std::string &sparsified, std::vector<std::string> metrics) {
  RunConfig config = resolve(c);
  if (metrics.empty()) metrics = config.metrics;
  const DatasetBundle data = load_dataset(config);
  const Graph g = load_sparsified(data.graph, sparsified);
  const Evaluator evaluator(data.graph, data.labels, config.spsp_pairs, config.louvain_runs, config.seed);

  std::ofstream file;
  if (!c.out.empty()) file = open_output(c.out);
  std::ostream &out = c.out.empty() ? std::cout : file;
  out << metric_row_header() << "\n";
  for (const std::string &name : metrics) {
    const Metric m = parse_metric(name);
    MetricRow row;
    row.dataset = config.dataset_name;
    row.method = "input:" + fs::path(sparsified).filename().string();
    row.edge_kept_ratio = g.edge_kept_ratio();
    row.metric = to_string(m);
    row.seed = config.seed;
    row.params = "spsp_pairs=" + std::to_string(evaluator.queries().size()) +
                 ";louvain_runs=" + std::to_string(config.louvain_runs);
    row.value = evaluator.evaluate(g, m, config.seed);
    out << format_metric_row(row) << "\n";
  }
  return 0;
}

int cmd_compare(const Common &c, const std::vector<std::string> &methods, const std::vector<double> &ratios,
                const std::vector<std::string> &metrics, const std::optional<std::size_t> seeds) {
  RunConfig config = resolve(c);
  if (!methods.empty()) config.methods = methods;
  if (!ratios.empty()) config.ratios = ratios;
  if (!metrics.empty()) config.metrics = metrics;
  if (seeds) config.seeds = *seeds;
  config.validate();
  for (const std::string &m : config.metrics) {
    parse_metric(m);
  }
  const DatasetBundle data = load_dataset(config);
  std::unique_ptr<Agent> agent;
  if (!config.checkpoint.empty()) {
    agent = load_agent(config.checkpoint, data.graph);
  }
  const std::vector<MetricRow> rows = run_compare_grid(config, data, agent.get());
  const fs::path out_dir = c.out.empty() ? fs::path(config.output_dir) : fs::path(c.out);
  std::ofstream raw = open_output(out_dir / "compare_rows.csv");
  raw << metric_row_header() << "\n";
  std::size_t failures = 0;
  for (const MetricRow &row : rows) {
    raw << format_metric_row(row) << "\n";
    failures += row.value ? 0 : 1;
  }
  std::ofstream summary = open_output(out_dir / "compare_summary.csv");
  summary << summary_header() << "\n";
  std::cout << summary_header() << "\n";
  for (const SummaryRow &row : summarize(rows)) {
    summary << format_summary_row(row) << "\n";
    std::cout << format_summary_row(row) << "\n";
  }
  if (failures > 0) {
    std::cerr << failures << " cells failed; see the error column of " << (out_dir / "compare_rows.csv") << "\n";
  }
  return 0;
}

int cmd_spanner(const Common &c, const std::vector<int> &stretches) {
  RunConfig config = resolve(c);
  if (!stretches.empty()) config.spanner_stretches = stretches;
  const DatasetBundle data = load_dataset(config);
  if (data.graph.directed()) {
    throw UsageError("spanner-compare needs an undirected graph");
  }
  const std::unique_ptr<Agent> agent = agent_from(config, data.graph);
  const metrics::PathQuerySet queries = evaluation_queries(data.graph, config.spsp_pairs, config.seed);
  const std::size_t eval_len = config.eval_subgraph_len;
  const baselines::EdgeCountSparsifier learned = [&](const Graph &g, const std::size_t target, const std::uint64_t s) {
    Graph copy = g;
    Rng rng = make_stream(s, "sparsify");
    agent->prune_to(copy, target, eval_len, rng);
    return copy;
  };
  const auto rows = baselines::spanner_comparison_protocol(
      data.graph, config.spanner_stretches, queries, learned, config.seed, config.spanner_runs
  );
  const fs::path out_dir = c.out.empty() ? fs::path(config.output_dir) : fs::path(c.out);
  std::ofstream out = open_output(out_dir / "spanner.csv");
  out << spanner_header() << "\n";
  std::cout << spanner_header() << "\n";
  for (const auto &row : rows) {
    out << format_spanner_row(row) << "\n";
    std::cout << format_spanner_row(row) << "\n";
  }
  return 0;
}

int cmd_h_sweep(const Common &c, const std::vector<std::size_t> &h_values, const std::vector<double> &ratios,
                const std::optional<std::size_t> seeds) {
  RunConfig config = resolve(c);
  if (!h_values.empty()) config.h_values = h_values;
  if (!ratios.empty()) config.ratios = ratios;
  if (seeds) config.seeds = *seeds;
  config.validate();
  const DatasetBundle data = load_dataset(config);
  const std::unique_ptr<Agent> agent = agent_from(config, data.graph);
  const fs::path out_dir = c.out.empty() ? fs::path(config.output_dir) : fs::path(c.out);
  std::ofstream out = open_output(out_dir / "h_sweep.csv");
  const std::string header = "dataset,subgraph_len,edge_kept_ratio,metric,seed,value,seconds";
  out << header << "\n";
  std::cout << header << "\n";
  for (const HSweepRow &row : run_h_sweep(config, data, *agent)) {
    const std::string line = csv_escape(config.dataset_name) + "," + std::to_string(row.subgraph_len) + "," +
                             format_double(row.edge_kept_ratio) + "," + row.metric + "," + std::to_string(row.seed) +
                             "," + format_double(row.value) + "," + format_double(row.seconds);
    out << line << "\n";
    std::cout << line << "\n";
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"sparrl: graph sparsification with a learned edge-pruning policy"};
  app.require_subcommand(1);

  Common common;
  std::optional<std::size_t> episodes;
  std::string resume;
  auto *train = app.add_subcommand("train", "train an agent; writes a checkpoint and train_log.csv");
  add_common(train, common);
  train->add_option("--out", common.out, "output directory");
  train->add_option("--episodes", episodes, "episode budget (total, including resumed episodes)");
  train->add_option("--resume", resume, "checkpoint to continue from")->check(CLI::ExistingFile);

  std::string method;
  double ratio = 0.0;
  auto *sparsify = app.add_subcommand("sparsify", "sparsify a graph with a baseline or a trained agent");
  add_common(sparsify, common);
  sparsify->add_option("--out", common.out, "output edge list (stdout if omitted)");
  sparsify->add_option("--method", method, "RE, LD, EFF, L-Spar or SparRL");
  sparsify->add_option("--ratio", ratio, "edge-kept ratio")->required()->check(CLI::Range(0.0, 1.0));

  std::string sparsified;
  std::vector<std::string> metric_names;
  auto *evaluate = app.add_subcommand("evaluate", "score a sparsified edge list against the original");
  add_common(evaluate, common);
  evaluate->add_option("--out", common.out, "CSV file (stdout if omitted)");
  evaluate->add_option("--sparsified", sparsified, "sparsified edge list")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--metric", metric_names, "pagerank, community, spsp, modularity (repeatable)");

  std::vector<std::string> methods;
  std::vector<double> ratios;
  std::optional<std::size_t> seeds;
  auto *compare = app.add_subcommand("compare", "method x ratio x seed grid; writes compare_rows/summary.csv");
  add_common(compare, common);
  compare->add_option("--out", common.out, "output directory");
  compare->add_option("--method", methods, "methods (repeatable)");
  compare->add_option("--ratio", ratios, "edge-kept ratios (repeatable)");
  compare->add_option("--metric", metric_names, "metrics (repeatable)");
  compare->add_option("--seeds", seeds, "seeds per cell");

  std::vector<int> stretches;
  auto *spanner = app.add_subcommand("spanner-compare", "Baswana-Sen spanners vs the agent at matched edge counts");
  add_common(spanner, common);
  spanner->add_option("--out", common.out, "output directory");
  spanner->add_option("--stretch", stretches, "stretch values t (repeatable)");

  std::vector<std::size_t> h_values;
  auto *sweep = app.add_subcommand("h-sweep", "timed greedy sparsification across subgraph lengths");
  add_common(sweep, common);
  sweep->add_option("--out", common.out, "output directory");
  sweep->add_option("--subgraph-len", h_values, "subgraph lengths (repeatable)");
  sweep->add_option("--ratio", ratios, "edge-kept ratios (repeatable)");
  sweep->add_option("--seeds", seeds, "seeds per cell");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) return cmd_train(common, episodes, resume);
    if (*sparsify) return cmd_sparsify(common, method, ratio);
    if (*evaluate) return cmd_evaluate(common, sparsified, metric_names);
    if (*compare) return cmd_compare(common, methods, ratios, metric_names, seeds);
    if (*spanner) return cmd_spanner(common, stretches);
    if (*sweep) return cmd_h_sweep(common, h_values, ratios, seeds);
  } catch (const UsageError &e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError &e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument &e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
