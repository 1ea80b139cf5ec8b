#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sparrl/agent.h"
#include "sparrl/baselines.h"
#include "sparrl/config.h"
#include "sparrl/graph.h"
#include "sparrl/metrics.h"

namespace sparrl {

/// Runs fn(0..count-1) on at most `workers` threads (0: hardware concurrency).
/// The first exception thrown by any job is rethrown after all jobs finish.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)> &fn);

enum class Metric { pagerank, community, spsp, modularity };
Metric parse_metric(const std::string &name);
std::string to_string(Metric m);

/// Fixed evaluation context for one original graph.
class Evaluator {
public:
  Evaluator(const Graph &original, std::optional<std::vector<std::int32_t>> labels, std::size_t spsp_pairs,
            std::size_t louvain_runs, std::uint64_t seed);

  /// Spearman rho of PageRank, mean Louvain ARI against the labels, mean SPSP
  /// increase over the fixed query set, or mean Louvain modularity of G'.
  /// `seed` picks the Louvain streams; the SPSP queries never change.
  [[nodiscard]] double evaluate(const Graph &sparsified, Metric metric, std::uint64_t seed) const;

  [[nodiscard]] const metrics::PathQuerySet &queries() const { return _queries; }
  [[nodiscard]] const Graph &original() const { return _original; }
  [[nodiscard]] bool has_labels() const { return _labels.has_value(); }

private:
  Graph _original;
  std::optional<std::vector<std::int32_t>> _labels;
  metrics::RankVector _rank;
  metrics::PathQuerySet _queries;
  std::size_t _louvain_runs;
};

/// Fixed SPSP query set: min(count, n(n-1)/2) pairs with distances on `g`.
metrics::PathQuerySet evaluation_queries(const Graph &g, std::size_t count, std::uint64_t seed);

/// Dispatches to a baseline or to the learned policy ("SparRL", needs `agent`).
baselines::Result sparsify_with(
    const std::string &method,
    const Graph &g,
    double ratio,
    std::uint64_t seed,
    const Agent *agent,
    std::size_t eval_len,
    double eff_burn_probability = 0.95
);

struct DatasetBundle {
  Graph graph;
  LoadReport report;
  std::optional<std::vector<std::int32_t>> labels;
};

/// Loads the dataset and optional labels named by the config.
DatasetBundle load_dataset(const RunConfig &config);

AgentConfig agent_config_for(const RunConfig &config);

struct TrainLogRow {
  std::size_t episode = 0;
  std::uint64_t step = 0; // policy updates so far
  double epsilon = 0.0;
  std::optional<double> loss;
  double mean_reward = 0.0;
  std::size_t buffer_size = 0;
  double mean_raw_reward = 0.0;
};

std::string train_log_header();
std::string format_train_log_row(const TrainLogRow &row);

struct TrainOutcome {
  std::size_t episodes_run = 0;
  bool stopped_early = false;
  double best_validation = 0.0;
};

/// Episode loop with periodic validation (greedy pruning of 10% of the
/// edges, scored by the objective's metric) and patience-based stopping.
/// Writes one log row per episode to `log` and checkpoints to
/// `checkpoint_path` every checkpoint_every episodes and at the end.
TrainOutcome train_agent(
    const RunConfig &config,
    const DatasetBundle &data,
    Agent &agent,
    std::ostream &log,
    const std::string &checkpoint_path
);

/// Checkpoint extra block written by train_agent: {"run_config": ...}.
std::string checkpoint_extra(const RunConfig &config);
/// Rebuilds an agent for `g` from a checkpoint written by train_agent.
std::unique_ptr<Agent> load_agent(const std::string &path, const Graph &g);

/// Metric used to judge an objective during validation and evaluation.
Metric metric_for(Objective objective);

// CSV output.
std::string csv_escape(const std::string &field);
std::string format_double(double x);

struct MetricRow {
  std::string dataset;
  std::string method;
  double edge_kept_ratio = 0.0;
  std::string metric;
  std::uint64_t seed = 0;
  std::optional<double> value; // empty on failure
  std::string params;
  std::string error;
};

std::string metric_row_header();
std::string format_metric_row(const MetricRow &row);

struct SummaryRow {
  std::string dataset;
  std::string method;
  double ratio = 0.0;
  std::string metric;
  double mean = 0.0;
  std::size_t n_seeds = 0;
  bool best = false;
};

/// Full grid (method x ratio x metric x seed) on the worker pool.
std::vector<MetricRow> run_compare_grid(const RunConfig &config, const DatasetBundle &data, const Agent *agent);
/// Mean per (method, ratio, metric) over successful seeds; the best method per
/// (ratio, metric) is flagged (lowest for spsp, highest otherwise).
std::vector<SummaryRow> summarize(const std::vector<MetricRow> &rows);
std::string summary_header();
std::string format_summary_row(const SummaryRow &row);

struct HSweepRow {
  std::size_t subgraph_len = 0;
  double edge_kept_ratio = 0.0;
  std::string metric;
  std::uint64_t seed = 0;
  double value = 0.0;
  double seconds = 0.0;
};

/// Greedy sparsification at each evaluation subgraph length, timed.
std::vector<HSweepRow> run_h_sweep(const RunConfig &config, const DatasetBundle &data, const Agent &agent);

std::string spanner_header();
std::string format_spanner_row(const baselines::SpannerRow &row);

} // namespace sparrl
