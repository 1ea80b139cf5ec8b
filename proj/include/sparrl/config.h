#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sparrl/agent.h"
#include "sparrl/rewards.h"

namespace sparrl {

inline constexpr int kConfigSchemaVersion = 1;

/// Everything a run needs. Files are JSON with a "schema_version" field;
/// unknown keys are rejected.
struct RunConfig {
  // data
  std::string dataset;
  std::string dataset_name; // CSV label; defaults to the file stem
  bool directed = false;
  std::string labels;

  RewardConfig reward;
  AgentConfig agent;
  std::uint64_t seed = 0;

  // training
  std::size_t episodes = 1000;
  std::size_t validate_every = 50;
  std::size_t patience = 0; // validations without improvement; 0 disables early stopping
  std::size_t checkpoint_every = 0;
  std::string checkpoint; // agent checkpoint to read (sparsify/compare) or resume from (train)

  // evaluation
  std::vector<double> ratios{0.2, 0.4, 0.6, 0.8};
  std::size_t seeds = 8;
  std::vector<std::string> methods{"RE", "LD", "EFF", "L-Spar", "SparRL"};
  std::vector<std::string> metrics{"pagerank"};
  std::size_t eval_subgraph_len = 32;
  std::size_t spsp_pairs = 8196;
  std::size_t louvain_runs = 8;
  double eff_burn_probability = 0.95;
  std::vector<int> spanner_stretches{3, 4, 5};
  std::size_t spanner_runs = 16;
  std::vector<std::size_t> h_values{8, 16, 32, 64};

  std::string output_dir = "out";
  std::size_t workers = 1; // 0: one per hardware thread

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Throws sparrl::DataError on malformed JSON, unknown keys or bad types.
RunConfig parse_config(const std::string &text);
RunConfig load_config(const std::string &path);
std::string dump_config(const RunConfig &config);

} // namespace sparrl
