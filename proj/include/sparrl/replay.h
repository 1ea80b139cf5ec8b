#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sparrl/rng.h"
#include "sparrl/subgraph.h"

namespace sparrl {

struct Transition {
  CandidateSubgraph state;
  std::uint32_t action = 0;
  double reward = 0.0;
  CandidateSubgraph next_state; // empty when terminal
  bool terminal = false;
};

struct ReplaySample {
  std::vector<std::size_t> indices;
  std::vector<double> weights; // importance weights, max-normalized over the buffer
};

/**
 * Proportional prioritized replay. Item i is drawn with probability
 * p_i^alpha / sum_j p_j^alpha, from a sum tree; a parallel min tree gives the
 * largest importance weight for normalization.
 */
class ReplayBuffer {
public:
  ReplayBuffer(std::size_t capacity, double alpha, double beta);

  void add(Transition t);
  [[nodiscard]] ReplaySample sample(std::size_t count, Rng &rng) const;
  /// Sets p_i = |td_i| + floor for each sampled index.
  void update_priorities(const std::vector<std::size_t> &indices, const std::vector<double> &td_errors, double floor);

  [[nodiscard]] const Transition &at(std::size_t i) const { return _items.at(i); }
  [[nodiscard]] std::size_t size() const { return _items.size(); }
  [[nodiscard]] std::size_t capacity() const { return _capacity; }
  [[nodiscard]] double priority(std::size_t i) const;
  [[nodiscard]] double probability(std::size_t i) const;
  [[nodiscard]] double alpha() const { return _alpha; }
  [[nodiscard]] double beta() const { return _beta; }

  /// Directly assigns a raw priority (before the alpha exponent).
  void set_priority(std::size_t i, double p);

private:
  void write_leaf(std::size_t i, double scaled);

  std::size_t _capacity;
  double _alpha;
  double _beta;
  std::size_t _leaves = 1;
  std::size_t _next = 0;
  double _max_priority = 1.0;
  std::vector<Transition> _items;
  std::vector<double> _raw;
  std::vector<double> _sum;
  std::vector<double> _min;
};

} // namespace sparrl
