#include "sparrl/replay.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sparrl {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ReplayBuffer::ReplayBuffer(const std::size_t capacity, const double alpha, const double beta)
    : _capacity(capacity), _alpha(alpha), _beta(beta) {
  if (capacity == 0) {
    throw std::invalid_argument("replay buffer capacity must be positive");
  }
  if (alpha < 0.0 || beta < 0.0) {
    throw std::invalid_argument("replay alpha and beta must be non-negative");
  }
  while (_leaves < capacity) {
    _leaves *= 2;
  }
  _sum.assign(2 * _leaves, 0.0);
  _min.assign(2 * _leaves, kInf);
  _raw.assign(capacity, 0.0);
  _items.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::write_leaf(std::size_t i, const double scaled) {
  std::size_t node = i + _leaves;
  _sum[node] = scaled;
  _min[node] = scaled;
  for (node /= 2; node >= 1; node /= 2) {
    _sum[node] = _sum[2 * node] + _sum[2 * node + 1];
    _min[node] = std::min(_min[2 * node], _min[2 * node + 1]);
  }
}

void ReplayBuffer::set_priority(const std::size_t i, const double p) {
  if (i >= _items.size()) {
    throw std::out_of_range("replay index out of range");
  }
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw std::invalid_argument("replay priority must be positive and finite");
  }
  _raw[i] = p;
  _max_priority = std::max(_max_priority, p);
  write_leaf(i, std::pow(p, _alpha));
}

void ReplayBuffer::add(Transition t) {
  if (t.action >= t.state.size()) {
    throw std::invalid_argument("transition action outside its state");
  }
  const std::size_t slot = _next;
  if (_items.size() < _capacity) {
    _items.push_back(std::move(t));
  } else {
    _items[slot] = std::move(t);
  }
  _next = (_next + 1) % _capacity;
  set_priority(slot, _max_priority);
}

double ReplayBuffer::priority(const std::size_t i) const {
  return _raw.at(i);
}

double ReplayBuffer::probability(const std::size_t i) const {
  if (i >= _items.size()) {
    throw std::out_of_range("replay index out of range");
  }
  return _sum[i + _leaves] / _sum[1];
}

ReplaySample ReplayBuffer::sample(const std::size_t count, Rng &rng) const {
  if (_items.empty()) {
    throw std::logic_error("cannot sample from an empty replay buffer");
  }
  const double total = _sum[1];
  const double n = static_cast<double>(_items.size());
  const double max_weight = std::pow(n * _min[1] / total, -_beta);
  ReplaySample out;
  out.indices.reserve(count);
  out.weights.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    double target = uniform_unit(rng) * total;
    std::size_t node = 1;
    while (node < _leaves) {
      const std::size_t left = 2 * node;
      if (target < _sum[left] || _sum[left + 1] <= 0.0) {
        node = left;
      } else {
        target -= _sum[left];
        node = left + 1;
      }
    }
    const std::size_t i = std::min(node - _leaves, _items.size() - 1);
    const double p = _sum[i + _leaves] / total;
    out.indices.push_back(i);
    out.weights.push_back(std::pow(n * p, -_beta) / max_weight);
  }
  return out;
}

void ReplayBuffer::update_priorities(
    const std::vector<std::size_t> &indices,
    const std::vector<double> &td_errors,
    const double floor
) {
  if (indices.size() != td_errors.size()) {
    throw std::invalid_argument("priority update: size mismatch");
  }
  for (std::size_t k = 0; k < indices.size(); ++k) {
    set_priority(indices[k], std::abs(td_errors[k]) + floor);
  }
}

} // namespace sparrl
