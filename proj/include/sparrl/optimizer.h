#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sparrl/nn.h"

namespace sparrl::nn {

class Optimizer {
public:
  virtual ~Optimizer() = default;

  /// Applies one update from the populated gradients, then clears them.
  /// Throws std::logic_error if any parameter has no gradient.
  void step(std::span<Parameter *const> params);

  [[nodiscard]] std::uint64_t step_count() const { return _steps; }
  [[nodiscard]] double learning_rate() const { return _lr; }

protected:
  explicit Optimizer(double lr);
  virtual void update(std::span<Parameter *const> params) = 0;

  double _lr;
  std::uint64_t _steps = 0;
};

/// w <- w - lr * g
class Sgd final : public Optimizer {
public:
  explicit Sgd(double lr) : Optimizer(lr) {}

private:
  void update(std::span<Parameter *const> params) override;
};

struct AdamState {
  std::uint64_t steps = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

/// Adaptive moment estimation with bias correction.
class Adam final : public Optimizer {
public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  [[nodiscard]] AdamState state() const;
  void restore(AdamState state);

private:
  void update(std::span<Parameter *const> params) override;

  double _beta1;
  double _beta2;
  double _epsilon;
  std::vector<Matrix> _m;
  std::vector<Matrix> _v;
};

} // namespace sparrl::nn
