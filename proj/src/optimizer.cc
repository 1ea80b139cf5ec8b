#include "sparrl/optimizer.h"

#include <cmath>
#include <stdexcept>

namespace sparrl::nn {

Optimizer::Optimizer(const double lr) : _lr(lr) {
  if (!(lr > 0.0)) {
    throw std::invalid_argument("learning rate must be positive");
  }
}

void Optimizer::step(const std::span<Parameter *const> params) {
  for (const Parameter *p : params) {
    if (!p->has_grad) {
      throw std::logic_error("optimizer step: parameter '" + p->name + "' has no gradient");
    }
  }
  ++_steps;
  update(params);
  for (Parameter *p : params) {
    p->zero_grad();
  }
}

void Sgd::update(const std::span<Parameter *const> params) {
  for (Parameter *p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      p->value.data[i] -= _lr * p->grad.data[i];
    }
  }
}

Adam::Adam(const double lr, const double beta1, const double beta2, const double epsilon)
    : Optimizer(lr),
      _beta1(beta1),
      _beta2(beta2),
      _epsilon(epsilon) {}

void Adam::update(const std::span<Parameter *const> params) {
  if (_m.empty()) {
    for (const Parameter *p : params) {
      _m.emplace_back(p->value.rows, p->value.cols);
      _v.emplace_back(p->value.rows, p->value.cols);
    }
  }
  if (_m.size() != params.size()) {
    throw std::logic_error("adam: parameter list changed between steps");
  }
  const double t = static_cast<double>(_steps);
  const double correction1 = 1.0 - std::pow(_beta1, t);
  const double correction2 = 1.0 - std::pow(_beta2, t);
  const double step_size = _lr * std::sqrt(correction2) / correction1;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter &p = *params[k];
    if (_m[k].size() != p.value.size()) {
      throw std::logic_error("adam: moment shape no longer matches '" + p.name + "'");
    }
    double *m = _m[k].data.data();
    double *v = _v[k].data.data();
    const double *g = p.grad.data.data();
    double *w = p.value.data.data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      m[i] = _beta1 * m[i] + (1.0 - _beta1) * g[i];
      v[i] = _beta2 * v[i] + (1.0 - _beta2) * g[i] * g[i];
      w[i] -= step_size * m[i] / (std::sqrt(v[i]) + _epsilon);
    }
  }
}

AdamState Adam::state() const {
  return AdamState{_steps, _m, _v};
}

void Adam::restore(AdamState state) {
  _steps = state.steps;
  _m = std::move(state.first_moment);
  _v = std::move(state.second_moment);
}

} // namespace sparrl::nn
