#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparrl/rng.h"

namespace sparrl::nn {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> values);

  [[nodiscard]] double &at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  [[nodiscard]] double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] std::string shape() const;

  friend bool operator==(const Matrix &, const Matrix &) = default;
};

class ShapeError : public std::invalid_argument {
public:
  ShapeError(const std::string &op, const Matrix &a, const Matrix &b);
  explicit ShapeError(const std::string &what) : std::invalid_argument(what) {}
};

class NonFiniteError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A learnable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool has_grad = false;

  Parameter() = default;
  Parameter(std::string n, Matrix v);

  void zero_grad();
};

/// Uniform in [-bound, bound].
void init_uniform(Parameter &p, double bound, Rng &rng);

/**
 * Wengert list for reverse-mode differentiation. Every op appends one node
 * whose value is computed eagerly; backward() walks the list in reverse and
 * accumulates gradients, finally adding parameter gradients into the bound
 * Parameter objects.
 *
 * A tape is single-use and not thread-safe; build one per forward pass.
 */
class Tape {
public:
  struct Var {
    std::uint32_t index = 0;
  };

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  Var constant(Matrix value);
  /// Gradient flows into `p.grad` on backward().
  Var parameter(Parameter &p);
  /// Read-only view of a parameter; no gradient is recorded.
  Var frozen(const Parameter &p);

  [[nodiscard]] const Matrix &value(Var v) const;
  /// Gradient of the last backward() output w.r.t. `v` (zeros if untouched).
  [[nodiscard]] Matrix gradient(Var v) const;

  /// `output` must be 1x1.
  void backward(Var output);

  /// Hash of the sign pattern seen by every LeakyReLU so far. Two forward
  /// passes with equal hashes took the same piece of every piecewise-linear op.
  [[nodiscard]] std::uint64_t activation_pattern() const { return _pattern; }
  [[nodiscard]] std::size_t node_count() const { return _nodes.size(); }

  // Ops.
  Var gather_rows(Var table, std::vector<std::uint32_t> rows);
  Var matmul(Var a, Var b);
  Var add_bias(Var a, Var bias);
  Var add(Var a, Var b);
  Var leaky_relu(Var a, double slope);
  Var concat_cols(Var a, Var b);
  Var concat_rows(std::span<const Var> parts);
  /// Softmax of a column vector within each segment [offsets[s], offsets[s+1]).
  Var segment_softmax(Var scores, std::vector<std::uint32_t> offsets);
  /// Row i of `a` scaled by `weights[i]` (weights is n x 1).
  Var scale_rows(Var a, Var weights);
  /// Sum of rows within each segment; result has one row per segment.
  Var segment_sum(Var a, std::vector<std::uint32_t> offsets);
  /// mean_i w_i (pred_i - target_i)^2 for a column vector `pred`.
  Var weighted_squared_error(Var pred, std::vector<double> target, std::vector<double> weights);
  /// Sum of all entries, 1x1.
  Var sum(Var a);

private:
  enum class Op : std::uint8_t {
    Leaf,
    Gather,
    MatMul,
    AddBias,
    Add,
    LeakyRelu,
    ConcatCols,
    ConcatRows,
    SegmentSoftmax,
    ScaleRows,
    SegmentSum,
    WeightedSquaredError,
    Sum,
  };

  struct Node {
    Op op = Op::Leaf;
    Matrix own;
    const Matrix *view = nullptr;
    Parameter *param = nullptr;
    std::vector<std::uint32_t> inputs;
    std::vector<std::uint32_t> index; // gather rows / segment offsets
    std::vector<double> aux;          // targets + weights, slope
    Matrix grad;
    bool requires_grad = true;

    [[nodiscard]] const Matrix &value() const { return view != nullptr ? *view : own; }
  };

  Var push(Node node, const char *op_name);
  Matrix &grad_of(std::uint32_t i);
  void backprop(std::uint32_t i);

  std::vector<Node> _nodes;
  std::uint64_t _pattern = 1469598103934665603ull;
};

using Var = Tape::Var;

inline constexpr double kLeakySlope = 0.01;
inline constexpr double kAttentionSlope = 0.2;

/// Fully connected layer: y = x W + b, W is in x out.
struct Linear {
  Parameter weight;
  Parameter bias;

  Linear() = default;
  Linear(const std::string &name, std::size_t in, std::size_t out, Rng &rng);

  [[nodiscard]] std::size_t in_features() const { return weight.value.rows; }
  [[nodiscard]] std::size_t out_features() const { return weight.value.cols; }
};

Var linear(Tape &tape, Var x, Var weight, Var bias);

/// Softmax over all entries of a vector (used standalone and in tests).
std::vector<double> softmax(std::span<const double> logits);

/// Neighborhoods for single-head graph attention over a local node table.
/// Center c attends to local rows neighbor[offsets[c] .. offsets[c+1]),
/// which must include c's own row.
struct AttentionLayout {
  std::vector<std::uint32_t> center_row; // per attention pair, the center's local row
  std::vector<std::uint32_t> neighbor_row;
  std::vector<std::uint32_t> offsets;    // per center, into the pair arrays
};

/// Single-head graph attention: projection, 1-unit coefficient layer over
/// concatenated projections, LeakyReLU(0.2), softmax per neighborhood,
/// attention-weighted sum of projected neighbors.
struct GraphAttention {
  Parameter projection;       // d x d
  Parameter coefficient;      // 2d x 1
  Parameter coefficient_bias; // 1 x 1

  GraphAttention() = default;
  GraphAttention(const std::string &name, std::size_t dim, Rng &rng);
};

/// Returns one attended embedding per center. If `attention` is non-null it
/// receives the per-pair attention weights (pairs x 1).
Var graph_attention(
    Tape &tape,
    Var embeddings,
    Var projection,
    Var coefficient,
    Var coefficient_bias,
    const AttentionLayout &layout,
    Var *attention = nullptr
);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_at_kinks = 0;
  bool passed = true;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  std::size_t samples_per_parameter = 8;
  /// Denominator floor for the relative error, so entries whose gradient is
  /// zero up to rounding are compared absolutely.
  double magnitude_floor = 1e-6;
};

/// Builds a scalar on the given tape from the given parameters.
using ScalarModel = std::function<Var(Tape &)>;

/// Central finite differences against reverse-mode gradients on a random
/// subset of entries of each parameter. Entries whose perturbation flips any
/// LeakyReLU sign are skipped, since the function is not differentiable there.
GradCheckReport grad_check(
    const ScalarModel &model,
    std::span<Parameter *const> params,
    Rng &rng,
    const GradCheckOptions &options = {}
);

} // namespace sparrl::nn
