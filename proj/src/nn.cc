#include "sparrl/nn.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace sparrl::nn {

Matrix::Matrix(const std::size_t r, const std::size_t c, std::vector<double> values)
    : rows(r),
      cols(c),
      data(std::move(values)) {
  if (data.size() != r * c) {
    throw ShapeError("matrix data of length " + std::to_string(data.size()) + " does not fit " + shape());
  }
}

std::string Matrix::shape() const {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

ShapeError::ShapeError(const std::string &op, const Matrix &a, const Matrix &b)
    : std::invalid_argument(op + ": incompatible shapes " + a.shape() + " and " + b.shape()) {}

Parameter::Parameter(std::string n, Matrix v)
    : name(std::move(n)),
      value(std::move(v)),
      grad(value.rows, value.cols) {}

void Parameter::zero_grad() {
  if (grad.rows != value.rows || grad.cols != value.cols) {
    grad = Matrix(value.rows, value.cols);
  } else {
    std::fill(grad.data.begin(), grad.data.end(), 0.0);
  }
  has_grad = false;
}

void init_uniform(Parameter &p, const double bound, Rng &rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double &x : p.value.data) {
    x = dist(rng);
  }
}

namespace {

#ifdef __GLIBC__
// Tapes allocate and free many mid-sized matrices; keep them on the heap
// instead of round-tripping through mmap on every pass.
const bool malloc_tuned = [] {
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
  return true;
}();
#endif

// C (m x n) += A (m x k) * B (k x n), all row-major and contiguous.
// 4x16 register tiles built from 8-wide vector types; edges use a plain loop.
using vec8 = double __attribute__((vector_size(64)));

inline vec8 load8(const double *p) {
  vec8 v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline void add_store8(double *p, const vec8 v) {
  vec8 cur = load8(p);
  cur += v;
  std::memcpy(p, &cur, sizeof cur);
}

void gemm_accumulate(
    const std::size_t m,
    const std::size_t k,
    const std::size_t n,
    const double *A,
    const double *B,
    double *C
) {
  if (n == 1) {
    // Matrix-vector product.
    const std::size_t k_main = k - k % 8;
    for (std::size_t r = 0; r < m; ++r) {
      const double *a = A + r * k;
      vec8 acc = {};
      for (std::size_t p = 0; p < k_main; p += 8) {
        acc += load8(a + p) * load8(B + p);
      }
      double sum = 0.0;
      for (int q = 0; q < 8; ++q) {
        sum += acc[q];
      }
      for (std::size_t p = k_main; p < k; ++p) {
        sum += a[p] * B[p];
      }
      C[r] += sum;
    }
    return;
  }
  constexpr std::size_t MR = 4;
  constexpr std::size_t NR = 16;
  const std::size_t m_main = m - m % MR;
  const std::size_t n_main = n - n % NR;
  for (std::size_t i = 0; i < m_main; i += MR) {
    const double *a0 = A + i * k;
    const double *a1 = a0 + k;
    const double *a2 = a1 + k;
    const double *a3 = a2 + k;
    for (std::size_t j = 0; j < n_main; j += NR) {
      vec8 c00 = {}, c01 = {}, c10 = {}, c11 = {}, c20 = {}, c21 = {}, c30 = {}, c31 = {};
      for (std::size_t p = 0; p < k; ++p) {
        const vec8 b0 = load8(B + p * n + j);
        const vec8 b1 = load8(B + p * n + j + 8);
        c00 += a0[p] * b0;
        c01 += a0[p] * b1;
        c10 += a1[p] * b0;
        c11 += a1[p] * b1;
        c20 += a2[p] * b0;
        c21 += a2[p] * b1;
        c30 += a3[p] * b0;
        c31 += a3[p] * b1;
      }
      add_store8(C + (i + 0) * n + j, c00);
      add_store8(C + (i + 0) * n + j + 8, c01);
      add_store8(C + (i + 1) * n + j, c10);
      add_store8(C + (i + 1) * n + j + 8, c11);
      add_store8(C + (i + 2) * n + j, c20);
      add_store8(C + (i + 2) * n + j + 8, c21);
      add_store8(C + (i + 3) * n + j, c30);
      add_store8(C + (i + 3) * n + j + 8, c31);
    }
  }
  // Column remainder for the tiled rows, then leftover rows.
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t j0 = r < m_main ? n_main : 0;
    if (j0 == n) {
      continue;
    }
    for (std::size_t p = 0; p < k; ++p) {
      const double a = A[r * k + p];
      const double *b = B + p * n;
      double *c = C + r * n;
      for (std::size_t j = j0; j < n; ++j) {
        c[j] += a * b[j];
      }
    }
  }
}

std::vector<double> transposed(const Matrix &M) {
  std::vector<double> t(M.size());
  for (std::size_t r = 0; r < M.rows; ++r) {
    for (std::size_t c = 0; c < M.cols; ++c) {
      t[c * M.rows + r] = M.data[r * M.cols + c];
    }
  }
  return t;
}

} // namespace

Tape::Var Tape::push(Node node, const char *op_name) {
  // Parameter views are checked where they are produced (init, optimizer, load).
  if (node.view == nullptr) {
    for (const double x : node.own.data) {
      if (!std::isfinite(x)) {
        throw NonFiniteError(std::string("non-finite value produced by ") + op_name);
      }
    }
  }
  if (node.op != Op::Leaf) {
    node.requires_grad = false;
    for (const std::uint32_t i : node.inputs) {
      node.requires_grad = node.requires_grad || _nodes[i].requires_grad;
    }
  }
  _nodes.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(_nodes.size() - 1)};
}

Tape::Var Tape::constant(Matrix value) {
  Node n;
  n.own = std::move(value);
  return push(std::move(n), "constant");
}

Tape::Var Tape::parameter(Parameter &p) {
  Node n;
  n.view = &p.value;
  n.param = &p;
  return push(std::move(n), p.name.c_str());
}

Tape::Var Tape::frozen(const Parameter &p) {
  Node n;
  n.view = &p.value;
  n.requires_grad = false;
  return push(std::move(n), p.name.c_str());
}

const Matrix &Tape::value(const Var v) const {
  return _nodes.at(v.index).value();
}

Matrix Tape::gradient(const Var v) const {
  const Node &n = _nodes.at(v.index);
  if (n.param != nullptr) {
    return n.param->grad;
  }
  if (n.grad.size() == 0) {
    return Matrix(n.value().rows, n.value().cols);
  }
  return n.grad;
}

Matrix &Tape::grad_of(const std::uint32_t i) {
  Node &n = _nodes[i];
  const Matrix &v = n.value();
  Matrix &g = n.param != nullptr ? n.param->grad : n.grad;
  if (g.rows != v.rows || g.cols != v.cols) {
    g = Matrix(v.rows, v.cols);
  }
  return g;
}

void Tape::backward(const Var output) {
  const Matrix &out = value(output);
  if (out.rows != 1 || out.cols != 1) {
    throw ShapeError("backward: output must be 1x1, got " + out.shape());
  }
  for (Node &n : _nodes) {
    if (n.param == nullptr) {
      n.grad = Matrix();
    }
  }
  grad_of(output.index).data[0] += 1.0;
  for (std::uint32_t i = output.index + 1; i-- > 0;) {
    Node &n = _nodes[i];
    if (!n.requires_grad) {
      continue;
    }
    if (n.param != nullptr) {
      grad_of(i);
      n.param->has_grad = true;
      continue;
    }
    if (n.op != Op::Leaf && n.grad.size() != 0) {
      backprop(i);
    }
  }
}

Tape::Var Tape::gather_rows(const Var table, std::vector<std::uint32_t> rows) {
  const Matrix &t = value(table);
  Node n;
  n.op = Op::Gather;
  n.inputs = {table.index};
  n.own = Matrix(rows.size(), t.cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= t.rows) {
      throw ShapeError("gather_rows: row " + std::to_string(rows[r]) + " outside table " + t.shape());
    }
    std::copy_n(t.data.begin() + rows[r] * t.cols, t.cols, n.own.data.begin() + r * t.cols);
  }
  n.index = std::move(rows);
  return push(std::move(n), "gather_rows");
}

Tape::Var Tape::matmul(const Var a, const Var b) {
  const Matrix &A = value(a);
  const Matrix &B = value(b);
  if (A.cols != B.rows) {
    throw ShapeError("matmul", A, B);
  }
  Node n;
  n.op = Op::MatMul;
  n.inputs = {a.index, b.index};
  n.own = Matrix(A.rows, B.cols);
  gemm_accumulate(A.rows, A.cols, B.cols, A.data.data(), B.data.data(), n.own.data.data());
  return push(std::move(n), "matmul");
}

Tape::Var Tape::add_bias(const Var a, const Var bias) {
  const Matrix &A = value(a);
  const Matrix &B = value(bias);
  if (B.rows != 1 || B.cols != A.cols) {
    throw ShapeError("add_bias", A, B);
  }
  Node n;
  n.op = Op::AddBias;
  n.inputs = {a.index, bias.index};
  n.own = A;
  for (std::size_t i = 0; i < A.rows; ++i) {
    for (std::size_t j = 0; j < A.cols; ++j) {
      n.own.data[i * A.cols + j] += B.data[j];
    }
  }
  return push(std::move(n), "add_bias");
}

Tape::Var Tape::add(const Var a, const Var b) {
  const Matrix &A = value(a);
  const Matrix &B = value(b);
  if (A.rows != B.rows || A.cols != B.cols) {
    throw ShapeError("add", A, B);
  }
  Node n;
  n.op = Op::Add;
  n.inputs = {a.index, b.index};
  n.own = A;
  for (std::size_t i = 0; i < A.size(); ++i) {
    n.own.data[i] += B.data[i];
  }
  return push(std::move(n), "add");
}

Tape::Var Tape::leaky_relu(const Var a, const double slope) {
  const Matrix &A = value(a);
  Node n;
  n.op = Op::LeakyRelu;
  n.inputs = {a.index};
  n.aux = {slope};
  n.own = A;
  for (double &x : n.own.data) {
    const bool positive = x > 0.0;
    _pattern = (_pattern ^ static_cast<std::uint64_t>(positive)) * 1099511628211ull;
    if (!positive) {
      x *= slope;
    }
  }
  return push(std::move(n), "leaky_relu");
}

Tape::Var Tape::concat_cols(const Var a, const Var b) {
  const Matrix &A = value(a);
  const Matrix &B = value(b);
  if (A.rows != B.rows) {
    throw ShapeError("concat_cols", A, B);
  }
  Node n;
  n.op = Op::ConcatCols;
  n.inputs = {a.index, b.index};
  n.own = Matrix(A.rows, A.cols + B.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    std::copy_n(A.data.begin() + i * A.cols, A.cols, n.own.data.begin() + i * n.own.cols);
    std::copy_n(B.data.begin() + i * B.cols, B.cols, n.own.data.begin() + i * n.own.cols + A.cols);
  }
  return push(std::move(n), "concat_cols");
}

Tape::Var Tape::concat_rows(const std::span<const Var> parts) {
  if (parts.empty()) {
    throw ShapeError("concat_rows: no inputs");
  }
  const std::size_t cols = value(parts[0]).cols;
  std::size_t rows = 0;
  for (const Var v : parts) {
    if (value(v).cols != cols) {
      throw ShapeError("concat_rows", value(parts[0]), value(v));
    }
    rows += value(v).rows;
  }
  Node n;
  n.op = Op::ConcatRows;
  n.own = Matrix(rows, cols);
  std::size_t offset = 0;
  for (const Var v : parts) {
    const Matrix &m = value(v);
    std::copy(m.data.begin(), m.data.end(), n.own.data.begin() + offset);
    offset += m.size();
    n.inputs.push_back(v.index);
  }
  return push(std::move(n), "concat_rows");
}

Tape::Var Tape::segment_softmax(const Var scores, std::vector<std::uint32_t> offsets) {
  const Matrix &S = value(scores);
  if (S.cols != 1) {
    throw ShapeError("segment_softmax: expected a column vector, got " + S.shape());
  }
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != S.rows) {
    throw ShapeError("segment_softmax: offsets do not cover " + S.shape());
  }
  Node n;
  n.op = Op::SegmentSoftmax;
  n.inputs = {scores.index};
  n.own = Matrix(S.rows, 1);
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    const std::uint32_t lo = offsets[s];
    const std::uint32_t hi = offsets[s + 1];
    if (lo >= hi) {
      continue;
    }
    const double peak = *std::max_element(S.data.begin() + lo, S.data.begin() + hi);
    double total = 0.0;
    for (std::uint32_t i = lo; i < hi; ++i) {
      n.own.data[i] = std::exp(S.data[i] - peak);
      total += n.own.data[i];
    }
    for (std::uint32_t i = lo; i < hi; ++i) {
      n.own.data[i] /= total;
    }
  }
  n.index = std::move(offsets);
  return push(std::move(n), "segment_softmax");
}

Tape::Var Tape::scale_rows(const Var a, const Var weights) {
  const Matrix &A = value(a);
  const Matrix &W = value(weights);
  if (W.cols != 1 || W.rows != A.rows) {
    throw ShapeError("scale_rows", A, W);
  }
  Node n;
  n.op = Op::ScaleRows;
  n.inputs = {a.index, weights.index};
  n.own = A;
  for (std::size_t i = 0; i < A.rows; ++i) {
    for (std::size_t j = 0; j < A.cols; ++j) {
      n.own.data[i * A.cols + j] *= W.data[i];
    }
  }
  return push(std::move(n), "scale_rows");
}

Tape::Var Tape::segment_sum(const Var a, std::vector<std::uint32_t> offsets) {
  const Matrix &A = value(a);
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != A.rows) {
    throw ShapeError("segment_sum: offsets do not cover " + A.shape());
  }
  Node n;
  n.op = Op::SegmentSum;
  n.inputs = {a.index};
  n.own = Matrix(offsets.size() - 1, A.cols);
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    double *out = n.own.data.data() + s * A.cols;
    for (std::uint32_t i = offsets[s]; i < offsets[s + 1]; ++i) {
      const double *row = A.data.data() + i * A.cols;
      for (std::size_t j = 0; j < A.cols; ++j) {
        out[j] += row[j];
      }
    }
  }
  n.index = std::move(offsets);
  return push(std::move(n), "segment_sum");
}

Tape::Var Tape::weighted_squared_error(const Var pred, std::vector<double> target, std::vector<double> weights) {
  const Matrix &P = value(pred);
  if (P.cols != 1 || target.size() != P.rows || weights.size() != P.rows || P.rows == 0) {
    throw ShapeError(
        "weighted_squared_error: prediction " + P.shape() + " with " + std::to_string(target.size()) +
        " targets and " + std::to_string(weights.size()) + " weights"
    );
  }
  Node n;
  n.op = Op::WeightedSquaredError;
  n.inputs = {pred.index};
  double total = 0.0;
  for (std::size_t i = 0; i < P.rows; ++i) {
    const double d = P.data[i] - target[i];
    total += weights[i] * d * d;
  }
  n.own = Matrix(1, 1, total / static_cast<double>(P.rows));
  n.aux = std::move(target);
  n.aux.insert(n.aux.end(), weights.begin(), weights.end());
  return push(std::move(n), "weighted_squared_error");
}

Tape::Var Tape::sum(const Var a) {
  const Matrix &A = value(a);
  Node n;
  n.op = Op::Sum;
  n.inputs = {a.index};
  double total = 0.0;
  for (const double x : A.data) {
    total += x;
  }
  n.own = Matrix(1, 1, total);
  return push(std::move(n), "sum");
}

void Tape::backprop(const std::uint32_t i) {
  // Gradients of inputs are only materialized when they require them.
  const auto wants = [&](const std::size_t k) { return _nodes[_nodes[i].inputs[k]].requires_grad; };
  const auto input_value = [&](const std::size_t k) -> const Matrix & { return _nodes[_nodes[i].inputs[k]].value(); };
  const Matrix &G = _nodes[i].grad;

  switch (_nodes[i].op) {
  case Op::Leaf:
    break;
  case Op::Gather: {
    if (!wants(0)) {
      break;
    }
    const std::vector<std::uint32_t> &rows = _nodes[i].index;
    Matrix &T = grad_of(_nodes[i].inputs[0]);
    const std::size_t cols = T.cols;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      double *dst = T.data.data() + rows[r] * cols;
      const double *src = G.data.data() + r * cols;
      for (std::size_t j = 0; j < cols; ++j) {
        dst[j] += src[j];
      }
    }
    break;
  }
  case Op::MatMul: {
    const Matrix &A = input_value(0);
    const Matrix &B = input_value(1);
    if (wants(0)) {
      // dA += G B^T
      Matrix &dA = grad_of(_nodes[i].inputs[0]);
      const std::vector<double> bt = transposed(B);
      gemm_accumulate(G.rows, G.cols, B.rows, G.data.data(), bt.data(), dA.data.data());
    }
    if (wants(1)) {
      // dB += A^T G
      Matrix &dB = grad_of(_nodes[i].inputs[1]);
      const std::vector<double> at = transposed(A);
      gemm_accumulate(A.cols, A.rows, G.cols, at.data(), G.data.data(), dB.data.data());
    }
    break;
  }
  case Op::AddBias: {
    if (wants(0)) {
      Matrix &dA = grad_of(_nodes[i].inputs[0]);
      for (std::size_t k = 0; k < G.size(); ++k) {
        dA.data[k] += G.data[k];
      }
    }
    if (wants(1)) {
      Matrix &dB = grad_of(_nodes[i].inputs[1]);
      for (std::size_t r = 0; r < G.rows; ++r) {
        for (std::size_t j = 0; j < G.cols; ++j) {
          dB.data[j] += G.data[r * G.cols + j];
        }
      }
    }
    break;
  }
  case Op::Add: {
    for (std::size_t k = 0; k < 2; ++k) {
      if (!wants(k)) {
        continue;
      }
      Matrix &d = grad_of(_nodes[i].inputs[k]);
      for (std::size_t e = 0; e < G.size(); ++e) {
        d.data[e] += G.data[e];
      }
    }
    break;
  }
  case Op::LeakyRelu: {
    if (!wants(0)) {
      break;
    }
    const Matrix &A = input_value(0);
    const double slope = _nodes[i].aux[0];
    Matrix &dA = grad_of(_nodes[i].inputs[0]);
    for (std::size_t e = 0; e < G.size(); ++e) {
      dA.data[e] += A.data[e] > 0.0 ? G.data[e] : slope * G.data[e];
    }
    break;
  }
  case Op::ConcatCols: {
    const std::size_t ca = input_value(0).cols;
    const std::size_t cb = input_value(1).cols;
    if (wants(0)) {
      Matrix &dA = grad_of(_nodes[i].inputs[0]);
      for (std::size_t r = 0; r < G.rows; ++r) {
        for (std::size_t j = 0; j < ca; ++j) {
          dA.data[r * ca + j] += G.data[r * G.cols + j];
        }
      }
    }
    if (wants(1)) {
      Matrix &dB = grad_of(_nodes[i].inputs[1]);
      for (std::size_t r = 0; r < G.rows; ++r) {
        for (std::size_t j = 0; j < cb; ++j) {
          dB.data[r * cb + j] += G.data[r * G.cols + ca + j];
        }
      }
    }
    break;
  }
  case Op::ConcatRows: {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < _nodes[i].inputs.size(); ++k) {
      const std::size_t len = input_value(k).size();
      if (wants(k)) {
        Matrix &d = grad_of(_nodes[i].inputs[k]);
        for (std::size_t e = 0; e < len; ++e) {
          d.data[e] += G.data[offset + e];
        }
      }
      offset += len;
    }
    break;
  }
  case Op::SegmentSoftmax: {
    if (!wants(0)) {
      break;
    }
    const Matrix &Y = _nodes[i].own;
    const std::vector<std::uint32_t> &offsets = _nodes[i].index;
    Matrix &dS = grad_of(_nodes[i].inputs[0]);
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
      double dot = 0.0;
      for (std::uint32_t k = offsets[s]; k < offsets[s + 1]; ++k) {
        dot += Y.data[k] * G.data[k];
      }
      for (std::uint32_t k = offsets[s]; k < offsets[s + 1]; ++k) {
        dS.data[k] += Y.data[k] * (G.data[k] - dot);
      }
    }
    break;
  }
  case Op::ScaleRows: {
    const Matrix &A = input_value(0);
    const Matrix &W = input_value(1);
    if (wants(0)) {
      Matrix &dA = grad_of(_nodes[i].inputs[0]);
      for (std::size_t r = 0; r < A.rows; ++r) {
        for (std::size_t j = 0; j < A.cols; ++j) {
          dA.data[r * A.cols + j] += W.data[r] * G.data[r * A.cols + j];
        }
      }
    }
    if (wants(1)) {
      Matrix &dW = grad_of(_nodes[i].inputs[1]);
      for (std::size_t r = 0; r < A.rows; ++r) {
        double acc = 0.0;
        for (std::size_t j = 0; j < A.cols; ++j) {
          acc += A.data[r * A.cols + j] * G.data[r * A.cols + j];
        }
        dW.data[r] += acc;
      }
    }
    break;
  }
  case Op::SegmentSum: {
    if (!wants(0)) {
      break;
    }
    const std::vector<std::uint32_t> &offsets = _nodes[i].index;
    Matrix &dA = grad_of(_nodes[i].inputs[0]);
    const std::size_t cols = dA.cols;
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
      const double *g = G.data.data() + s * cols;
      for (std::uint32_t k = offsets[s]; k < offsets[s + 1]; ++k) {
        double *d = dA.data.data() + k * cols;
        for (std::size_t j = 0; j < cols; ++j) {
          d[j] += g[j];
        }
      }
    }
    break;
  }
  case Op::WeightedSquaredError: {
    if (!wants(0)) {
      break;
    }
    const Matrix &P = input_value(0);
    const std::size_t n = P.rows;
    const std::vector<double> &aux = _nodes[i].aux;
    Matrix &dP = grad_of(_nodes[i].inputs[0]);
    const double scale = 2.0 * G.data[0] / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
      dP.data[k] += scale * aux[n + k] * (P.data[k] - aux[k]);
    }
    break;
  }
  case Op::Sum: {
    if (!wants(0)) {
      break;
    }
    Matrix &dA = grad_of(_nodes[i].inputs[0]);
    for (double &x : dA.data) {
      x += G.data[0];
    }
    break;
  }
  }
}

Linear::Linear(const std::string &name, const std::size_t in, const std::size_t out, Rng &rng)
    : weight(name + ".weight", Matrix(in, out)),
      bias(name + ".bias", Matrix(1, out)) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  init_uniform(weight, bound, rng);
  init_uniform(bias, bound, rng);
}

Var linear(Tape &tape, const Var x, const Var weight, const Var bias) {
  return tape.add_bias(tape.matmul(x, weight), bias);
}

std::vector<double> softmax(const std::span<const double> logits) {
  Tape tape;
  const Var v = tape.constant(Matrix(logits.size(), 1, std::vector<double>(logits.begin(), logits.end())));
  const Var s = tape.segment_softmax(v, {0, static_cast<std::uint32_t>(logits.size())});
  return tape.value(s).data;
}

GraphAttention::GraphAttention(const std::string &name, const std::size_t dim, Rng &rng)
    : projection(name + ".projection", Matrix(dim, dim)),
      coefficient(name + ".coefficient", Matrix(2 * dim, 1)),
      coefficient_bias(name + ".coefficient_bias", Matrix(1, 1)) {
  init_uniform(projection, 1.0 / std::sqrt(static_cast<double>(dim)), rng);
  init_uniform(coefficient, 1.0 / std::sqrt(static_cast<double>(2 * dim)), rng);
  init_uniform(coefficient_bias, 1.0 / std::sqrt(static_cast<double>(2 * dim)), rng);
}

Var graph_attention(
    Tape &tape,
    const Var embeddings,
    const Var projection,
    const Var coefficient,
    const Var coefficient_bias,
    const AttentionLayout &layout,
    Var *attention
) {
  const Var projected = tape.matmul(embeddings, projection);
  const Var centers = tape.gather_rows(projected, layout.center_row);
  const Var neighbors = tape.gather_rows(projected, layout.neighbor_row);
  const Var pair_features = tape.concat_cols(centers, neighbors);
  const Var scores = tape.leaky_relu(linear(tape, pair_features, coefficient, coefficient_bias), kAttentionSlope);
  const Var weights = tape.segment_softmax(scores, layout.offsets);
  if (attention != nullptr) {
    *attention = weights;
  }
  return tape.segment_sum(tape.scale_rows(neighbors, weights), layout.offsets);
}

GradCheckReport grad_check(
    const ScalarModel &model,
    const std::span<Parameter *const> params,
    Rng &rng,
    const GradCheckOptions &options
) {
  GradCheckReport report;

  for (Parameter *p : params) {
    p->zero_grad();
  }
  std::uint64_t base_pattern = 0;
  {
    Tape tape;
    const Var out = model(tape);
    tape.backward(out);
    base_pattern = tape.activation_pattern();
  }

  const auto evaluate = [&](std::uint64_t &pattern) {
    Tape tape;
    const Var out = model(tape);
    pattern = tape.activation_pattern();
    return tape.value(out).data[0];
  };

  for (Parameter *p : params) {
    const std::size_t count = std::min(options.samples_per_parameter, p->value.size());
    for (const std::size_t k : [&] {
           std::vector<std::size_t> idx(p->value.size());
           for (std::size_t i = 0; i < idx.size(); ++i) {
             idx[i] = i;
           }
           std::shuffle(idx.begin(), idx.end(), rng);
           idx.resize(count);
           return idx;
         }()) {
      const double original = p->value.data[k];
      std::uint64_t plus_pattern = 0;
      std::uint64_t minus_pattern = 0;
      p->value.data[k] = original + options.step;
      const double plus = evaluate(plus_pattern);
      p->value.data[k] = original - options.step;
      const double minus = evaluate(minus_pattern);
      p->value.data[k] = original;
      if (plus_pattern != base_pattern || minus_pattern != base_pattern) {
        ++report.skipped_at_kinks;
        continue;
      }
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double analytic = p->grad.data[k];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), options.magnitude_floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.checked;
      if (report.checked == 1 || rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_parameter = p->name;
        report.worst_index = k;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_relative_error <= options.tolerance;
  return report;
}

} // namespace sparrl::nn
