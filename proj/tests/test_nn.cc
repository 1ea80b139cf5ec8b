#include <doctest.h>

#include <cmath>

#include "sparrl/nn.h"
#include "sparrl/optimizer.h"
#include "sparrl/rng.h"

using namespace sparrl;
using namespace sparrl::nn;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng &rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double &x : m.data) x = scale * (2 * uniform_unit(rng) - 1);
  return m;
}

double leaky(double x, double slope) { return x > 0 ? x : slope * x; }

// dense recomputation of single-head attention for one center
std::vector<double> dense_attention(const Matrix &emb, const Matrix &w, const Matrix &a, double b, std::size_t center,
                                    const std::vector<std::size_t> &hood, std::vector<double> &weights) {
  const std::size_t d = w.cols;
  auto project = [&](std::size_t row) {
    std::vector<double> z(d, 0.0);
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < emb.cols; ++k) z[j] += emb.at(row, k) * w.at(k, j);
    return z;
  };
  const auto zc = project(center);
  std::vector<double> scores;
  for (const std::size_t n : hood) {
    const auto zn = project(n);
    double s = b;
    for (std::size_t j = 0; j < d; ++j) s += zc[j] * a.at(j, 0) + zn[j] * a.at(d + j, 0);
    scores.push_back(leaky(s, 0.2));
  }
  const double mx = *std::max_element(scores.begin(), scores.end());
  double total = 0;
  weights.clear();
  for (const double s : scores) {
    weights.push_back(std::exp(s - mx));
    total += weights.back();
  }
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < hood.size(); ++i) {
    weights[i] /= total;
    const auto zn = project(hood[i]);
    for (std::size_t j = 0; j < d; ++j) out[j] += weights[i] * zn[j];
  }
  return out;
}

AttentionLayout layout_for(const std::vector<std::vector<std::size_t>> &hoods) {
  AttentionLayout l;
  l.offsets.push_back(0);
  for (std::size_t c = 0; c < hoods.size(); ++c) {
    for (const std::size_t n : hoods[c]) {
      l.center_row.push_back(static_cast<std::uint32_t>(c));
      l.neighbor_row.push_back(static_cast<std::uint32_t>(n));
    }
    l.offsets.push_back(static_cast<std::uint32_t>(l.center_row.size()));
  }
  return l;
}

} // namespace

TEST_SUITE("nn") {

TEST_CASE("linear with identity weights and zero bias is the identity") {
  Rng rng = make_stream(1, "test");
  Tape tape;
  Matrix eye(3, 3);
  for (int i = 0; i < 3; ++i) eye.at(i, i) = 1;
  const Matrix x = random_matrix(4, 3, rng);
  const Var y = linear(tape, tape.constant(x), tape.constant(eye), tape.constant(Matrix(1, 3)));
  CHECK(tape.value(y) == x);
}

TEST_CASE("leaky relu and softmax primitives") {
  Tape tape;
  const Var y = tape.leaky_relu(tape.constant(Matrix(1, 2, {-1.0, 2.0})), kLeakySlope);
  CHECK(tape.value(y).data[0] == doctest::Approx(-0.01));
  CHECK(tape.value(y).data[1] == 2.0);
  for (const std::size_t k : {1u, 3u, 7u}) {
    const std::vector<double> logits(k, 0.37);
    for (const double p : softmax(logits)) CHECK(p == doctest::Approx(1.0 / k));
  }
  const std::vector<double> big{1000.0, 1000.0};
  CHECK(softmax(big)[0] == doctest::Approx(0.5));
}

TEST_CASE("shape mismatch names both shapes") {
  Tape tape;
  const Var a = tape.constant(Matrix(2, 3));
  const Var b = tape.constant(Matrix(2, 3));
  CHECK_THROWS_WITH_AS(tape.matmul(a, b), doctest::Contains("2x3"), ShapeError);
  CHECK_THROWS_AS(tape.add(a, tape.constant(Matrix(3, 2))), ShapeError);
}

TEST_CASE("non-finite values are rejected") {
  Tape tape;
  CHECK_THROWS_AS(tape.constant(Matrix(1, 1, std::vector<double>{NAN})), NonFiniteError);
  CHECK_THROWS_AS(tape.constant(Matrix(1, 1, std::vector<double>{INFINITY})), NonFiniteError);
}

TEST_CASE("attention of an isolated node returns its projection") {
  Rng rng = make_stream(2, "test");
  GraphAttention gat("gat", 4, rng);
  const Matrix emb = random_matrix(2, 4, rng);
  Tape tape;
  Var att;
  const Var out = graph_attention(tape, tape.constant(emb), tape.constant(gat.projection.value),
                                  tape.constant(gat.coefficient.value), tape.constant(gat.coefficient_bias.value),
                                  layout_for({{0}}), &att);
  CHECK(tape.value(att).data[0] == doctest::Approx(1.0));
  for (std::size_t j = 0; j < 4; ++j) {
    double z = 0;
    for (std::size_t k = 0; k < 4; ++k) z += emb.at(0, k) * gat.projection.value.at(k, j);
    CHECK(tape.value(out).at(0, j) == doctest::Approx(z));
  }
}

TEST_CASE("identical neighbor embeddings get uniform attention") {
  Rng rng = make_stream(3, "test");
  GraphAttention gat("gat", 5, rng);
  Matrix emb(4, 5);
  const Matrix row = random_matrix(1, 5, rng);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 5; ++c) emb.at(r, c) = row.at(0, c);
  Tape tape;
  Var att;
  const Var out = graph_attention(tape, tape.constant(emb), tape.constant(gat.projection.value),
                                  tape.constant(gat.coefficient.value), tape.constant(gat.coefficient_bias.value),
                                  layout_for({{0, 1, 2, 3}}), &att);
  for (const double w : tape.value(att).data) CHECK(w == doctest::Approx(0.25));
  std::vector<double> weights;
  const auto z = dense_attention(emb, gat.projection.value, gat.coefficient.value, 0, 0, {0}, weights);
  for (std::size_t j = 0; j < 5; ++j) CHECK(tape.value(out).at(0, j) == doctest::Approx(z[j]));
}

TEST_CASE("attention matches a dense recomputation on random neighborhoods") {
  Rng rng = make_stream(4, "test");
  for (int trial = 0; trial < 20; ++trial) {
    GraphAttention gat("gat", 6, rng);
    const Matrix emb = random_matrix(3, 6, rng);
    // 3-node path 0-1-2, self first
    const std::vector<std::vector<std::size_t>> hoods{{0, 1}, {1, 0, 2}, {2, 1}};
    Tape tape;
    Var att;
    const Var out = graph_attention(tape, tape.constant(emb), tape.constant(gat.projection.value),
                                    tape.constant(gat.coefficient.value), tape.constant(gat.coefficient_bias.value),
                                    layout_for(hoods), &att);
    std::size_t pair = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      std::vector<double> weights;
      const auto z = dense_attention(emb, gat.projection.value, gat.coefficient.value,
                                     gat.coefficient_bias.value.at(0, 0), c, hoods[c], weights);
      double sum = 0;
      for (const double w : weights) {
        CHECK(tape.value(att).data[pair++] == doctest::Approx(w).epsilon(1e-12));
        CHECK(w >= 0);
        sum += w;
      }
      CHECK(sum == doctest::Approx(1.0));
      for (std::size_t j = 0; j < 6; ++j) CHECK(tape.value(out).at(c, j) == doctest::Approx(z[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("grad check is exact on an affine model") {
  Rng rng = make_stream(5, "test");
  Parameter w("w", random_matrix(3, 2, rng));
  Parameter b("b", random_matrix(1, 2, rng));
  const Matrix x = random_matrix(4, 3, rng);
  const ScalarModel model = [&](Tape &t) {
    return t.sum(linear(t, t.constant(x), t.parameter(w), t.parameter(b)));
  };
  std::vector<Parameter *> params{&w, &b};
  const GradCheckReport r = grad_check(model, params, rng);
  CHECK(r.passed);
  CHECK(r.max_relative_error < 1e-9);
}

TEST_CASE("grad check catches a corrupted gradient") {
  Rng rng = make_stream(6, "test");
  Parameter w("w", random_matrix(3, 3, rng));
  const Matrix x = random_matrix(2, 3, rng);
  // the second use of w is frozen, so reverse mode misses half the gradient
  const ScalarModel model = [&](Tape &t) {
    const Var h = t.matmul(t.constant(x), t.parameter(w));
    return t.sum(t.matmul(h, t.frozen(w)));
  };
  std::vector<Parameter *> params{&w};
  const GradCheckReport r = grad_check(model, params, rng);
  CHECK_FALSE(r.passed);
  CHECK(r.worst_parameter == "w");
  CHECK(r.max_relative_error > 1e-2);
}

TEST_CASE("every op backward matches finite differences") {
  Rng rng = make_stream(7, "test");
  for (int trial = 0; trial < 100; ++trial) {
    Parameter table("table", random_matrix(5, 3, rng));
    Parameter w("w", random_matrix(3, 3, rng));
    Parameter b("b", random_matrix(1, 3, rng));
    Parameter w2("w2", random_matrix(6, 1, rng));
    const std::vector<double> target{0.3, -0.2, 0.1, 0.5};
    const std::vector<double> weights{1.0, 0.5, 2.0, 0.25};
    const ScalarModel model = [&](Tape &t) {
      const Var rows = t.gather_rows(t.parameter(table), {0, 2, 2, 4});
      const Var h = t.leaky_relu(linear(t, rows, t.parameter(w), t.parameter(b)), kLeakySlope);
      const Var both = t.concat_cols(h, t.add(rows, h));
      const Var s = t.matmul(both, t.parameter(w2));
      const Var soft = t.segment_softmax(s, {0, 1, 4});
      const Var scaled = t.scale_rows(h, soft);
      const Var pooled = t.segment_sum(scaled, {0, 2, 4});
      const std::vector<Var> parts{pooled, pooled};
      const Var stacked = t.concat_rows(parts);
      const Var pred = t.matmul(stacked, t.constant(Matrix(3, 1, {1.0, -1.0, 0.5})));
      return t.add(t.weighted_squared_error(pred, target, weights), t.sum(s));
    };
    std::vector<Parameter *> params{&table, &w, &b, &w2};
    const GradCheckReport r = grad_check(model, params, rng);
    REQUIRE_MESSAGE(r.passed, r.worst_parameter, " ", r.max_relative_error);
  }
}

TEST_CASE("tape forward passes are deterministic") {
  Rng rng = make_stream(8, "test");
  Parameter w("w", random_matrix(4, 4, rng));
  const Matrix x = random_matrix(3, 4, rng);
  auto run = [&] {
    Tape t;
    return t.value(t.leaky_relu(t.matmul(t.constant(x), t.parameter(w)), kLeakySlope));
  };
  CHECK(run() == run());
}

TEST_CASE("one sgd step on w^2") {
  Parameter w("w", Matrix(1, 1, 1.0));
  Tape t;
  const Var v = t.parameter(w);
  t.backward(t.sum(t.matmul(v, v)));
  Sgd sgd(0.1);
  std::vector<Parameter *> params{&w};
  sgd.step(params);
  CHECK(w.value.at(0, 0) == doctest::Approx(0.8));
  CHECK_FALSE(w.has_grad);
  CHECK_THROWS_AS(sgd.step(params), std::logic_error);
}

TEST_CASE("zero gradient leaves parameters unchanged") {
  Rng rng = make_stream(9, "test");
  Parameter w("w", random_matrix(2, 2, rng));
  const Matrix before = w.value;
  w.grad = Matrix(2, 2);
  w.has_grad = true;
  Adam adam(0.1);
  std::vector<Parameter *> params{&w};
  adam.step(params);
  CHECK(w.value == before);
  CHECK(adam.step_count() == 1);
  CHECK(adam.state().first_moment[0].rows == 2);
}

TEST_CASE("adam decreases a convex loss monotonically") {
  Rng rng = make_stream(10, "test");
  Parameter w("w", Matrix(3, 1));
  const Matrix x = random_matrix(8, 3, rng);
  std::vector<double> y(8);
  for (auto &v : y) v = uniform_unit(rng);
  const std::vector<double> ones(8, 1.0);
  Adam adam(0.01);
  std::vector<Parameter *> params{&w};
  double last = INFINITY;
  for (int step = 0; step < 20; ++step) {
    Tape t;
    const Var loss = t.weighted_squared_error(t.matmul(t.constant(x), t.parameter(w)), y, ones);
    const double value = t.value(loss).at(0, 0);
    CHECK(value < last);
    last = value;
    t.backward(loss);
    adam.step(params);
  }
}

}
