#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"

using namespace sqlova;
using sqlova::fixtures::max_grad_error;
using sqlova::fixtures::random_matrix;
using sqlova::fixtures::weighted_sum;

namespace {

constexpr double kTol = 1e-7;

std::mt19937_64& rng() {
  static std::mt19937_64 r(42);
  return r;
}

}  // namespace

TEST(Autograd, ForwardValues) {
  Graph g;
  Var a = g.constant(Matrix::from_rows({{1, 2}, {3, 4}}));
  Var b = g.constant(Matrix::from_rows({{5, 6}, {7, 8}}));
  EXPECT_EQ(ad::matmul(a, b).value(), Matrix::from_rows({{19, 22}, {43, 50}}));
  EXPECT_EQ(ad::matmul_nt(a, b).value(), Matrix::from_rows({{17, 23}, {39, 53}}));
  Var w = g.constant(Matrix::from_rows({{1, 0, 10}, {0, 1, 20}}));
  EXPECT_EQ(ad::affine(a, w).value(), Matrix::from_rows({{11, 22}, {13, 24}}));
  const Matrix s = ad::softmax_rows(g.constant(Matrix::from_rows({{0, std::log(2.0)}}))).value();
  EXPECT_NEAR(s[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(s[1], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(ad::sigmoid(g.constant(Matrix(1, 1, std::log(3.0)))).scalar(), 0.75, 1e-15);
}

TEST(Autograd, SoftmaxIsShiftInvariant) {
  Graph g;
  Matrix x = random_matrix(3, 5, rng());
  Matrix y = x;
  for (double& v : y.values()) v += 123.0;
  const Matrix a = ad::softmax_rows(g.constant(x)).value();
  const Matrix b = ad::softmax_rows(g.constant(y)).value();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Autograd, LogClampedStopsGradient) {
  Graph g;
  Var x = g.variable(Matrix::from_rows({{1e-20, 0.5}}));
  Var y = ad::log_clamped(x, 1e-12);
  EXPECT_NEAR(y.value()[0], std::log(1e-12), 1e-12);
  g.backward(weighted_sum(g, y, Matrix::from_rows({{1, 1}})));
  EXPECT_EQ((*g.grad_of(x))[0], 0.0);
  EXPECT_NEAR((*g.grad_of(x))[1], 2.0, 1e-12);
}

TEST(Autograd, ElementwiseGradients) {
  const Matrix w = random_matrix(3, 4, rng());
  auto check = [&](auto op) {
    EXPECT_LT(max_grad_error(
                  [&](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, op(v), w); },
                  {random_matrix(3, 4, rng()), random_matrix(3, 4, rng())}),
              kTol);
  };
  check([](const std::vector<Var>& v) { return ad::add(v[0], v[1]); });
  check([](const std::vector<Var>& v) { return ad::mul(v[0], v[1]); });
  check([](const std::vector<Var>& v) { return ad::scale(ad::tanh(v[0]), 1.7); });
  check([](const std::vector<Var>& v) { return ad::shift(ad::sigmoid(v[0]), 0.3); });
  check([](const std::vector<Var>& v) { return ad::gelu(v[1]); });
  check([](const std::vector<Var>& v) { return ad::softmax_rows(v[0]); });
  check([](const std::vector<Var>& v) {
    return ad::log_clamped(ad::softmax_rows(v[0]), 1e-12);
  });
  check([](const std::vector<Var>& v) {
    return ad::add_row(v[0], ad::slice_rows(v[1], 1, 1));
  });
}

TEST(Autograd, ProductGradients) {
  auto run = [&](std::size_t r, std::size_t c, auto op, std::vector<Matrix> in) {
    const Matrix w = random_matrix(r, c, rng());
    return max_grad_error(
        [&](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, op(v), w); },
        std::move(in));
  };
  EXPECT_LT(run(3, 2, [](const auto& v) { return ad::matmul(v[0], v[1]); },
                {random_matrix(3, 4, rng()), random_matrix(4, 2, rng())}),
            kTol);
  EXPECT_LT(run(3, 5, [](const auto& v) { return ad::matmul_nt(v[0], v[1]); },
                {random_matrix(3, 4, rng()), random_matrix(5, 4, rng())}),
            kTol);
  EXPECT_LT(run(3, 5, [](const auto& v) { return ad::affine(v[0], v[1]); },
                {random_matrix(3, 4, rng()), random_matrix(5, 5, rng())}),
            kTol);
  EXPECT_LT(run(2, 6, [](const auto& v) { return ad::layer_norm(v[0], v[1], 1e-12); },
                {random_matrix(2, 6, rng()), random_matrix(2, 6, rng())}),
            kTol);
}

TEST(Autograd, ShapeOpGradients) {
  auto run = [&](std::size_t r, std::size_t c, auto op, std::vector<Matrix> in) {
    const Matrix w = random_matrix(r, c, rng());
    return max_grad_error(
        [&](Graph& g, const std::vector<Var>& v) { return weighted_sum(g, op(v), w); },
        std::move(in));
  };
  EXPECT_LT(run(3, 7,
                [](const auto& v) {
                  const Var parts[] = {v[0], v[1]};
                  return ad::concat_cols(parts);
                },
                {random_matrix(3, 3, rng()), random_matrix(3, 4, rng())}),
            kTol);
  EXPECT_LT(run(5, 3,
                [](const auto& v) {
                  const Var parts[] = {v[0], v[1]};
                  return ad::concat_rows(parts);
                },
                {random_matrix(2, 3, rng()), random_matrix(3, 3, rng())}),
            kTol);
  EXPECT_LT(run(2, 2, [](const auto& v) { return ad::slice_cols(ad::slice_rows(v[0], 1, 2), 1, 2); },
                {random_matrix(4, 4, rng())}),
            kTol);
  EXPECT_LT(run(4, 3, [](const auto& v) { return ad::transpose(v[0]); },
                {random_matrix(3, 4, rng())}),
            kTol);
  EXPECT_LT(run(3, 4, [](const auto& v) { return ad::repeat_rows(v[0], 3); },
                {random_matrix(1, 4, rng())}),
            kTol);
  const int ids[] = {2, 0, 2};
  EXPECT_LT(run(3, 3, [&](const auto& v) { return ad::gather_rows(v[0], ids); },
                {random_matrix(4, 3, rng())}),
            kTol);
  EXPECT_LT(run(1, 1, [](const auto& v) { return ad::pick(ad::tanh(v[0]), 1, 2); },
                {random_matrix(2, 3, rng())}),
            kTol);
  EXPECT_LT(run(2, 3,
                [](const auto& v) {
                  const Var terms[] = {v[0], v[1], v[0]};
                  return ad::add_n(terms);
                },
                {random_matrix(2, 3, rng()), random_matrix(2, 3, rng())}),
            kTol);
}

TEST(Autograd, LstmSequenceGradients) {
  const std::size_t h = 3, len = 4;
  for (bool reverse : {false, true}) {
    const Matrix w = random_matrix(len, h, rng());
    const double err = max_grad_error(
        [&](Graph& g, const std::vector<Var>& v) {
          return weighted_sum(g, ad::lstm_sequence(v[0], v[1], v[2], v[3], reverse), w);
        },
        {random_matrix(len, 4 * h, rng()), random_matrix(4 * h, h, rng(), 0.5),
         random_matrix(1, h, rng()), random_matrix(1, h, rng())});
    EXPECT_LT(err, kTol) << "reverse=" << reverse;
  }
}

TEST(Autograd, LstmReverseMatchesFlippedForward) {
  Graph g(false);
  const std::size_t h = 2, len = 3;
  Matrix x = random_matrix(len, 4 * h, rng());
  Matrix flipped(len, 4 * h);
  for (std::size_t r = 0; r < len; ++r)
    for (std::size_t c = 0; c < 4 * h; ++c) flipped(len - 1 - r, c) = x(r, c);
  Var wh = g.constant(random_matrix(4 * h, h, rng()));
  Var z = g.constant(Matrix(1, h));
  const Matrix rev = ad::lstm_sequence(g.constant(x), wh, z, z, true).value();
  const Matrix fwd = ad::lstm_sequence(g.constant(flipped), wh, z, z, false).value();
  for (std::size_t r = 0; r < len; ++r)
    for (std::size_t c = 0; c < h; ++c) EXPECT_NEAR(rev(r, c), fwd(len - 1 - r, c), 1e-15);
}

TEST(Autograd, ParamLeavesAccumulateIntoBuffer) {
  ParamStore store;
  const ParamId id = store.add("w", Matrix::from_rows({{2, 3}}), ParamGroup::Head);
  GradBuffer buf(store);
  for (int rep = 0; rep < 2; ++rep) {
    Graph g;
    Var w = g.param(store, id);
    EXPECT_EQ(g.param(store, id).id, w.id);
    g.backward(ad::matmul_nt(w, g.constant(Matrix::from_rows({{1, 10}}))));
    g.accumulate(buf);
  }
  EXPECT_EQ(*buf.find(id), Matrix::from_rows({{2, 20}}));
}
