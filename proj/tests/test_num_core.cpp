// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <string>

#include "doctest.h"
#include "ncdlab/autodiff.hpp"
#include "ncdlab/gradcheck.hpp"
#include "ncdlab/matrix.hpp"
#include "oracles.hpp"

using namespace ncd;

namespace {

/// Scalarizes a matrix-valued op with fixed random weights so every output
/// entry contributes a distinct coefficient.
ScalarGraphFn weighted(std::function<ad::Var(ad::Var)> op, const Matrix& out_weights) {
  return [op, out_weights](ad::Tape& tape, ad::Var x) {
    return ad::sum(ad::hadamard(op(x), tape.constant(out_weights)));
  };
}

double check(std::function<ad::Var(ad::Var)> op, const Matrix& at, std::size_t out_rows, std::size_t out_cols,
             Rng& rng) {
  return grad_check(weighted(std::move(op), oracle::random_matrix(out_rows, out_cols, rng)), at).max_relative_error;
}

}  // namespace

TEST_CASE("matrix basics") {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  CHECK(matmul(Matrix::identity(2), a) == a);
  CHECK(matmul(Matrix::from_rows({{1, 2}}), Matrix::from_rows({{3}, {4}}))[0] == 11.0);
  CHECK(transpose(a) == Matrix::from_rows({{1, 3}, {2, 4}}));
  CHECK(frobenius_norm(Matrix::from_rows({{3, 4}, {0, 0}})) == 5.0);
  CHECK(frobenius_norm(Matrix(3, 3)) == 0.0);
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST_CASE("matmul shape error names both shapes") {
  try {
    (void)matmul(Matrix(2, 3), Matrix(4, 5));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("4x5") != std::string::npos);
  }
  ad::Tape tape;
  CHECK_THROWS_AS(ad::matmul(tape.leaf(Matrix(2, 3)), tape.leaf(Matrix(2, 3))), ShapeError);
}

TEST_CASE("softmax examples") {
  ad::Tape tape;
  const Matrix s = ad::softmax_columns(tape.leaf(Matrix(3, 1))).value();
  for (std::size_t r = 0; r < 3; ++r) CHECK(s[r] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const Matrix big = ad::softmax_columns(tape.leaf(Matrix::from_rows({{1000}, {0}, {0}}))).value();
  CHECK(big.all_finite());
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(big[1] < 1e-300);
}

TEST_CASE("softmax columns sum to one") {
  Rng rng = make_rng(11, 0);
  for (int trial = 0; trial < 200; ++trial) {
    ad::Tape tape;
    const Matrix z = oracle::random_matrix(7, 5, rng, -50.0, 50.0);
    const Matrix s = ad::softmax_columns(tape.leaf(z)).value();
    for (std::size_t c = 0; c < s.cols(); ++c) {
      double total = 0.0;
      for (std::size_t r = 0; r < s.rows(); ++r) {
        CHECK(s(r, c) >= 0.0);
        total += s(r, c);
      }
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("softmax gradient matches differences") {
  Rng rng = make_rng(12, 0);
  const Matrix z = oracle::random_matrix(5, 3, rng, -2.0, 2.0);
  CHECK(check([](ad::Var x) { return ad::softmax_columns(x); }, z, 5, 3, rng) < 1e-6);
}

TEST_CASE("matmul gradient matches differences") {
  Rng rng = make_rng(13, 0);
  const Matrix b = oracle::random_matrix(4, 2, rng);
  const Matrix a = oracle::random_matrix(3, 4, rng);
  const auto f = [b](ad::Tape& tape, ad::Var x) { return ad::sum(ad::matmul(x, tape.constant(b))); };
  const GradCheckReport r = grad_check(f, a);
  CHECK(r.max_relative_error < 1e-6);
  // d sum(AB) / dA = 1 B^T: every row equals the row sums of B.
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 4; ++k) CHECK(r.analytic(i, k) == doctest::Approx(b(k, 0) + b(k, 1)));

  const auto g = [a](ad::Tape& tape, ad::Var x) { return ad::sum(ad::matmul(tape.constant(a), x)); };
  CHECK(grad_check(g, b).max_relative_error < 1e-6);
}

TEST_CASE("every primitive gradient matches differences on 4x6 inputs") {
  Rng rng = make_rng(14, 0);
  const Matrix x = oracle::random_matrix(4, 6, rng);
  const Matrix positive = oracle::random_matrix(4, 6, rng, 0.1, 2.0);
  const Matrix other = oracle::random_matrix(4, 6, rng);
  const double tol = 1e-5;

  SUBCASE("log") { CHECK(check([](ad::Var v) { return ad::log(v); }, positive, 4, 6, rng) < tol); }
  SUBCASE("relu") {
    Matrix away = x;
    for (double& v : away.data()) v += v >= 0 ? 0.05 : -0.05;
    CHECK(check([](ad::Var v) { return ad::relu(v); }, away, 4, 6, rng) < tol);
  }
  SUBCASE("add and subtract") {
    CHECK(check([&](ad::Var v) { return ad::add(v, v.tape().constant(other)); }, x, 4, 6, rng) < tol);
    CHECK(check([&](ad::Var v) { return ad::subtract(v.tape().constant(other), v); }, x, 4, 6, rng) < tol);
  }
  SUBCASE("scale and add_constant") {
    CHECK(check([](ad::Var v) { return ad::scale(v, -2.5); }, x, 4, 6, rng) < tol);
    CHECK(check([](ad::Var v) { return ad::add_constant(v, 3.0); }, x, 4, 6, rng) < tol);
  }
  SUBCASE("hadamard") {
    CHECK(check([&](ad::Var v) { return ad::hadamard(v, v.tape().constant(other)); }, x, 4, 6, rng) < tol);
    CHECK(check([](ad::Var v) { return ad::hadamard(v, v); }, x, 4, 6, rng) < tol);
  }
  SUBCASE("sum") { CHECK(check([](ad::Var v) { return ad::sum(v); }, x, 1, 1, rng) < tol); }
  SUBCASE("mean_columns") { CHECK(check([](ad::Var v) { return ad::mean_columns(v); }, x, 4, 1, rng) < tol); }
  SUBCASE("trace") {
    const Matrix sq = oracle::random_matrix(4, 4, rng);
    CHECK(check([](ad::Var v) { return ad::trace(v); }, sq, 1, 1, rng) < tol);
  }
  SUBCASE("frobenius_norm") {
    CHECK(check([](ad::Var v) { return ad::frobenius_norm(v); }, x, 1, 1, rng) < tol);
    CHECK(check([](ad::Var v) { return ad::frobenius_norm(v, 1e-8); }, x, 1, 1, rng) < tol);
  }
  SUBCASE("transpose") { CHECK(check([](ad::Var v) { return ad::transpose(v); }, x, 6, 4, rng) < tol); }
  SUBCASE("broadcast_columns") {
    const Matrix col = oracle::random_matrix(4, 1, rng);
    CHECK(check([](ad::Var v) { return ad::broadcast_columns(v, 6); }, col, 4, 6, rng) < tol);
  }
  SUBCASE("concat and slice") {
    CHECK(check([&](ad::Var v) { return ad::concat_columns(v, v.tape().constant(other)); }, x, 4, 12, rng) < tol);
    CHECK(check([](ad::Var v) { return ad::slice_columns(v, 2, 3); }, x, 4, 3, rng) < tol);
  }
  SUBCASE("softmax") { CHECK(check([](ad::Var v) { return ad::softmax_columns(v); }, x, 4, 6, rng) < tol); }
}

TEST_CASE("log clamps instead of producing NaN") {
  ad::Tape tape;
  const ad::Var x = tape.leaf(Matrix::from_rows({{0.0, -1.0, 1.0}}));
  const ad::Var y = ad::log(x);
  CHECK(y.value().all_finite());
  CHECK(y.value()[0] == doctest::Approx(std::log(ad::kLogClamp)));
  tape.backward(ad::sum(y));
  const Matrix g = tape.gradient(x);
  CHECK(g.all_finite());
  CHECK(g[0] == 0.0);
  CHECK(g[2] == 1.0);
}

TEST_CASE("frobenius norm at zero has zero gradient") {
  ad::Tape tape;
  const ad::Var x = tape.leaf(Matrix(2, 2));
  const ad::Var n = ad::frobenius_norm(x);
  CHECK(n.scalar() == 0.0);
  tape.backward(n);
  CHECK(tape.gradient(x) == Matrix(2, 2));
}

TEST_CASE("unused leaf gets an exactly zero gradient") {
  ad::Tape tape;
  const ad::Var used = tape.leaf(Matrix(2, 2, 1.5));
  const ad::Var unused = tape.leaf(Matrix(3, 1, 7.0));
  const ad::Var loss = ad::sum(ad::hadamard(used, used));
  tape.backward(loss);
  CHECK(tape.gradient(unused) == Matrix(3, 1));
  CHECK(tape.gradient(used) == Matrix(2, 2, 3.0));
}

TEST_CASE("backward visits each reachable node once") {
  ad::Tape tape;
  const ad::Var x = tape.leaf(Matrix(2, 2, 1.0));
  const ad::Var y = ad::scale(x, 2.0);
  const ad::Var z = ad::add(y, y);  // y reached through two edges
  const ad::Var loss = ad::sum(z);
  (void)tape.leaf(Matrix(1, 1));  // after the loss: never visited
  CHECK(tape.backward(loss) == 3);
  CHECK(tape.gradient(x) == Matrix(2, 2, 4.0));
  CHECK_THROWS_AS(tape.backward(z), ShapeError);
}

TEST_CASE("gradients are bit-identical across runs") {
  Rng rng = make_rng(15, 0);
  const Matrix z = oracle::random_matrix(5, 8, rng);
  auto run = [&] {
    ad::Tape tape;
    const ad::Var x = tape.leaf(z);
    const ad::Var p = ad::softmax_columns(x);
    tape.backward(ad::frobenius_norm(ad::hadamard(p, ad::log(p))));
    return tape.gradient(x);
  };
  CHECK(run() == run());
}

TEST_CASE("grad_check examples") {
  Rng rng = make_rng(16, 0);
  const Matrix a = oracle::random_matrix(3, 4, rng);
  const GradCheckReport s = grad_check([](ad::Tape&, ad::Var x) { return ad::sum(x); }, a);
  CHECK(s.analytic == Matrix(3, 4, 1.0));
  CHECK(s.max_relative_error < 1e-9);

  const Matrix eye = Matrix::identity(3);
  const GradCheckReport n = grad_check([](ad::Tape&, ad::Var x) { return ad::frobenius_norm(x); }, eye);
  CHECK(n.max_relative_error < 1e-7);
  const Matrix closed = eye * (1.0 / std::sqrt(3.0));
  CHECK(max_abs(n.analytic - closed) < 1e-15);
}

TEST_CASE("grad_check reports the non-finite entry") {
  // 1 / x through a custom op; the lower probe of entry 1 lands on zero.
  const Matrix at = Matrix::from_rows({{1.0, kGradCheckStep, 2.0}});
  const auto f = [](ad::Tape& tape, ad::Var x) {
    Matrix v = x.value();
    for (double& e : v.data()) e = 1.0 / e;
    return ad::sum(tape.record(v, {x.id()}, [](const Matrix&, const Matrix&, auto, auto) {}));
  };
  try {
    (void)grad_check(f, at);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("entry 1") != std::string::npos);
  }
}
