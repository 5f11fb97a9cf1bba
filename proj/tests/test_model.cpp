// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "ncdlab/gradcheck.hpp"
#include "ncdlab/losses.hpp"
#include "ncdlab/model.hpp"
#include "oracles.hpp"

using namespace ncd;

namespace {

const MlpShape kShape{6, {12, 8}, 5, 4};

ad::Var half_square_norm(ad::Tape&, const ParameterBinding& binding) {
  ad::Var total = ad::scale(ad::sum(ad::hadamard(binding.params[0], binding.params[0])), 0.5);
  for (std::size_t i = 1; i < binding.params.size(); ++i) {
    total = ad::add(total, ad::scale(ad::sum(ad::hadamard(binding.params[i], binding.params[i])), 0.5));
  }
  return total;
}

void check_column_stochastic(const Matrix& p) {
  for (std::size_t c = 0; c < p.cols(); ++c) {
    double total = 0.0;
    for (std::size_t r = 0; r < p.rows(); ++r) total += p(r, c);
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

}  // namespace

TEST_CASE("init is deterministic and Glorot-bounded") {
  const MlpModel a = init_model(kShape, 3);
  CHECK(a == init_model(kShape, 3));
  CHECK(!(a == init_model(kShape, 4)));
  REQUIRE(a.layers.size() == 4);
  for (const DenseLayer& l : a.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.weight.rows() + l.weight.cols()));
    CHECK(max_abs(l.weight) <= limit);
    CHECK(l.bias == Matrix(l.weight.rows(), 1));
  }
  CHECK(a.parameter_count() == 12 * 6 + 12 + 8 * 12 + 8 + 5 * 8 + 5 + 4 * 5 + 4);
}

TEST_CASE("forward output") {
  MlpModel m = init_model(kShape, 5);
  Rng rng = make_rng(5, 0);
  const Matrix x = oracle::random_matrix(6, 32, rng, -3, 3);

  SUBCASE("column-stochastic") { check_column_stochastic(predict(m, x).probabilities); }
  SUBCASE("zero head gives uniform columns") {
    m.layers.back().weight = Matrix(4, 5);
    const Matrix p = predict(m, x).probabilities;
    for (double v : p.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("columns are independent of the batch") {
    const Prediction full = predict(m, x);
    const Prediction one = predict(m, select_columns(x, std::vector<std::size_t>{0}));
    for (std::size_t r = 0; r < 4; ++r) CHECK(one.probabilities(r, 0) == full.probabilities(r, 0));
    for (std::size_t r = 0; r < 5; ++r) CHECK(one.embedding(r, 0) == full.embedding(r, 0));
  }
  SUBCASE("embedding shape") { CHECK(predict(m, x).embedding.rows() == 5); }
  SUBCASE("wrong input height") { CHECK_THROWS_AS(predict(m, Matrix(5, 3)), ShapeError); }
}

TEST_CASE("fresh model is not collapsed") {
  const MlpShape shape{8, {32}, 16, 6};
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const MlpModel m = init_model(shape, seed);
    Rng rng = make_rng(seed, 99);
    Matrix x(8, 256);
    for (double& v : x.data()) v = standard_normal(rng);
    const Matrix p = predict(m, x).probabilities;
    CHECK(oracle::mean_entropy(p) > 0.9 * std::log(6.0));
  }
}

TEST_CASE("gradient through forward matches differences") {
  const MlpModel m = init_model(kShape, 7);
  Rng rng = make_rng(7, 0);
  const Matrix x = oracle::random_matrix(6, 10, rng, -2, 2);
  const MultinoulliSpec spec = MultinoulliSpec::uniform(1, 3);
  // Perturb each parameter block in turn through a rebuilt model.
  for (std::size_t block = 0; block < 2 * m.layers.size(); ++block) {
    const Matrix at = block % 2 ? m.layers[block / 2].bias : m.layers[block / 2].weight;
    const auto f = [&](ad::Tape& tape, ad::Var probe) {
      ParameterBinding binding = bind_parameters(m, tape);
      binding.params[block] = probe;
      const ForwardResult r = forward(m, binding, tape.constant(x));
      return ad::add(loss_entropy(r.probabilities), loss_covariance(r.probabilities, spec));
    };
    CHECK(grad_check(f, at).max_relative_error < 1e-4);
  }
}

TEST_CASE("sgd_step") {
  const MlpModel start = init_model(kShape, 8);

  SUBCASE("lr = 0 leaves parameters unchanged") {
    MlpModel m = start;
    ad::Tape tape;
    const ParameterBinding b = bind_parameters(m, tape);
    tape.backward(half_square_norm(tape, b));
    sgd_step(m, collect_gradients(tape, b), 0.0);
    CHECK(m == start);
  }
  SUBCASE("half squared norm with lr 0.1 scales by 0.9") {
    MlpModel m = start;
    ad::Tape tape;
    const ParameterBinding b = bind_parameters(m, tape);
    tape.backward(half_square_norm(tape, b));
    sgd_step(m, collect_gradients(tape, b), 0.1);
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      CHECK(max_abs(m.layers[l].weight - start.layers[l].weight * 0.9) <= 1e-15);
    }
  }
  SUBCASE("non-finite gradient is rejected without touching the model") {
    MlpModel m = start;
    ad::Tape tape;
    const ParameterBinding b = bind_parameters(m, tape);
    tape.backward(half_square_norm(tape, b));
    std::vector<Matrix> g = collect_gradients(tape, b);
    g.back()[0] = std::nan("");
    CHECK_THROWS_AS(sgd_step(m, g, 0.1), NumericalError);
    CHECK(m == start);
  }
  SUBCASE("shape mismatch") {
    MlpModel m = start;
    CHECK_THROWS_AS(sgd_step(m, {Matrix(1, 1)}, 0.1), ShapeError);
  }
}

TEST_CASE("cross-entropy decreases over 100 steps on a fixed batch") {
  MlpModel m = init_model(kShape, 9);
  Rng rng = make_rng(9, 0);
  Matrix x(6, 40);
  Matrix t(4, 40);
  for (std::size_t c = 0; c < 40; ++c) {
    const std::size_t k = c % 4;
    t(k, c) = 1.0;
    for (std::size_t r = 0; r < 6; ++r) x(r, c) = (r == k ? 4.0 : 0.0) + 0.3 * standard_normal(rng);
  }
  auto step = [&] {
    ad::Tape tape;
    const ParameterBinding b = bind_parameters(m, tape);
    const ad::Var loss = loss_ce(forward(m, b, tape.constant(x)).probabilities, t);
    tape.backward(loss);
    sgd_step(m, collect_gradients(tape, b), 0.1);
    return loss.scalar();
  };
  const double first = step();
  double last = first;
  for (int i = 0; i < 99; ++i) last = step();
  CHECK(last < 0.5 * first);
}

TEST_CASE("checkpoint round trip is exact") {
  const MlpModel m = init_model(MlpShape{5, {7, 3}, 4, 6}, 10);
  std::stringstream ss;
  save_checkpoint(m, ss);
  const std::string text = ss.str();
  const MlpModel back = load_checkpoint(ss);
  CHECK(back == m);
  std::stringstream again;
  save_checkpoint(back, again);
  CHECK(again.str() == text);

  std::stringstream truncated(text.substr(0, text.size() / 2));
  CHECK_THROWS(load_checkpoint(truncated));
  std::stringstream garbage("not a checkpoint\n");
  CHECK_THROWS(load_checkpoint(garbage));
}
