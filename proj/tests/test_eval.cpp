// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "ncdlab/ablation.hpp"
#include "ncdlab/eval.hpp"
#include "oracles.hpp"

using namespace ncd;

namespace {

Matrix onehot(std::size_t k, const std::vector<std::size_t>& ids) {
  Matrix m(k, ids.size());
  for (std::size_t c = 0; c < ids.size(); ++c) m(ids[c], c) = 1.0;
  return m;
}

Matrix random_counts(std::size_t n, Rng& rng) {
  Matrix m(n, n);
  for (double& v : m.data()) v = static_cast<double>(rng() % 20);
  return m;
}

}  // namespace

TEST_CASE("hungarian examples") {
  const AssignmentResult id = hungarian_match(Matrix::from_rows({{5, 0}, {0, 5}}));
  CHECK(id.permutation == std::vector<std::size_t>{0, 1});
  CHECK(id.acc == 1.0);
  const AssignmentResult swap = hungarian_match(Matrix::from_rows({{0, 5}, {5, 0}}));
  CHECK(swap.permutation == std::vector<std::size_t>{1, 0});
  CHECK(swap.acc == 1.0);

  // preds [0,0,1,2,2,2] vs hidden [0,1,1,2,2,0]
  const std::vector<std::size_t> pred{0, 0, 1, 2, 2, 2}, truth{0, 1, 1, 2, 2, 0};
  Matrix confusion(3, 3);
  for (std::size_t i = 0; i < 6; ++i) confusion(truth[i], pred[i]) += 1.0;
  const AssignmentResult r = hungarian_match(confusion);
  CHECK(r.matched == 4);
  CHECK(r.acc == doctest::Approx(4.0 / 6.0));
  CHECK(r.matched == static_cast<std::size_t>(oracle::best_trace(confusion)));
}

TEST_CASE("hungarian input validation") {
  CHECK_THROWS_AS(hungarian_match(Matrix(2, 3)), ShapeError);
  CHECK_THROWS_AS(hungarian_match(Matrix::from_rows({{1, -1}, {0, 2}})), std::invalid_argument);
  CHECK_THROWS_AS(hungarian_match(Matrix::from_rows({{1, 0.5}, {0, 2}})), std::invalid_argument);
}

TEST_CASE("hungarian equals exhaustive search") {
  Rng rng = make_rng(50, 0);
  for (std::size_t n = 2; n <= 7; ++n) {
    for (int trial = 0; trial < 200; ++trial) {
      const Matrix c = random_counts(n, rng);
      const AssignmentResult r = hungarian_match(c);
      CHECK(static_cast<double>(r.matched) == oracle::best_trace(c));
      std::vector<std::size_t> sorted = r.permutation;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t i = 0; i < n; ++i) CHECK(sorted[i] == i);
    }
  }
}

TEST_CASE("oracle predictions score perfectly under any novel relabeling") {
  const MultinoulliSpec spec(2, {0.3, 0.3, 0.4});
  const std::vector<std::size_t> lids{0, 1, 1, 0};
  const std::vector<std::size_t> hids{2, 3, 4, 4, 3, 2, 2};
  const std::vector<std::size_t> shuffled{4, 2, 3, 3, 2, 4, 4};  // 2->4, 3->2, 4->3
  const EvalReport r = evaluate_predictions(onehot(5, lids), lids, onehot(5, shuffled), hids, spec);
  CHECK(r.labeled_accuracy == 1.0);
  CHECK(r.novel_acc == 1.0);
  CHECK(r.leaked_count == 0);
}

TEST_CASE("ACC is invariant to relabeling hidden ids") {
  Rng rng = make_rng(51, 0);
  const MultinoulliSpec spec = MultinoulliSpec::uniform(2, 4);
  std::vector<std::size_t> hids(300);
  for (std::size_t& h : hids) h = 2 + rng() % 4;
  const Matrix p = oracle::random_stochastic(6, 300, rng);
  const EvalReport base = evaluate_predictions(Matrix(6, 0), {}, p, hids, spec);
  std::vector<std::size_t> perm{2, 3, 4, 5};
  while (std::next_permutation(perm.begin(), perm.end())) {
    std::vector<std::size_t> relabeled(hids.size());
    for (std::size_t i = 0; i < hids.size(); ++i) relabeled[i] = perm[hids[i] - 2];
    CHECK(evaluate_predictions(Matrix(6, 0), {}, p, relabeled, spec).novel_acc == base.novel_acc);
  }
  CHECK(base.novel_acc >= 0.0);
  CHECK(base.novel_acc <= 1.0);
}

TEST_CASE("constant predictor scores the largest class share") {
  const MultinoulliSpec spec(5, {0.5, 0.125, 0.125, 0.125, 0.125});
  std::vector<std::size_t> hids;
  const std::size_t counts[] = {400, 100, 100, 100, 100};
  for (std::size_t j = 0; j < 5; ++j) hids.insert(hids.end(), counts[j], 5 + j);
  const EvalReport r = evaluate_predictions(Matrix(10, 0), {}, onehot(10, std::vector<std::size_t>(800, 5)), hids, spec);
  CHECK(r.novel_acc == doctest::Approx(0.5));
}

TEST_CASE("uniform random predictor scores near 1/U") {
  Rng rng = make_rng(52, 0);
  const MultinoulliSpec spec = MultinoulliSpec::uniform(3, 5);
  std::vector<std::size_t> hids(20000), preds(20000);
  for (std::size_t i = 0; i < hids.size(); ++i) {
    hids[i] = 3 + i % 5;
    preds[i] = 3 + rng() % 5;
  }
  const EvalReport r = evaluate_predictions(Matrix(8, 0), {}, onehot(8, preds), hids, spec);
  CHECK(std::abs(r.novel_acc - 0.2) < 0.01);
}

TEST_CASE("leaked instances count against ACC") {
  const MultinoulliSpec spec(2, {0.5, 0.5});
  const std::vector<std::size_t> hids{2, 2, 3, 3};
  const std::vector<std::size_t> preds{2, 0, 3, 3};
  const EvalReport r = evaluate_predictions(Matrix(4, 0), {}, onehot(4, preds), hids, spec);
  CHECK(r.leaked_count == 1);
  CHECK(r.leakage_rate == 0.25);
  CHECK(r.novel_acc == 0.75);
  CHECK(r.confusion(2, 0) == 1.0);
}

TEST_CASE("confusion rows sum to the class counts") {
  Rng rng = make_rng(53, 0);
  const MultinoulliSpec spec(2, {0.2, 0.8});
  std::vector<std::size_t> lids(50), hids(70);
  std::vector<double> count(4, 0.0);
  for (std::size_t& l : lids) count[l = rng() % 2] += 1;
  for (std::size_t& h : hids) count[h = 2 + rng() % 2] += 1;
  const EvalReport r = evaluate_predictions(oracle::random_stochastic(4, 50, rng), lids,
                                            oracle::random_stochastic(4, 70, rng), hids, spec);
  for (std::size_t i = 0; i < 4; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < 4; ++j) row += r.confusion(i, j);
    CHECK(row == count[i]);
  }
  CHECK(oracle::tv(r.novel_mean, target_mean(spec)) == doctest::Approx(r.tv_to_prior));
}

TEST_CASE("empty split is an error") {
  CHECK_THROWS_AS(evaluate_predictions(Matrix(4, 0), {}, Matrix(4, 0), {}, MultinoulliSpec::uniform(2, 2)),
                  std::invalid_argument);
}

TEST_CASE("argmax ties go to the lowest index") {
  CHECK(argmax_column(Matrix::from_rows({{0.4}, {0.4}, {0.2}}), 0) == 0);
  CHECK(argmax_column(Matrix::from_rows({{0.2}, {0.4}, {0.4}}), 0) == 1);
}

TEST_CASE("report writers") {
  const MultinoulliSpec spec(1, {0.5, 0.5});
  const EvalReport r = evaluate_predictions(onehot(3, {0}), {0}, onehot(3, {1, 2}), {1, 2}, spec);
  std::ostringstream c;
  write_confusion_csv(r, c);
  CHECK(c.str() == "class,n0,n1,n2\n0,1,0,0\n1,0,1,0\n2,0,0,1\n");
  std::ostringstream e;
  write_eval_csv(r, e);
  CHECK(e.str().rfind("labeled_accuracy,", 0) == 0);
  std::ostringstream t;
  write_eval_text(r, t);
  CHECK(t.str().find("1.0000") != std::string::npos);
}

TEST_CASE("trained embeddings cluster by class") {
  ExperimentConfig c;
  c.data.labeled_classes = 2;
  c.data.novel_prior = {0.5, 0.5};
  c.data.n_labeled = 400;
  c.data.n_unlabeled = 400;
  c.data.n_test_labeled = 100;
  c.data.n_test_unlabeled = 100;
  c.data.separation = 10.0;
  c.model.hidden = {32};
  c.optim.epochs = 30;
  c.optim.batch_unlabeled = 40;
  const ExperimentOutcome run = run_experiment(c);
  std::ostringstream out;
  dump_embeddings(run.result.model, run.test_data, out);

  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "split,true_class,pred_neuron,z0,z1,z2,z3,z4,z5,z6,z7,z8,z9,z10,z11,z12,z13,z14,z15");
  std::vector<std::size_t> cls;
  std::vector<std::vector<double>> z;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string f;
    std::getline(ss, f, ',');
    std::getline(ss, f, ',');
    cls.push_back(std::stoul(f));
    std::getline(ss, f, ',');
    z.emplace_back();
    while (std::getline(ss, f, ',')) z.back().push_back(std::stod(f));
    CHECK(z.back().size() == 16);
  }
  CHECK(cls.size() == 200);
  double intra = 0, inter = 0;
  std::size_t n_intra = 0, n_inter = 0;
  for (std::size_t a = 0; a < z.size(); a += 3) {
    for (std::size_t b = a + 1; b < z.size(); b += 3) {
      double d = 0;
      for (std::size_t k = 0; k < 16; ++k) d += (z[a][k] - z[b][k]) * (z[a][k] - z[b][k]);
      d = std::sqrt(d);
      if (cls[a] == cls[b]) intra += d, ++n_intra;
      else inter += d, ++n_inter;
    }
  }
  CHECK(intra / double(n_intra) < inter / double(n_inter));
}

TEST_CASE("mean and sample sd") {
  const MeanSd m = mean_sd({1.0, 2.0, 3.0});
  CHECK(m.mean == 2.0);
  CHECK(m.sd == 1.0);
  CHECK(mean_sd({4.0}).sd == 0.0);
}
