// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "ncdlab/matrix.hpp"
#include "ncdlab/model.hpp"
#include "ncdlab/multinoulli.hpp"
#include "ncdlab/synthgen.hpp"

namespace ncd {

struct AssignmentResult {
  /// permutation[p] = true novel class (local index) matched to predicted
  /// novel neuron p (local index).
  std::vector<std::size_t> permutation;
  std::size_t matched = 0;
  std::size_t total = 0;
  double acc = 0.0;
};

/// Maximum-trace matching of a U x U count matrix (rows: true class,
/// columns: predicted neuron) with the O(U^3) Hungarian method.
/// `total` is the ACC denominator; 0 means the sum of the matrix.
/// Throws ShapeError for non-square input, std::invalid_argument for
/// negative or fractional counts.
AssignmentResult hungarian_match(const Matrix& confusion, std::size_t total = 0);

/// Index of the largest entry of column c; ties go to the lowest index.
std::size_t argmax_column(const Matrix& probabilities, std::size_t c);

struct EvalReport {
  double labeled_accuracy = 0.0;
  std::size_t labeled_count = 0;
  double novel_acc = 0.0;
  std::size_t novel_count = 0;
  /// Novel instances whose argmax landed on a labeled neuron. They count as
  /// errors in novel_acc.
  std::size_t leaked_count = 0;
  double leakage_rate = 0.0;
  /// K x K, rows: true class, columns: argmax neuron.
  Matrix confusion;
  AssignmentResult assignment;
  /// Empirical mean of the novel-instance predictions (length K).
  std::vector<double> novel_mean;
  double kl_to_prior = 0.0;
  double tv_to_prior = 0.0;
};

/// Scores precomputed probability matrices. Throws std::invalid_argument if
/// both splits are empty.
EvalReport evaluate_predictions(const Matrix& labeled_probabilities, const std::vector<std::size_t>& labeled_ids,
                                const Matrix& novel_probabilities, const std::vector<std::size_t>& hidden_ids,
                                const MultinoulliSpec& spec);

EvalReport evaluate(const MlpModel& model, const SyntheticDataset& test, const MultinoulliSpec& spec);

void write_eval_csv(const EvalReport& report, std::ostream& out);
void write_eval_text(const EvalReport& report, std::ostream& out);
/// Header `class,n0..n{K-1}`, one row per true class.
void write_confusion_csv(const EvalReport& report, std::ostream& out);

/// Rows `split,true_class,pred_neuron,z0..z{e-1}`.
void dump_embeddings(const MlpModel& model, const SyntheticDataset& data, std::ostream& out);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for fewer than two values
};

MeanSd mean_sd(const std::vector<double>& values);

}  // namespace ncd
