// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ncdlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "ncdlab/csv.hpp"

namespace ncd {

AssignmentResult hungarian_match(const Matrix& confusion, std::size_t total) {
  if (confusion.rows() != confusion.cols()) {
    throw ShapeError("hungarian_match: confusion must be square, got " + shape_string(confusion));
  }
  double peak = 0.0;
  double sum_all = 0.0;
  for (double v : confusion.data()) {
    if (v < 0.0 || v != std::floor(v)) {
      throw std::invalid_argument("hungarian_match: entries must be non-negative integers");
    }
    peak = std::max(peak, v);
    sum_all += v;
  }

  // Rows are true classes, columns predicted neurons; minimize peak - count.
  // Potentials formulation, 1-based with a sentinel column 0.
  const std::size_t n = confusion.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> row_of(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    row_of[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = row_of[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = (peak - confusion(i0 - 1, j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of[j0] = row_of[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  AssignmentResult result;
  result.permutation.resize(n);
  double matched = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    result.permutation[j - 1] = row_of[j] - 1;
    matched += confusion(row_of[j] - 1, j - 1);
  }
  result.matched = static_cast<std::size_t>(matched);
  result.total = total == 0 ? static_cast<std::size_t>(sum_all) : total;
  result.acc = result.total == 0 ? 0.0 : matched / static_cast<double>(result.total);
  return result;
}

std::size_t argmax_column(const Matrix& probabilities, std::size_t c) {
  std::size_t best = 0;
  for (std::size_t r = 1; r < probabilities.rows(); ++r) {
    if (probabilities(r, c) > probabilities(best, c)) best = r;
  }
  return best;
}

EvalReport evaluate_predictions(const Matrix& labeled_probabilities, const std::vector<std::size_t>& labeled_ids,
                                const Matrix& novel_probabilities, const std::vector<std::size_t>& hidden_ids,
                                const MultinoulliSpec& spec) {
  if (labeled_ids.empty() && hidden_ids.empty()) throw std::invalid_argument("evaluate: empty split");
  if (labeled_probabilities.cols() != labeled_ids.size() || novel_probabilities.cols() != hidden_ids.size()) {
    throw ShapeError("evaluate: prediction columns and id counts differ");
  }
  const std::size_t K = spec.class_count();
  const std::size_t L = spec.labeled_count();
  const std::size_t U = spec.novel_count();

  EvalReport report;
  report.confusion = Matrix(K, K);

  std::size_t correct = 0;
  for (std::size_t c = 0; c < labeled_ids.size(); ++c) {
    const std::size_t pred = argmax_column(labeled_probabilities, c);
    report.confusion(labeled_ids[c], pred) += 1.0;
    if (pred == labeled_ids[c]) ++correct;
  }
  report.labeled_count = labeled_ids.size();
  report.labeled_accuracy =
      labeled_ids.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(labeled_ids.size());

  Matrix novel_confusion(U, U);
  for (std::size_t c = 0; c < hidden_ids.size(); ++c) {
    const std::size_t pred = argmax_column(novel_probabilities, c);
    report.confusion(hidden_ids[c], pred) += 1.0;
    if (pred < L) {
      ++report.leaked_count;
    } else {
      novel_confusion(hidden_ids[c] - L, pred - L) += 1.0;
    }
  }
  report.novel_count = hidden_ids.size();
  if (!hidden_ids.empty()) {
    report.assignment = hungarian_match(novel_confusion, hidden_ids.size());
    report.novel_acc = report.assignment.acc;
    report.leakage_rate = static_cast<double>(report.leaked_count) / static_cast<double>(hidden_ids.size());
    report.novel_mean = empirical_mean(novel_probabilities);
    const std::vector<double> target = target_mean(spec);
    report.tv_to_prior = total_variation(report.novel_mean, target);
    for (std::size_t j = 0; j < K; ++j) {
      if (target[j] > 0.0) {
        report.kl_to_prior += target[j] * (std::log(target[j]) - std::log(std::max(report.novel_mean[j], 1e-12)));
      }
    }
  }
  return report;
}

EvalReport evaluate(const MlpModel& model, const SyntheticDataset& test, const MultinoulliSpec& spec) {
  const Matrix lp = test.labeled_size() ? predict(model, test.labeled_features()).probabilities
                                        : Matrix(spec.class_count(), 0);
  const Matrix up = test.unlabeled_size() ? predict(model, test.unlabeled_features()).probabilities
                                          : Matrix(spec.class_count(), 0);
  return evaluate_predictions(lp, test.labeled_ids(), up, test.hidden_novel_ids(), spec);
}

void write_eval_csv(const EvalReport& r, std::ostream& out) {
  const auto f = csv::format_real;
  out << "labeled_accuracy,labeled_count,novel_acc,novel_count,leaked_count,leakage_rate,kl_to_prior,tv_to_prior\n"
      << f(r.labeled_accuracy) << ',' << r.labeled_count << ',' << f(r.novel_acc) << ',' << r.novel_count << ','
      << r.leaked_count << ',' << f(r.leakage_rate) << ',' << f(r.kl_to_prior) << ',' << f(r.tv_to_prior) << '\n';
}

void write_eval_text(const EvalReport& r, std::ostream& out) {
  char line[160];
  std::snprintf(line, sizeof line, "labeled top-1 accuracy : %.4f  (%zu instances)\n", r.labeled_accuracy,
                r.labeled_count);
  out << line;
  std::snprintf(line, sizeof line, "novel clustering ACC   : %.4f  (%zu instances)\n", r.novel_acc, r.novel_count);
  out << line;
  std::snprintf(line, sizeof line, "leakage into labeled   : %.4f  (%zu instances)\n", r.leakage_rate,
                r.leaked_count);
  out << line;
  std::snprintf(line, sizeof line, "novel mean KL / TV     : %.4f / %.4f\n", r.kl_to_prior, r.tv_to_prior);
  out << line;
  out << "novel mean             :";
  for (double m : r.novel_mean) {
    std::snprintf(line, sizeof line, " %.4f", m);
    out << line;
  }
  out << "\nmatching (neuron -> class):";
  for (std::size_t p = 0; p < r.assignment.permutation.size(); ++p) {
    out << ' ' << p << "->" << r.assignment.permutation[p];
  }
  out << '\n';
}

void write_confusion_csv(const EvalReport& r, std::ostream& out) {
  out << "class";
  for (std::size_t j = 0; j < r.confusion.cols(); ++j) out << ",n" << j;
  out << '\n';
  for (std::size_t i = 0; i < r.confusion.rows(); ++i) {
    out << i;
    for (std::size_t j = 0; j < r.confusion.cols(); ++j) out << ',' << static_cast<long long>(r.confusion(i, j));
    out << '\n';
  }
}

void dump_embeddings(const MlpModel& model, const SyntheticDataset& data, std::ostream& out) {
  out << "split,true_class,pred_neuron";
  for (std::size_t i = 0; i < model.shape.embedding_dim; ++i) out << ",z" << i;
  out << '\n';
  auto rows = [&](const char* split, const Matrix& x, const std::vector<std::size_t>& ids) {
    if (ids.empty()) return;
    const Prediction p = predict(model, x);
    for (std::size_t c = 0; c < ids.size(); ++c) {
      out << split << ',' << ids[c] << ',' << argmax_column(p.probabilities, c);
      for (std::size_t i = 0; i < p.embedding.rows(); ++i) out << ',' << csv::format_real(p.embedding(i, c));
      out << '\n';
    }
  };
  rows("labeled", data.labeled_features(), data.labeled_ids());
  rows("unlabeled", data.unlabeled_features(), data.hidden_novel_ids());
}

MeanSd mean_sd(const std::vector<double>& values) {
  MeanSd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double sq = 0.0;
  for (double v : values) sq += (v - out.mean) * (v - out.mean);
  out.sd = std::sqrt(sq / static_cast<double>(values.size() - 1));
  return out;
}

}  // namespace ncd
