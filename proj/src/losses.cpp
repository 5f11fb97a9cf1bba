// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ncdlab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ncdlab/csv.hpp"

namespace ncd {

LossWeights weights_at_epoch(const LossWeights& base, std::size_t epoch) {
  if (base.mode == ScheduleMode::fixed) return base;
  const double n = static_cast<double>(epoch);
  LossWeights w = base;
  w.kl = 0.2 + 0.5 * n;
  w.var = w.kl;
  w.ce = std::max(0.0, 1.0 - 0.01 * n) + 0.5;
  w.entropy = 1.0;
  return w;
}

ad::Var loss_ce(ad::Var probabilities, const Matrix& targets) {
  if (!probabilities.value().same_shape(targets)) {
    throw ShapeError("loss_ce: predictions " + shape_string(probabilities.value()) + " vs targets " +
                     shape_string(targets));
  }
  for (std::size_t c = 0; c < targets.cols(); ++c) {
    double total = 0.0;
    for (std::size_t r = 0; r < targets.rows(); ++r) {
      const double t = targets(r, c);
      if (t != 0.0 && t != 1.0) throw std::invalid_argument("loss_ce: targets must be one-hot");
      total += t;
    }
    if (total != 1.0) throw std::invalid_argument("loss_ce: target column is not one-hot");
  }
  ad::Tape& tape = probabilities.tape();
  ad::Var picked = ad::sum(ad::hadamard(tape.constant(targets), ad::log(probabilities)));
  return ad::scale(picked, -1.0 / static_cast<double>(targets.cols()));
}

ad::Var loss_entropy(ad::Var probabilities) {
  const double B = static_cast<double>(probabilities.cols());
  ad::Var plogp = ad::sum(ad::hadamard(probabilities, ad::log(probabilities)));
  return ad::scale(plogp, -1.0 / B);
}

ad::Var loss_consistency(ad::Var probabilities, ad::Var other_view) {
  if (!probabilities.value().same_shape(other_view.value())) {
    throw ShapeError("loss_consistency: views are " + shape_string(probabilities.value()) + " and " +
                     shape_string(other_view.value()));
  }
  const double B = static_cast<double>(probabilities.cols());
  return ad::scale(ad::frobenius_norm(ad::subtract(probabilities, other_view), kNormSmoothing), 1.0 / B);
}

ad::Var loss_kl_mean(ad::Var probabilities, const MultinoulliSpec& spec) {
  if (probabilities.rows() != spec.class_count()) {
    throw ShapeError("loss_kl_mean: " + std::to_string(probabilities.rows()) + " rows for " +
                     std::to_string(spec.class_count()) + " classes");
  }
  const std::vector<double> target = target_mean(spec);
  double negative_entropy = 0.0;
  for (double y : target) {
    if (y > 0.0) negative_entropy += y * std::log(y);
  }
  ad::Tape& tape = probabilities.tape();
  ad::Var log_mean = ad::log(ad::mean_columns(probabilities));
  ad::Var cross = ad::sum(ad::hadamard(tape.constant(Matrix::column(target)), log_mean));
  return ad::add_constant(ad::scale(cross, -1.0), negative_entropy);
}

ad::Var loss_covariance(ad::Var probabilities, const MultinoulliSpec& spec) {
  const std::size_t B = probabilities.cols();
  if (B < 2) throw ShapeError("loss_covariance: needs at least 2 columns, got " + std::to_string(B));
  if (probabilities.rows() != spec.class_count()) {
    throw ShapeError("loss_covariance: " + std::to_string(probabilities.rows()) + " rows for " +
                     std::to_string(spec.class_count()) + " classes");
  }
  ad::Tape& tape = probabilities.tape();
  ad::Var centered =
      ad::subtract(probabilities, ad::broadcast_columns(ad::mean_columns(probabilities), B));
  ad::Var cov = ad::scale(ad::matmul(centered, ad::transpose(centered)), 1.0 / static_cast<double>(B));
  ad::Var diff = ad::subtract(cov, tape.constant(target_covariance(spec)));
  return ad::frobenius_norm(diff, kNormSmoothing);
}

UnlabeledLoss loss_unlabeled(ad::Var view1, ad::Var view2, const MultinoulliSpec& spec,
                             const LossWeights& weights) {
  ad::Var both = ad::concat_columns(view1, view2);
  ad::Var h = loss_entropy(both);
  ad::Var mse = loss_consistency(view1, view2);
  ad::Var kl = loss_kl_mean(both, spec);
  ad::Var var = loss_covariance(both, spec);

  ad::Var total = ad::add(ad::add(ad::scale(h, weights.entropy), ad::scale(mse, weights.consistency)),
                          ad::add(ad::scale(kl, weights.kl), ad::scale(var, weights.var)));
  LossComponents parts;
  parts.entropy = h.scalar();
  parts.consistency = mse.scalar();
  parts.kl = kl.scalar();
  parts.var = var.scalar();
  return {total, parts};
}

void write_history_row(std::ostream& out, const LossReport& r) {
  const auto& c = r.components;
  out << r.epoch << ',' << r.step << ",labeled," << csv::format_real(c.ce) << ",0,0,0,0,"
      << csv::format_real(r.labeled_total) << '\n';
  out << r.epoch << ',' << r.step << ",unlabeled,0," << csv::format_real(c.entropy) << ','
      << csv::format_real(c.consistency) << ',' << csv::format_real(c.kl) << ','
      << csv::format_real(c.var) << ',' << csv::format_real(r.unlabeled_total) << '\n';
}

}  // namespace ncd
