// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Losses over probability matrices (K x B, one column per instance).
//
// Labeled branch: cross-entropy against one-hot targets.
// Unlabeled branch: per-instance entropy and augmentation consistency, plus
// batch statistics (mean via KL, covariance via Frobenius distance) matched
// to the Multinoulli prior [0_L ; p_U].

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "ncdlab/autodiff.hpp"
#include "ncdlab/matrix.hpp"
#include "ncdlab/multinoulli.hpp"

namespace ncd {

/// Smoothing of the un-squared Frobenius norms: sqrt(|A|^2 + delta^2).
inline constexpr double kNormSmoothing = 1e-8;

enum class ScheduleMode { fixed, adaptive };

struct LossWeights {
  double ce = 1.0;
  double entropy = 1.0;
  double consistency = 1.0;
  double kl = 1.0;
  double var = 1.0;
  /// Outer weight on the whole unlabeled objective.
  double unlabeled = 1.0;
  ScheduleMode mode = ScheduleMode::fixed;

  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

/// Fixed mode returns `base`. Adaptive mode sets
///   kl = var = 0.2 + 0.5 n,  ce = max(0, 1 - 0.01 n) + 0.5,  entropy = 1
/// and keeps consistency and unlabeled from `base`.
LossWeights weights_at_epoch(const LossWeights& base, std::size_t epoch);

/// -(1/B) sum(T .* log P). Targets must be one-hot columns of P's shape.
ad::Var loss_ce(ad::Var probabilities, const Matrix& targets);

/// Mean Shannon entropy of the columns, -(1/B) tr(P^T log P).
ad::Var loss_entropy(ad::Var probabilities);

/// (1/B) |P - P'|_F on column-aligned views.
ad::Var loss_consistency(ad::Var probabilities, ad::Var other_view);

/// KL(y^U || mean(P)); coordinates where y^U is zero contribute nothing.
ad::Var loss_kl_mean(ad::Var probabilities, const MultinoulliSpec& spec);

/// |cov(P) - Sigma(p_U)|_F with the biased 1/B covariance. Needs B >= 2.
ad::Var loss_covariance(ad::Var probabilities, const MultinoulliSpec& spec);

struct LossComponents {
  double ce = 0.0;
  double entropy = 0.0;
  double consistency = 0.0;
  double kl = 0.0;
  double var = 0.0;
};

struct UnlabeledLoss {
  ad::Var total;
  LossComponents components;
};

/// entropy * L_H + consistency * L_mse + kl * L_kl + var * L_var.
/// L_H, L_kl and L_var see both views concatenated (2B columns); L_mse
/// compares the views column by column. Zero-weighted terms are still
/// evaluated and reported.
UnlabeledLoss loss_unlabeled(ad::Var view1, ad::Var view2, const MultinoulliSpec& spec,
                             const LossWeights& weights);

struct LossReport {
  std::size_t epoch = 0;
  std::size_t step = 0;
  LossComponents components;
  double labeled_total = 0.0;
  double unlabeled_total = 0.0;
  LossWeights weights;
};

inline constexpr const char* kHistoryHeader = "epoch,step,branch,ce,H,mse,kl,var,total";

/// Two rows per report: the labeled sub-step (ce only) then the unlabeled one.
void write_history_row(std::ostream& out, const LossReport& report);

}  // namespace ncd
