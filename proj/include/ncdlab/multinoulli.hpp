// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "ncdlab/matrix.hpp"
#include "ncdlab/rng.hpp"

namespace ncd {

/// Prior over the novel classes together with the class-count bookkeeping.
///
/// Class indices 0..L-1 are the labeled classes, L..K-1 the novel ones. The
/// novel prior must be strictly positive and sum to one (within 1e-9).
class MultinoulliSpec {
 public:
  /// Throws std::invalid_argument on an empty, non-positive or unnormalized prior.
  MultinoulliSpec(std::size_t labeled_count, std::vector<double> novel_prior);

  static MultinoulliSpec uniform(std::size_t labeled_count, std::size_t novel_count);

  std::size_t labeled_count() const noexcept { return labeled_; }
  std::size_t novel_count() const noexcept { return prior_.size(); }
  std::size_t class_count() const noexcept { return labeled_ + prior_.size(); }
  const std::vector<double>& novel_prior() const noexcept { return prior_; }

 private:
  std::size_t labeled_;
  std::vector<double> prior_;
};

/// [0_L ; p_U], length K.
std::vector<double> target_mean(const MultinoulliSpec& spec);

/// K x K covariance of a one-hot draw from [0_L ; p_U]: p_i(1-p_i) on the
/// novel diagonal, -p_i p_j off it, zero in every labeled row and column.
Matrix target_covariance(const MultinoulliSpec& spec);

/// Inverse-CDF draw of one novel class index in [L, K).
std::size_t sample_category(const MultinoulliSpec& spec, Rng& rng);

/// Average of the columns of P. Throws ShapeError for an empty batch.
std::vector<double> empirical_mean(const Matrix& probabilities);

/// Biased (1/B) covariance of the columns of P about their mean.
/// Throws ShapeError when P has fewer than two columns.
Matrix empirical_covariance(const Matrix& probabilities);

/// Total-variation distance 0.5 * sum |a_i - b_i|.
double total_variation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace ncd
