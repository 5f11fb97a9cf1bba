// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ncdlab/multinoulli.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ncd {

MultinoulliSpec::MultinoulliSpec(std::size_t labeled_count, std::vector<double> novel_prior)
    : labeled_(labeled_count), prior_(std::move(novel_prior)) {
  if (prior_.empty()) throw std::invalid_argument("novel prior: needs at least one class");
  for (std::size_t i = 0; i < prior_.size(); ++i) {
    if (!(prior_[i] > 0.0) || !std::isfinite(prior_[i])) {
      throw std::invalid_argument("novel prior: entry " + std::to_string(i) +
                                  " must be strictly positive");
    }
  }
  const double total = std::accumulate(prior_.begin(), prior_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("novel prior: entries sum to " + std::to_string(total) +
                                ", expected 1");
  }
}

MultinoulliSpec MultinoulliSpec::uniform(std::size_t labeled_count, std::size_t novel_count) {
  return MultinoulliSpec(labeled_count,
                         std::vector<double>(novel_count, 1.0 / static_cast<double>(novel_count)));
}

std::vector<double> target_mean(const MultinoulliSpec& spec) {
  std::vector<double> mean(spec.class_count(), 0.0);
  for (std::size_t j = 0; j < spec.novel_count(); ++j) {
    mean[spec.labeled_count() + j] = spec.novel_prior()[j];
  }
  return mean;
}

Matrix target_covariance(const MultinoulliSpec& spec) {
  const std::size_t L = spec.labeled_count();
  const auto& p = spec.novel_prior();
  Matrix sigma(spec.class_count(), spec.class_count());
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      sigma(L + i, L + j) = i == j ? p[i] * (1.0 - p[i]) : -p[i] * p[j];
    }
  }
  return sigma;
}

std::size_t sample_category(const MultinoulliSpec& spec, Rng& rng) {
  const double u = uniform01(rng);
  const auto& p = spec.novel_prior();
  double cumulative = 0.0;
  for (std::size_t j = 0; j + 1 < p.size(); ++j) {
    cumulative += p[j];
    if (u < cumulative) return spec.labeled_count() + j;
  }
  return spec.labeled_count() + p.size() - 1;
}

std::vector<double> empirical_mean(const Matrix& probabilities) {
  if (probabilities.cols() == 0) throw ShapeError("empirical_mean: empty batch");
  std::vector<double> mean(probabilities.rows(), 0.0);
  for (std::size_t r = 0; r < probabilities.rows(); ++r) {
    for (std::size_t c = 0; c < probabilities.cols(); ++c) mean[r] += probabilities(r, c);
    mean[r] /= static_cast<double>(probabilities.cols());
  }
  return mean;
}

Matrix empirical_covariance(const Matrix& probabilities) {
  const std::size_t K = probabilities.rows();
  const std::size_t B = probabilities.cols();
  if (B < 2) throw ShapeError("empirical_covariance: needs at least 2 columns, got " + std::to_string(B));
  const std::vector<double> mean = empirical_mean(probabilities);
  Matrix centered = probabilities;
  for (std::size_t r = 0; r < K; ++r)
    for (std::size_t c = 0; c < B; ++c) centered(r, c) -= mean[r];
  Matrix cov = matmul(centered, transpose(centered));
  cov *= 1.0 / static_cast<double>(B);
  return cov;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("total_variation: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

}  // namespace ncd
