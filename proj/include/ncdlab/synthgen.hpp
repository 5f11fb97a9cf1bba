// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Gaussian-mixture stand-in for a labeled/unlabeled image corpus.
//
// Features are stored column-wise (d x N). Hidden novel ids are kept on the
// dataset for evaluation and export only; the unlabeled batch type carries
// pool indices and views, never class ids.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ncdlab/matrix.hpp"
#include "ncdlab/multinoulli.hpp"
#include "ncdlab/rng.hpp"

namespace ncd {

class SyntheticDataset {
 public:
  SyntheticDataset(std::size_t labeled_classes, std::size_t class_count, Matrix labeled_features,
                   std::vector<std::size_t> labeled_ids, Matrix unlabeled_features,
                   std::vector<std::size_t> hidden_novel_ids, Matrix class_means = {},
                   double scale = 0.0);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t labeled_classes() const noexcept { return labeled_classes_; }
  std::size_t class_count() const noexcept { return class_count_; }
  std::size_t labeled_size() const noexcept { return labeled_ids_.size(); }
  std::size_t unlabeled_size() const noexcept { return hidden_ids_.size(); }

  const Matrix& labeled_features() const noexcept { return labeled_x_; }
  const std::vector<std::size_t>& labeled_ids() const noexcept { return labeled_ids_; }
  const Matrix& unlabeled_features() const noexcept { return unlabeled_x_; }
  /// Ground truth for the unlabeled pool. Evaluation and export only.
  const std::vector<std::size_t>& hidden_novel_ids() const noexcept { return hidden_ids_; }

  /// d x K generating means; empty for datasets read back from CSV.
  const Matrix& class_means() const noexcept { return means_; }
  double scale() const noexcept { return scale_; }

  friend bool operator==(const SyntheticDataset&, const SyntheticDataset&) = default;

 private:
  std::size_t dim_;
  std::size_t labeled_classes_;
  std::size_t class_count_;
  Matrix labeled_x_;
  std::vector<std::size_t> labeled_ids_;
  Matrix unlabeled_x_;
  std::vector<std::size_t> hidden_ids_;
  Matrix means_;
  double scale_;
};

struct MixtureGeometry {
  std::size_t dim = 8;
  std::size_t n_labeled = 1000;
  std::size_t n_unlabeled = 1000;
  /// Minimum pairwise distance between class means.
  double separation = 8.0;
  /// Per-coordinate standard deviation around each mean.
  double scale = 1.0;
};

/// Places K = L + U means at mutual distance >= separation and draws both
/// pools. Labeled classes are uniform; unlabeled ids follow the novel prior.
/// Throws std::runtime_error if mean placement keeps failing.
SyntheticDataset generate(const MixtureGeometry& geometry, const MultinoulliSpec& spec,
                          std::uint64_t seed);

/// Fresh draws around the means of `source` (no augmentation).
SyntheticDataset generate_split(const SyntheticDataset& source, const MultinoulliSpec& spec,
                                std::size_t n_labeled, std::size_t n_unlabeled, std::uint64_t seed);

enum class AugmentationKind { weak, strong };

struct AugmentationPolicy {
  AugmentationKind kind = AugmentationKind::weak;
  double noise_sigma = 0.0;
  /// Rotation of the first two coordinates by an angle in [-max, max] radians.
  double max_rotation = 0.0;
  double dropout_prob = 0.0;
  /// Multiplicative jitter in [1 - j, 1 + j].
  double scale_jitter = 0.0;

  static AugmentationPolicy identity() { return {}; }
  static AugmentationPolicy weak(double noise_sigma);
  static AugmentationPolicy strong(double noise_sigma);
};

/// Perturbed copy of x. Weak policies only add noise; strong policies also
/// rotate, jitter and drop coordinates.
std::vector<double> augment(std::span<const double> x, const AugmentationPolicy& policy, Rng& rng);

struct LabeledBatch {
  Matrix view1;
  Matrix view2;
  /// One-hot K x B.
  Matrix targets;
  std::vector<std::size_t> pool_indices;
};

struct UnlabeledBatch {
  Matrix view1;
  Matrix view2;
  std::vector<std::size_t> pool_indices;
};

/// B instances drawn uniformly with replacement; column i of both views is
/// an independent augmentation of the same instance.
LabeledBatch sample_labeled_batch(const SyntheticDataset& data, std::size_t batch,
                                  const AugmentationPolicy& policy, Rng& rng);
UnlabeledBatch sample_unlabeled_batch(const SyntheticDataset& data, std::size_t batch,
                                      const AugmentationPolicy& policy, Rng& rng);

/// `split,class_id,x0..x{d-1}` with 17 significant digits.
void write_dataset_csv(const SyntheticDataset& data, std::ostream& out);
/// Inverse of write_dataset_csv. L is taken as the smallest hidden id (one
/// past the largest labeled id when the unlabeled pool is empty) and K as one
/// past the largest id overall. Throws std::runtime_error on malformed input.
SyntheticDataset read_dataset_csv(std::istream& in);

}  // namespace ncd
