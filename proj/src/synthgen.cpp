// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ncdlab/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "ncdlab/csv.hpp"

namespace ncd {

namespace {

constexpr int kMeanPlacementRetries = 10000;

enum Stream : std::uint64_t { kMeansStream = 1, kPoolStream = 2 };

Matrix place_means(std::size_t dim, std::size_t count, double separation, Rng& rng) {
  Matrix means(dim, count);
  for (int attempt = 0; attempt < kMeanPlacementRetries; ++attempt) {
    for (std::size_t k = 0; k < count; ++k) {
      double norm = 0.0;
      std::vector<double> dir(dim);
      for (double& v : dir) {
        v = standard_normal(rng);
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (std::size_t i = 0; i < dim; ++i) means(i, k) = separation * dir[i] / norm;
    }
    bool ok = true;
    for (std::size_t a = 0; a < count && ok; ++a) {
      for (std::size_t b = a + 1; b < count && ok; ++b) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < dim; ++i) d2 += (means(i, a) - means(i, b)) * (means(i, a) - means(i, b));
        ok = std::sqrt(d2) >= separation;
      }
    }
    if (ok) return means;
  }
  throw std::runtime_error("could not place " + std::to_string(count) + " class means " +
                           std::to_string(separation) + " apart in " + std::to_string(dim) +
                           " dimensions; use a larger dim or a smaller separation");
}

void draw_instance(const Matrix& means, std::size_t cls, double scale, Rng& rng, Matrix& out,
                   std::size_t col) {
  for (std::size_t i = 0; i < means.rows(); ++i) out(i, col) = means(i, cls) + scale * standard_normal(rng);
}

SyntheticDataset draw_pools(const Matrix& means, const MultinoulliSpec& spec, double scale,
                            std::size_t n_labeled, std::size_t n_unlabeled, Rng& rng) {
  const std::size_t L = spec.labeled_count();
  Matrix lx(means.rows(), n_labeled);
  std::vector<std::size_t> lid(n_labeled);
  for (std::size_t n = 0; n < n_labeled; ++n) {
    lid[n] = L == 0 ? 0 : static_cast<std::size_t>(uniform01(rng) * static_cast<double>(L));
    draw_instance(means, lid[n], scale, rng, lx, n);
  }
  Matrix ux(means.rows(), n_unlabeled);
  std::vector<std::size_t> uid(n_unlabeled);
  for (std::size_t n = 0; n < n_unlabeled; ++n) {
    uid[n] = sample_category(spec, rng);
    draw_instance(means, uid[n], scale, rng, ux, n);
  }
  return SyntheticDataset(L, spec.class_count(), std::move(lx), std::move(lid), std::move(ux),
                          std::move(uid), means, scale);
}

std::vector<std::size_t> draw_indices(std::size_t pool, std::size_t batch, Rng& rng) {
  if (pool == 0) throw std::invalid_argument("sample_batch: empty pool");
  std::vector<std::size_t> idx(batch);
  std::uniform_int_distribution<std::size_t> pick(0, pool - 1);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

void fill_views(const Matrix& pool, std::span<const std::size_t> idx, const AugmentationPolicy& policy,
                Rng& rng, Matrix& view1, Matrix& view2) {
  view1 = Matrix(pool.rows(), idx.size());
  view2 = Matrix(pool.rows(), idx.size());
  for (std::size_t c = 0; c < idx.size(); ++c) {
    const std::vector<double> x = pool.col(idx[c]);
    view1.set_col(c, augment(x, policy, rng));
    view2.set_col(c, augment(x, policy, rng));
  }
}

}  // namespace

SyntheticDataset::SyntheticDataset(std::size_t labeled_classes, std::size_t class_count,
                                   Matrix labeled_features, std::vector<std::size_t> labeled_ids,
                                   Matrix unlabeled_features, std::vector<std::size_t> hidden_novel_ids,
                                   Matrix class_means, double scale)
    : dim_(std::max(labeled_features.rows(), unlabeled_features.rows())),
      labeled_classes_(labeled_classes),
      class_count_(class_count),
      labeled_x_(std::move(labeled_features)),
      labeled_ids_(std::move(labeled_ids)),
      unlabeled_x_(std::move(unlabeled_features)),
      hidden_ids_(std::move(hidden_novel_ids)),
      means_(std::move(class_means)),
      scale_(scale) {
  if (labeled_x_.cols() != labeled_ids_.size() || unlabeled_x_.cols() != hidden_ids_.size()) {
    throw ShapeError("SyntheticDataset: feature columns and id counts differ");
  }
  if ((labeled_x_.cols() > 0 && labeled_x_.rows() != dim_) ||
      (unlabeled_x_.cols() > 0 && unlabeled_x_.rows() != dim_)) {
    throw ShapeError("SyntheticDataset: pools have different feature dimensions");
  }
  for (std::size_t id : labeled_ids_) {
    if (id >= labeled_classes_) throw std::invalid_argument("SyntheticDataset: labeled id outside [0, L)");
  }
  for (std::size_t id : hidden_ids_) {
    if (id < labeled_classes_ || id >= class_count_) {
      throw std::invalid_argument("SyntheticDataset: novel id outside [L, K)");
    }
  }
}

SyntheticDataset generate(const MixtureGeometry& geometry, const MultinoulliSpec& spec,
                          std::uint64_t seed) {
  if (!(geometry.separation > 0.0)) throw std::invalid_argument("generate: separation must be > 0");
  if (geometry.dim == 0 || geometry.n_labeled == 0 || geometry.n_unlabeled == 0) {
    throw std::invalid_argument("generate: dimension and pool sizes must be > 0");
  }
  Rng mean_rng = make_rng(seed, kMeansStream);
  Matrix means = place_means(geometry.dim, spec.class_count(), geometry.separation, mean_rng);
  Rng pool_rng = make_rng(seed, kPoolStream);
  return draw_pools(means, spec, geometry.scale, geometry.n_labeled, geometry.n_unlabeled, pool_rng);
}

SyntheticDataset generate_split(const SyntheticDataset& source, const MultinoulliSpec& spec,
                                std::size_t n_labeled, std::size_t n_unlabeled, std::uint64_t seed) {
  if (source.class_means().empty()) {
    throw std::invalid_argument("generate_split: source dataset carries no class means");
  }
  if (source.class_count() != spec.class_count()) {
    throw std::invalid_argument("generate_split: class count differs from the prior");
  }
  Rng rng = make_rng(seed, kPoolStream);
  return draw_pools(source.class_means(), spec, source.scale(), n_labeled, n_unlabeled, rng);
}

AugmentationPolicy AugmentationPolicy::weak(double noise_sigma) {
  return {AugmentationKind::weak, noise_sigma, 0.0, 0.0, 0.0};
}

AugmentationPolicy AugmentationPolicy::strong(double noise_sigma) {
  return {AugmentationKind::strong, noise_sigma, 0.05, 0.002, 0.05};
}

std::vector<double> augment(std::span<const double> x, const AugmentationPolicy& policy, Rng& rng) {
  std::vector<double> out(x.begin(), x.end());
  if (policy.kind == AugmentationKind::strong) {
    if (policy.max_rotation > 0.0 && out.size() >= 2) {
      const double angle = uniform(rng, -policy.max_rotation, policy.max_rotation);
      const double c = std::cos(angle);
      const double s = std::sin(angle);
      const double a = out[0];
      const double b = out[1];
      out[0] = c * a - s * b;
      out[1] = s * a + c * b;
    }
    if (policy.scale_jitter > 0.0) {
      const double k = uniform(rng, 1.0 - policy.scale_jitter, 1.0 + policy.scale_jitter);
      for (double& v : out) v *= k;
    }
    if (policy.dropout_prob > 0.0) {
      for (double& v : out) {
        if (uniform01(rng) < policy.dropout_prob) v = 0.0;
      }
    }
  }
  if (policy.noise_sigma > 0.0) {
    for (double& v : out) v += policy.noise_sigma * standard_normal(rng);
  }
  return out;
}

LabeledBatch sample_labeled_batch(const SyntheticDataset& data, std::size_t batch,
                                  const AugmentationPolicy& policy, Rng& rng) {
  LabeledBatch out;
  out.pool_indices = draw_indices(data.labeled_size(), batch, rng);
  fill_views(data.labeled_features(), out.pool_indices, policy, rng, out.view1, out.view2);
  out.targets = Matrix(data.class_count(), batch);
  for (std::size_t c = 0; c < batch; ++c) out.targets(data.labeled_ids()[out.pool_indices[c]], c) = 1.0;
  return out;
}

UnlabeledBatch sample_unlabeled_batch(const SyntheticDataset& data, std::size_t batch,
                                      const AugmentationPolicy& policy, Rng& rng) {
  UnlabeledBatch out;
  out.pool_indices = draw_indices(data.unlabeled_size(), batch, rng);
  fill_views(data.unlabeled_features(), out.pool_indices, policy, rng, out.view1, out.view2);
  return out;
}

void write_dataset_csv(const SyntheticDataset& data, std::ostream& out) {
  out << "split,class_id";
  for (std::size_t i = 0; i < data.dim(); ++i) out << ",x" << i;
  out << '\n';
  auto rows = [&](const char* split, const Matrix& x, const std::vector<std::size_t>& ids) {
    for (std::size_t n = 0; n < ids.size(); ++n) {
      out << split << ',' << ids[n];
      for (std::size_t i = 0; i < x.rows(); ++i) out << ',' << csv::format_real(x(i, n));
      out << '\n';
    }
  };
  rows("labeled", data.labeled_features(), data.labeled_ids());
  rows("unlabeled", data.unlabeled_features(), data.hidden_novel_ids());
}

SyntheticDataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset csv: missing header");
  const auto header = csv::split_line(line);
  if (header.size() < 3 || header[0] != "split" || header[1] != "class_id") {
    throw std::runtime_error("dataset csv: header must start with split,class_id,x0");
  }
  const std::size_t dim = header.size() - 2;
  std::vector<double> lx, ux;
  std::vector<std::size_t> lid, uid;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = csv::split_line(line);
    if (f.size() != header.size()) {
      throw std::runtime_error("dataset csv: line " + std::to_string(line_no) + " has " +
                               std::to_string(f.size()) + " fields, expected " +
                               std::to_string(header.size()));
    }
    const long long id = csv::parse_int(f[1], "class_id");
    if (id < 0) throw std::runtime_error("dataset csv: negative class id on line " + std::to_string(line_no));
    auto& xs = f[0] == "labeled" ? lx : ux;
    if (f[0] == "labeled") {
      lid.push_back(static_cast<std::size_t>(id));
    } else if (f[0] == "unlabeled") {
      uid.push_back(static_cast<std::size_t>(id));
    } else {
      throw std::runtime_error("dataset csv: unknown split '" + f[0] + "' on line " + std::to_string(line_no));
    }
    for (std::size_t i = 0; i < dim; ++i) xs.push_back(csv::parse_real(f[2 + i], header[2 + i]));
  }
  auto to_columns = [dim](const std::vector<double>& rowmajor, std::size_t n) {
    Matrix m(dim, n);
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t i = 0; i < dim; ++i) m(i, c) = rowmajor[c * dim + i];
    return m;
  };
  std::size_t L = 0;
  std::size_t K = 0;
  for (std::size_t id : lid) L = std::max(L, id + 1);
  if (!uid.empty()) L = *std::min_element(uid.begin(), uid.end());
  for (std::size_t id : lid) K = std::max(K, id + 1);
  for (std::size_t id : uid) K = std::max(K, id + 1);
  Matrix lm = to_columns(lx, lid.size());
  Matrix um = to_columns(ux, uid.size());
  return SyntheticDataset(L, K, std::move(lm), std::move(lid), std::move(um), std::move(uid));
}

}  // namespace ncd
