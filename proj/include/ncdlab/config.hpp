// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Declarative description of one run, read from a sectioned key = value file:
//
//   # comment
//   [data]
//   dim = 8
//   novel_prior = 1/3, 1/3, 1/3
//
// Every key has a default (see docs/config.md); unknown keys are rejected.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncdlab/losses.hpp"
#include "ncdlab/model.hpp"
#include "ncdlab/multinoulli.hpp"
#include "ncdlab/synthgen.hpp"

namespace ncd {

/// Invalid configuration. field() names the offending key as "section.key".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct DataConfig {
  std::size_t dim = 8;
  std::size_t labeled_classes = 3;
  std::vector<double> novel_prior = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  std::size_t n_labeled = 2000;
  std::size_t n_unlabeled = 2000;
  std::size_t n_test_labeled = 600;
  std::size_t n_test_unlabeled = 600;
  double separation = 8.0;
  double scale = 1.0;
};

struct ModelConfig {
  std::vector<std::size_t> hidden = {64, 32};
  std::size_t embedding_dim = 16;
};

struct OptimConfig {
  std::size_t batch_labeled = 64;
  std::size_t batch_unlabeled = 64;
  std::size_t epochs = 200;
  std::size_t steps_per_epoch = 10;
  double lr = 0.05;
  /// Learning rate is multiplied by decay_factor every decay_every epochs.
  std::size_t decay_every = 50;
  double decay_factor = 0.5;
  /// Global gradient-norm ceiling per sub-step.
  double clip_norm = 10.0;
};

/// Which loss terms participate. Disabled terms get weight zero after the
/// schedule is applied; they are still computed and logged.
struct LossSwitches {
  bool ce = true;
  bool entropy = true;
  bool consistency = true;
  bool kl = true;
  bool var = true;

  friend bool operator==(const LossSwitches&, const LossSwitches&) = default;
};

struct LossConfig {
  LossWeights weights{1.0, 1.0, 1.0, 1.0, 1.0, 1.0, ScheduleMode::adaptive};
  LossSwitches enabled;
  /// Carried for completeness; no loss reads them.
  double tau = 0.05;
  double sharpen = 0.1;
};

struct ExperimentConfig {
  DataConfig data;
  AugmentationPolicy augmentation = AugmentationPolicy::strong(0.5);
  ModelConfig model;
  OptimConfig optim;
  LossConfig loss;
  std::uint64_t seed = 1;

  MultinoulliSpec spec() const;
  MixtureGeometry geometry() const;
  MlpShape shape() const;
};

/// Parses and validates. Throws ConfigError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Throws ConfigError naming the first violated constraint.
void validate(const ExperimentConfig& config);

/// Canonical text form; parse_config(to_text(c)) == c field for field.
std::string to_text(const ExperimentConfig& config);

/// FNV-1a over the canonical text with the seed excluded.
std::uint64_t config_hash(const ExperimentConfig& config);

/// Weights actually used at `epoch`: schedule, then switches.
LossWeights effective_weights(const LossConfig& loss, std::size_t epoch);

}  // namespace ncd
