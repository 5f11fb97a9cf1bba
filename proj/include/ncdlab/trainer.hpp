// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

#include "ncdlab/config.hpp"
#include "ncdlab/losses.hpp"
#include "ncdlab/model.hpp"
#include "ncdlab/rng.hpp"
#include "ncdlab/synthgen.hpp"

namespace ncd {

/// Non-finite loss during training. Carries the batch that produced it.
class TrainingDiverged : public NumericalError {
 public:
  TrainingDiverged(const std::string& what, std::size_t epoch, std::size_t step, Matrix view1, Matrix view2)
      : NumericalError(what), epoch(epoch), step(step), view1(std::move(view1)), view2(std::move(view2)) {}

  std::size_t epoch;
  std::size_t step;
  Matrix view1;
  Matrix view2;
};

struct TrainState {
  MlpModel model;
  std::size_t epoch = 0;
  std::size_t step = 0;
  Rng labeled_rng;
  Rng unlabeled_rng;
  std::vector<LossReport> history;
};

/// Everything a single step needs besides the state and batches.
struct StepSettings {
  LossWeights weights;  // already scheduled for the current epoch
  double lr = 0.0;
  double clip_norm = 10.0;
};

/// Fresh state: model initialized from the config seed, sampler streams keyed
/// by the same seed.
TrainState make_train_state(const ExperimentConfig& config);

/// One labeled sub-step (ce on both views) followed by one unlabeled
/// sub-step, each with its own backward pass and SGD update. A sub-step whose
/// effective weight is zero leaves the parameters untouched. Appends the
/// report to state.history and advances state.step.
/// Throws TrainingDiverged on a non-finite loss.
LossReport train_step(TrainState& state, const MultinoulliSpec& spec, const StepSettings& settings,
                      const LabeledBatch& labeled, const UnlabeledBatch& unlabeled);

struct EpochSummary {
  std::size_t epoch = 0;
  double lr = 0.0;
  LossWeights weights;
  double mean_total_loss = 0.0;
};

/// `epoch,lr,λ_ce,λ_kl,λ_var,mean_total_loss`
void write_epoch_line(std::ostream& out, const EpochSummary& summary);

using EpochObserver = std::function<void(const EpochSummary&)>;

struct TrainResult {
  MlpModel model;
  std::vector<LossReport> history;
  std::vector<EpochSummary> epochs;
};

double learning_rate_at(const OptimConfig& optim, std::size_t epoch);

/// epochs x steps_per_epoch train steps on `data`; deterministic per seed.
TrainResult train(const ExperimentConfig& config, const SyntheticDataset& data,
                  const EpochObserver& observer = {});

void write_history_csv(const std::vector<LossReport>& history, std::ostream& out);

}  // namespace ncd
