// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ncdlab/trainer.hpp"

#include <cmath>
#include <ostream>

#include "ncdlab/csv.hpp"

namespace ncd {

namespace {

enum Stream : std::uint64_t { kLabeledBatches = 101, kUnlabeledBatches = 102 };

void clip_global_norm(std::vector<Matrix>& grads, double ceiling) {
  double sq = 0.0;
  for (const auto& g : grads)
    for (double v : g.data()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > ceiling) {
    for (auto& g : grads) g *= ceiling / norm;
  }
}

void check_finite(double value, const char* what, const TrainState& state, const Matrix& v1, const Matrix& v2) {
  if (!std::isfinite(value)) {
    throw TrainingDiverged(std::string("non-finite ") + what + " loss at epoch " + std::to_string(state.epoch) +
                               ", step " + std::to_string(state.step),
                           state.epoch, state.step, v1, v2);
  }
}

bool unlabeled_active(const LossWeights& w) {
  return w.unlabeled > 0.0 && (w.entropy > 0.0 || w.consistency > 0.0 || w.kl > 0.0 || w.var > 0.0);
}

}  // namespace

TrainState make_train_state(const ExperimentConfig& config) {
  return TrainState{init_model(config.shape(), config.seed), 0, 0,
                    make_rng(config.seed, kLabeledBatches), make_rng(config.seed, kUnlabeledBatches), {}};
}

LossReport train_step(TrainState& state, const MultinoulliSpec& spec, const StepSettings& settings,
                      const LabeledBatch& labeled, const UnlabeledBatch& unlabeled) {
  LossReport report;
  report.epoch = state.epoch;
  report.step = state.step;
  report.weights = settings.weights;
  const LossWeights& w = settings.weights;

  {
    ad::Tape tape;
    const ParameterBinding params = bind_parameters(state.model, tape);
    ad::Var inputs = tape.constant(hconcat(labeled.view1, labeled.view2));
    const ForwardResult out = forward(state.model, params, inputs);
    ad::Var ce = loss_ce(out.probabilities, hconcat(labeled.targets, labeled.targets));
    ad::Var total = ad::scale(ce, w.ce);
    report.components.ce = ce.scalar();
    report.labeled_total = total.scalar();
    check_finite(report.labeled_total, "labeled", state, labeled.view1, labeled.view2);
    if (w.ce > 0.0) {
      tape.backward(total);
      std::vector<Matrix> grads = collect_gradients(tape, params);
      clip_global_norm(grads, settings.clip_norm);
      sgd_step(state.model, grads, settings.lr);
    }
  }

  {
    ad::Tape tape;
    const ParameterBinding params = bind_parameters(state.model, tape);
    const ForwardResult a = forward(state.model, params, tape.constant(unlabeled.view1));
    const ForwardResult b = forward(state.model, params, tape.constant(unlabeled.view2));
    const UnlabeledLoss lu = loss_unlabeled(a.probabilities, b.probabilities, spec, w);
    ad::Var total = ad::scale(lu.total, w.unlabeled);
    report.components.entropy = lu.components.entropy;
    report.components.consistency = lu.components.consistency;
    report.components.kl = lu.components.kl;
    report.components.var = lu.components.var;
    report.unlabeled_total = total.scalar();
    check_finite(report.unlabeled_total, "unlabeled", state, unlabeled.view1, unlabeled.view2);
    if (unlabeled_active(w)) {
      tape.backward(total);
      std::vector<Matrix> grads = collect_gradients(tape, params);
      clip_global_norm(grads, settings.clip_norm);
      sgd_step(state.model, grads, settings.lr);
    }
  }

  state.history.push_back(report);
  ++state.step;
  return report;
}

void write_epoch_line(std::ostream& out, const EpochSummary& s) {
  out << s.epoch << ',' << csv::format_real(s.lr) << ',' << csv::format_real(s.weights.ce) << ','
      << csv::format_real(s.weights.kl) << ',' << csv::format_real(s.weights.var) << ','
      << csv::format_real(s.mean_total_loss) << '\n';
}

double learning_rate_at(const OptimConfig& optim, std::size_t epoch) {
  return optim.lr * std::pow(optim.decay_factor, static_cast<double>(epoch / optim.decay_every));
}

TrainResult train(const ExperimentConfig& config, const SyntheticDataset& data, const EpochObserver& observer) {
  const MultinoulliSpec spec = config.spec();
  TrainState state = make_train_state(config);
  TrainResult result;
  for (std::size_t epoch = 0; epoch < config.optim.epochs; ++epoch) {
    state.epoch = epoch;
    StepSettings settings{effective_weights(config.loss, epoch), learning_rate_at(config.optim, epoch),
                          config.optim.clip_norm};
    double total = 0.0;
    for (std::size_t s = 0; s < config.optim.steps_per_epoch; ++s) {
      const LabeledBatch lb =
          sample_labeled_batch(data, config.optim.batch_labeled, config.augmentation, state.labeled_rng);
      const UnlabeledBatch ub =
          sample_unlabeled_batch(data, config.optim.batch_unlabeled, config.augmentation, state.unlabeled_rng);
      const LossReport r = train_step(state, spec, settings, lb, ub);
      total += r.labeled_total + r.unlabeled_total;
    }
    EpochSummary summary{epoch, settings.lr, settings.weights,
                         total / static_cast<double>(config.optim.steps_per_epoch)};
    result.epochs.push_back(summary);
    if (observer) observer(summary);
  }
  result.model = std::move(state.model);
  result.history = std::move(state.history);
  return result;
}

void write_history_csv(const std::vector<LossReport>& history, std::ostream& out) {
  out << kHistoryHeader << '\n';
  for (const auto& r : history) write_history_row(out, r);
}

}  // namespace ncd
