// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ncdlab/gradcheck_suite.hpp"

#include <cstdio>
#include <ostream>

#include "ncdlab/losses.hpp"
#include "ncdlab/model.hpp"
#include "ncdlab/synthgen.hpp"

namespace ncd {

namespace {

constexpr std::uint64_t kBatchStream = 31;

Matrix head_logits(const MlpModel& model, const Matrix& inputs) {
  ad::Tape tape;
  const ParameterBinding binding = bind_parameters(model, tape);
  return forward(model, binding, tape.constant(inputs)).logits.value();
}

}  // namespace

std::vector<GradCheckCase> loss_gradcheck_cases(const ExperimentConfig& config, std::uint64_t seed) {
  const MultinoulliSpec spec = config.spec();
  const SyntheticDataset data = generate(config.geometry(), spec, seed);
  const MlpModel model = init_model(config.shape(), seed);
  Rng rng = make_rng(seed, kBatchStream);
  const LabeledBatch lb = sample_labeled_batch(data, config.optim.batch_labeled, config.augmentation, rng);
  const UnlabeledBatch ub = sample_unlabeled_batch(data, config.optim.batch_unlabeled, config.augmentation, rng);

  const Matrix labeled_logits = head_logits(model, lb.view1);
  const Matrix unlabeled_logits = hconcat(head_logits(model, ub.view1), head_logits(model, ub.view2));
  const std::size_t B = ub.view1.cols();
  const Matrix targets = lb.targets;
  const LossWeights weights = effective_weights(config.loss, 0);

  auto views = [B](ad::Var z) {
    const ad::Var p = ad::softmax_columns(z);
    return std::pair{ad::slice_columns(p, 0, B), ad::slice_columns(p, B, B)};
  };

  std::vector<GradCheckCase> cases;
  cases.push_back({"ce",
                   [targets](ad::Tape&, ad::Var z) { return loss_ce(ad::softmax_columns(z), targets); },
                   labeled_logits});
  cases.push_back({"H", [](ad::Tape&, ad::Var z) { return loss_entropy(ad::softmax_columns(z)); },
                   unlabeled_logits});
  cases.push_back({"mse",
                   [views](ad::Tape&, ad::Var z) {
                     const auto [a, b] = views(z);
                     return loss_consistency(a, b);
                   },
                   unlabeled_logits});
  cases.push_back({"kl",
                   [spec](ad::Tape&, ad::Var z) { return loss_kl_mean(ad::softmax_columns(z), spec); },
                   unlabeled_logits});
  cases.push_back({"var",
                   [spec](ad::Tape&, ad::Var z) { return loss_covariance(ad::softmax_columns(z), spec); },
                   unlabeled_logits});
  cases.push_back({"composite",
                   [views, spec, weights](ad::Tape&, ad::Var z) {
                     const auto [a, b] = views(z);
                     return loss_unlabeled(a, b, spec, weights).total;
                   },
                   unlabeled_logits});
  return cases;
}

std::vector<GradCheckRow> run_gradcheck(const std::vector<GradCheckCase>& cases, double tolerance) {
  std::vector<GradCheckRow> rows;
  rows.reserve(cases.size());
  for (const GradCheckCase& c : cases) {
    GradCheckRow row;
    row.component = c.component;
    try {
      row.max_relative_error = grad_check(c.fn, c.at).max_relative_error;
      row.pass = row.max_relative_error < tolerance;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_gradcheck_table(const std::vector<GradCheckRow>& rows, std::ostream& out) {
  out << "component,max_rel_error,status\n";
  char buf[32];
  for (const GradCheckRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.3e", r.max_relative_error);
    out << r.component << ',' << (r.error.empty() ? buf : "nan") << ',' << (r.pass ? "pass" : "FAIL") << '\n';
  }
}

}  // namespace ncd
