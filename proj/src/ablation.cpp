// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ncdlab/ablation.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ncdlab/csv.hpp"

namespace ncd {

ExperimentOutcome run_experiment(const ExperimentConfig& config, const EpochObserver& observer) {
  const MultinoulliSpec spec = config.spec();
  SyntheticDataset data = generate(config.geometry(), spec, config.seed);
  SyntheticDataset test = generate_split(data, spec, config.data.n_test_labeled, config.data.n_test_unlabeled,
                                         config.seed + kTestSeedOffset);
  TrainResult result = train(config, data, observer);
  EvalReport report = evaluate(result.model, test, spec);
  return {std::move(data), std::move(test), std::move(result), std::move(report)};
}

const char* axis_name(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::loss_components: return "loss-components";
    case AblationAxis::distribution: return "distribution";
    case AblationAxis::augmentation: return "augmentation";
    case AblationAxis::split: return "split";
    case AblationAxis::model: return "model";
  }
  return "?";
}

std::vector<AblationAxis> parse_axes(const std::string& list) {
  static constexpr AblationAxis all[] = {AblationAxis::loss_components, AblationAxis::distribution,
                                         AblationAxis::augmentation, AblationAxis::split, AblationAxis::model};
  std::vector<AblationAxis> axes;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](char c) { return c == ' ' || c == '\t'; }), item.end());
    if (item.empty()) continue;
    std::replace(item.begin(), item.end(), '_', '-');
    if (item == "loss" || item == "losses") item = "loss-components";
    const auto it = std::find_if(std::begin(all), std::end(all),
                                 [&](AblationAxis a) { return item == axis_name(a); });
    if (it == std::end(all)) throw std::invalid_argument("unknown ablation axis '" + item + "'");
    if (std::find(axes.begin(), axes.end(), *it) == axes.end()) axes.push_back(*it);
  }
  return axes;
}

namespace {

void ensure_batch_rule(ExperimentConfig& c) {
  const std::size_t U = c.data.novel_prior.size();
  c.optim.batch_unlabeled = std::max(c.optim.batch_unlabeled, 10 * U);
}

void add_loss_cells(const ExperimentConfig& base, std::vector<AblationCell>& out) {
  struct Row {
    const char* name;
    LossSwitches on;
  };
  // ce, entropy, consistency, kl, var
  const Row rows[] = {
      {"full", {true, true, true, true, true}},      {"ce-only", {true, false, false, false, false}},
      {"H-only", {false, true, false, false, false}}, {"mse-only", {false, false, true, false, false}},
      {"var-only", {false, false, false, false, true}}, {"kl-only", {false, false, false, true, false}},
      {"kl+var", {false, false, false, true, true}},  {"no-var", {true, true, true, true, false}},
      {"no-kl", {true, true, true, false, true}},
  };
  for (const Row& r : rows) {
    ExperimentConfig c = base;
    c.loss.enabled = r.on;
    out.push_back({"loss-components", r.name, c});
  }
}

void add_distribution_cells(const ExperimentConfig& base, std::vector<AblationCell>& out) {
  struct Row {
    const char* name;
    std::vector<double> prior;
  };
  const Row rows[] = {
      {"uniform-5", std::vector<double>(5, 0.2)},
      {"third-sixths", {1.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6}},
      {"three-sevenths", {3.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7}},
      {"half-eighths", {0.5, 0.125, 0.125, 0.125, 0.125}},
  };
  for (const Row& r : rows) {
    ExperimentConfig c = base;
    c.data.labeled_classes = 5;
    c.data.novel_prior = r.prior;
    ensure_batch_rule(c);
    out.push_back({"distribution", r.name, c});
  }
}

void add_split_cells(const ExperimentConfig& base, std::vector<AblationCell>& out) {
  const std::size_t L = base.data.labeled_classes;
  const std::size_t U = base.data.novel_prior.size();
  const std::pair<std::size_t, std::size_t> splits[] = {{L + 1, U - 1}, {L, U}, {L - 1, U + 1}};
  for (const auto& [l, u] : splits) {
    if (l == 0 || u == 0 || l > L + U || u > L + U) continue;
    ExperimentConfig c = base;
    c.data.labeled_classes = l;
    c.data.novel_prior.assign(u, 1.0 / static_cast<double>(u));
    ensure_batch_rule(c);
    out.push_back({"split", "L" + std::to_string(l) + "-U" + std::to_string(u), c});
  }
}

}  // namespace

std::vector<AblationCell> enumerate_grid(const ExperimentConfig& base, const std::vector<AblationAxis>& axes) {
  std::vector<AblationCell> cells;
  if (axes.empty()) {
    cells.push_back({"baseline", "baseline", base});
    return cells;
  }
  for (AblationAxis axis : axes) {
    switch (axis) {
      case AblationAxis::loss_components:
        add_loss_cells(base, cells);
        break;
      case AblationAxis::distribution:
        add_distribution_cells(base, cells);
        break;
      case AblationAxis::augmentation: {
        ExperimentConfig strong = base;
        strong.augmentation = AugmentationPolicy::strong(base.augmentation.noise_sigma);
        ExperimentConfig weak = base;
        weak.augmentation = AugmentationPolicy::weak(base.augmentation.noise_sigma);
        cells.push_back({"augmentation", "strong", strong});
        cells.push_back({"augmentation", "weak", weak});
        break;
      }
      case AblationAxis::split:
        add_split_cells(base, cells);
        break;
      case AblationAxis::model: {
        ExperimentConfig shallow = base;
        shallow.model.hidden = {32};
        ExperimentConfig deep = base;
        deep.model.hidden = {128, 64, 32};
        cells.push_back({"model", "shallow", shallow});
        cells.push_back({"model", "deep", deep});
        break;
      }
    }
  }
  return cells;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<CellSummary> run_grid(const std::vector<AblationCell>& cells, const GridOptions& options) {
  std::vector<CellSummary> summaries(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    summaries[i].cell = cells[i];
    summaries[i].runs.resize(options.seeds);
    for (std::size_t s = 0; s < options.seeds; ++s) summaries[i].runs[s].seed = cells[i].config.seed + s;
  }

  const std::size_t jobs = cells.size() * options.seeds;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const std::size_t ci = j / options.seeds;
      SeedRun& run = summaries[ci].runs[j % options.seeds];
      ExperimentConfig config = cells[ci].config;
      config.seed = run.seed;
      try {
        validate(config);
        const ExperimentOutcome outcome = run_experiment(config);
        run.report = outcome.report;
        run.ok = true;
        if (options.sink) options.sink(cells[ci], run.seed, outcome);
      } catch (const std::exception& e) {
        run.ok = false;
        run.error = e.what();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(jobs, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  for (CellSummary& s : summaries) {
    std::vector<double> labeled, acc, leak;
    for (const SeedRun& r : s.runs) {
      if (!r.ok) {
        ++s.failures;
        continue;
      }
      labeled.push_back(r.report.labeled_accuracy);
      acc.push_back(r.report.novel_acc);
      leak.push_back(r.report.leakage_rate);
    }
    s.labeled = mean_sd(labeled);
    s.acc = mean_sd(acc);
    s.acc_median = median(acc);
    s.leakage_mean = mean_sd(leak).mean;
  }
  return summaries;
}

void write_grid_csv(const std::vector<CellSummary>& summaries, std::ostream& out) {
  const auto f = csv::format_real;
  out << "axis,cell,seeds,labeled_mean,labeled_sd,acc_mean,acc_sd,acc_median,leakage_mean,failures\n";
  for (const CellSummary& s : summaries) {
    out << s.cell.axis << ',' << s.cell.name << ',' << s.runs.size() << ',' << f(s.labeled.mean) << ','
        << f(s.labeled.sd) << ',' << f(s.acc.mean) << ',' << f(s.acc.sd) << ',' << f(s.acc_median) << ','
        << f(s.leakage_mean) << ',' << s.failures << '\n';
  }
}

}  // namespace ncd
