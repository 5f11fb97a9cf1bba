// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Ablation grid: one axis varied at a time around a base configuration,
// every cell trained and evaluated over several seeds.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ncdlab/config.hpp"
#include "ncdlab/eval.hpp"
#include "ncdlab/trainer.hpp"

namespace ncd {

/// Offset between a run seed and the seed of its held-out test split.
inline constexpr std::uint64_t kTestSeedOffset = 1000003;

struct ExperimentOutcome {
  SyntheticDataset train_data;
  SyntheticDataset test_data;
  TrainResult result;
  EvalReport report;
};

/// Generates the training pools and a fresh test split, trains, evaluates.
ExperimentOutcome run_experiment(const ExperimentConfig& config, const EpochObserver& observer = {});

enum class AblationAxis { loss_components, distribution, augmentation, split, model };

const char* axis_name(AblationAxis axis);
/// Comma-separated names; hyphens and underscores are interchangeable.
/// Throws std::invalid_argument on an unknown name.
std::vector<AblationAxis> parse_axes(const std::string& list);

struct AblationCell {
  std::string axis;  // "baseline" for the base configuration
  std::string name;  // directory-safe
  ExperimentConfig config;
};

/// Cells of each requested axis, in axis order. No axes: one baseline cell.
std::vector<AblationCell> enumerate_grid(const ExperimentConfig& base, const std::vector<AblationAxis>& axes);

struct SeedRun {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  EvalReport report;
};

struct CellSummary {
  AblationCell cell;
  std::vector<SeedRun> runs;
  MeanSd labeled;
  MeanSd acc;
  double acc_median = 0.0;
  double leakage_mean = 0.0;
  std::size_t failures = 0;
};

/// Called from worker threads once per finished run; distinct calls never
/// share a (cell, seed) pair.
using RunSink = std::function<void(const AblationCell&, std::uint64_t seed, const ExperimentOutcome&)>;

struct GridOptions {
  std::size_t seeds = 3;
  std::size_t workers = 1;
  RunSink sink;
};

/// Runs every cell for seeds base, base+1, ... (base taken from the cell's
/// config). Failed runs are recorded and excluded from the statistics.
std::vector<CellSummary> run_grid(const std::vector<AblationCell>& cells, const GridOptions& options);

double median(std::vector<double> values);

/// `axis,cell,seeds,labeled_mean,labeled_sd,acc_mean,acc_sd,acc_median,leakage_mean,failures`
void write_grid_csv(const std::vector<CellSummary>& summaries, std::ostream& out);

}  // namespace ncd
