// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ncdlab/config.hpp"
#include "ncdlab/gradcheck.hpp"

namespace ncd {

inline constexpr double kGradCheckTolerance = 1e-4;

struct GradCheckCase {
  std::string component;
  ScalarGraphFn fn;
  Matrix at;
};

struct GradCheckRow {
  std::string component;
  double max_relative_error = 0.0;
  bool pass = false;
  /// Set when the evaluation itself failed (non-finite value).
  std::string error;
};

/// Six cases on one frozen batch drawn for `seed`: ce, H, mse, kl, var and
/// the weighted unlabeled composite. Each is differentiated with respect to
/// the logits a freshly initialized model produces for that batch; the two
/// unlabeled views are stacked side by side (K x 2B).
std::vector<GradCheckCase> loss_gradcheck_cases(const ExperimentConfig& config, std::uint64_t seed);

std::vector<GradCheckRow> run_gradcheck(const std::vector<GradCheckCase>& cases,
                                        double tolerance = kGradCheckTolerance);

/// `component,max_rel_error,status`
void write_gradcheck_table(const std::vector<GradCheckRow>& rows, std::ostream& out);

}  // namespace ncd
