// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

#include "ncdlab/autodiff.hpp"
#include "ncdlab/matrix.hpp"

namespace ncd {

inline constexpr double kGradCheckStep = 1e-5;

/// Builds a scalar (1x1) graph from a leaf holding the probe point.
using ScalarGraphFn = std::function<ad::Var(ad::Tape&, ad::Var)>;

struct GradCheckReport {
  /// max over entries of |analytic - numeric| / max(1, |analytic|)
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  Matrix analytic;
  Matrix numeric;
};

/// Compares the tape gradient of `f` at `at` against central differences.
/// Throws NumericalError naming the entry if any evaluation is non-finite.
GradCheckReport grad_check(const ScalarGraphFn& f, const Matrix& at, double step = kGradCheckStep);

}  // namespace ncd
