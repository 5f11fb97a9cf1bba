// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ncdlab/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ncd {

namespace {

double evaluate(const ScalarGraphFn& f, const Matrix& at, std::size_t entry) {
  ad::Tape tape;
  const double v = f(tape, tape.leaf(at)).scalar();
  if (!std::isfinite(v)) {
    throw NumericalError("grad_check: non-finite evaluation at entry " + std::to_string(entry));
  }
  return v;
}

}  // namespace

GradCheckReport grad_check(const ScalarGraphFn& f, const Matrix& at, double step) {
  GradCheckReport report;
  {
    ad::Tape tape;
    ad::Var x = tape.leaf(at);
    ad::Var y = f(tape, x);
    if (!std::isfinite(y.scalar())) {
      throw NumericalError("grad_check: non-finite evaluation at the probe point");
    }
    tape.backward(y);
    report.analytic = tape.gradient(x);
  }
  if (!report.analytic.all_finite()) {
    throw NumericalError("grad_check: non-finite analytic gradient");
  }

  report.numeric = Matrix(at.rows(), at.cols());
  Matrix probe = at;
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + step;
    const double up = evaluate(f, probe, i);
    probe[i] = original - step;
    const double down = evaluate(f, probe, i);
    probe[i] = original;
    report.numeric[i] = (up - down) / (2.0 * step);

    const double a = report.analytic[i];
    const double err = std::abs(a - report.numeric[i]) / std::max(1.0, std::abs(a));
    if (err > report.max_relative_error) {
      report.max_relative_error = err;
      report.worst_index = i;
    }
  }
  return report;
}

}  // namespace ncd
