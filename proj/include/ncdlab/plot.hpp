// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace ncd {

/// Malformed or empty plot input.
class PlotInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Renders a loss-history CSV (one log-scale line per component, epoch means)
/// or an ablation grid CSV (bar chart of ACC per cell), chosen by header.
/// Output depends only on the input bytes.
std::string render_svg(std::istream& csv);

}  // namespace ncd
