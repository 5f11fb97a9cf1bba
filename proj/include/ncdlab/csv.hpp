// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ncd::csv {

/// 17 significant digits; parses back to the identical double.
std::string format_real(double v);

/// Splits on commas; no quoting support (none of our files need it).
std::vector<std::string> split_line(std::string_view line);

/// Throws std::runtime_error naming `what` on anything but a complete number.
double parse_real(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

}  // namespace ncd::csv
