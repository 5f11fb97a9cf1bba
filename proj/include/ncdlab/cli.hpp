// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ncd {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point of the ncdlab tool. `args` includes the program name.
/// Subcommands: generate, train, ablate, gradcheck, plot.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ncd
