// Copyright 2026 The ncdlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "ncdlab/cli.hpp"

int main(int argc, char** argv) {
  return ncd::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
