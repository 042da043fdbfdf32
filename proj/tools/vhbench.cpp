// Copyright (C) 2026 The vhbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vhbench/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    std::ios::sync_with_stdio(false);
    return vhbench::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
