// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "hirace/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return hirace::cli::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
