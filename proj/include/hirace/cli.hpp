// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hirace::cli {

inline constexpr int kExitClean = 0;
inline constexpr int kExitRace = 1;
inline constexpr int kExitError = 2;

/// Runs one `hirace` command line (args excludes the program name).
/// Returns 0 (no race / pass), 1 (race / verification failure) or 2 (usage
/// or model error).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace hirace::cli
