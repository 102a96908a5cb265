// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hirace {

using Address = std::uint32_t;
using ThreadId = std::uint32_t;

enum class AccessKind : std::uint8_t { Read = 0, Write = 1, Atomic = 2 };
inline constexpr int kAccessKindCount = 3;

enum class ThreadRelation : std::uint8_t { Self = 0, Warp = 1, Block = 2, Global = 3 };
inline constexpr int kThreadRelationCount = 4;

enum class SyncStatus : std::uint8_t { Us = 0, Ws = 1, Bs = 2 };
inline constexpr int kSyncStatusCount = 3;

enum class Scope : std::uint8_t { Block, Warp };

// R-R and A-A are the only non-conflicting pairs.
constexpr bool conflicts(AccessKind a, AccessKind b) {
    if (a == AccessKind::Write || b == AccessKind::Write) return true;
    return a != b;
}

constexpr char kind_letter(AccessKind k) {
    switch (k) {
    case AccessKind::Read: return 'R';
    case AccessKind::Write: return 'W';
    case AccessKind::Atomic: return 'A';
    }
    return '?';
}

constexpr std::string_view relation_name(ThreadRelation r) {
    switch (r) {
    case ThreadRelation::Self: return "S";
    case ThreadRelation::Warp: return "W";
    case ThreadRelation::Block: return "B";
    case ThreadRelation::Global: return "G";
    }
    return "?";
}

constexpr std::string_view sync_name(SyncStatus s) {
    switch (s) {
    case SyncStatus::Us: return "Us";
    case SyncStatus::Ws: return "Ws";
    case SyncStatus::Bs: return "Bs";
    }
    return "?";
}

constexpr std::string_view scope_name(Scope s) {
    return s == Scope::Block ? "syncthreads" : "syncwarp";
}

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A condition the concurrency model rules out (e.g. a clock running
/// backwards, an infeasible transition label).
class ModelViolation : public Error {
public:
    using Error::Error;
};

} // namespace hirace
