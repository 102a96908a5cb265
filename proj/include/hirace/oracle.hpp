// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hirace/detector.hpp"
#include "hirace/litmus.hpp"
#include "hirace/model.hpp"

#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace hirace::oracle {

/// A memory event with the barrier epochs it executes in.
struct AccessEvent {
    ThreadId tid = 0;
    std::uint32_t seq = 0; // index in the thread's event stream
    Address addr = 0;
    AccessKind kind = AccessKind::Read;
    std::uint32_t bc = 0; // block barriers before it in program order
    std::uint32_t wc = 0; // warp barriers before it in program order
    std::uint32_t instr = 0;

    friend bool operator==(const AccessEvent&, const AccessEvent&) = default;
};

struct RacePair {
    AccessEvent a; // (a.tid, a.seq) < (b.tid, b.seq)
    AccessEvent b;

    friend bool operator==(const RacePair&, const RacePair&) = default;
};

/// `addr thread_a#seq_a kind_a × thread_b#seq_b kind_b`
std::string format_pair(const RacePair& pair, const litmus::AddressSpace& names);

std::vector<AccessEvent> access_events(const litmus::MaterializedProgram& program);

/// Program order, block-epoch order (same block, different bc) or warp-epoch
/// order (same warp, different wc). Symmetric.
bool hb_ordered(const AccessEvent& x, const AccessEvent& y, const litmus::GridConfig& grid);

/// Every conflicting, unordered pair of events from distinct threads on the
/// same address, sorted. Throws Deadlock when barriers diverge.
std::vector<RacePair> static_hb_races(const litmus::MaterializedProgram& program);
std::vector<RacePair> static_hb_races(const litmus::KernelProgram& program);

/// Throws Deadlock when the default schedule cannot finish.
void check_barrier_uniformity(const litmus::MaterializedProgram& program);

/// Per-thread vector clocks with the latest access epoch per (address,
/// kind, thread), which loses nothing since a thread's accesses are ordered.
class VectorClockDetector final : public Detector {
public:
    explicit VectorClockDetector(const DetectorContext& ctx);

    std::string name() const override { return "vclock"; }
    std::optional<RaceReport> on_access(const AccessInfo& access) override;
    void on_barrier(Scope scope, std::span<const ThreadId> participants) override;
    DetectorStats finalize() const override;

private:
    struct Stamp {
        std::uint32_t epoch = 0; // 0: never accessed
        std::uint32_t bc = 0;
        std::uint32_t wc = 0;
    };
    std::vector<std::vector<std::uint32_t>> clocks_;
    // [addr] -> kinds x threads, allocated on first access
    std::vector<std::vector<Stamp>> history_;
    std::vector<bool> reported_;
    std::size_t threads_;
    bool report_all_;
};

/// Vector-clock logic over bounded per-address history: K reader slots, K
/// atomic slots and one writer slot, oldest evicted first. Misses races by
/// design once a racing record is evicted.
class FiniteHistoryDetector final : public Detector {
public:
    FiniteHistoryDetector(const DetectorContext& ctx, unsigned k);

    std::string name() const override { return "finite:" + std::to_string(k_); }
    std::optional<RaceReport> on_access(const AccessInfo& access) override;
    void on_barrier(Scope scope, std::span<const ThreadId> participants) override;
    DetectorStats finalize() const override;

private:
    struct Slot {
        ThreadId tid = 0;
        std::uint32_t epoch = 0;
        AccessKind kind = AccessKind::Read;
        std::uint32_t bc = 0;
        std::uint32_t wc = 0;
    };
    struct Cell {
        std::deque<Slot> readers;
        std::deque<Slot> atomics;
        std::optional<Slot> writer;
    };
    std::vector<std::vector<std::uint32_t>> clocks_;
    std::vector<Cell> cells_;
    std::vector<bool> reported_;
    unsigned k_;
    bool report_all_;
};

RunResult vclock_check(const litmus::MaterializedProgram& program, const Schedule& schedule);
RunResult finite_history_check(const litmus::MaterializedProgram& program, const Schedule& schedule, unsigned k);

} // namespace hirace::oracle
