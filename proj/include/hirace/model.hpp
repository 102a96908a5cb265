// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hirace/detector.hpp"
#include "hirace/litmus.hpp"
#include "hirace/shadow.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hirace {

enum class ThreadStatus : std::uint8_t { Runnable, AtBlockBarrier, AtWarpBarrier, Done };

struct ThreadState {
    litmus::ThreadCoord coord;
    std::uint32_t pc = 0;
    std::uint32_t bc = 0;
    std::uint32_t wc = 0;
    ThreadStatus status = ThreadStatus::Runnable;

    friend bool operator==(const ThreadState&, const ThreadState&) = default;
};

struct Schedule {
    bool random = false;
    std::vector<ThreadId> picks; // explicit prefix; the rest runs lowest-gtid-first
    std::uint64_t seed = 0;

    static Schedule explicit_picks(std::vector<ThreadId> picks) { return {false, std::move(picks), 0}; }
    static Schedule random_seed(std::uint64_t seed) { return {true, {}, seed}; }
};

/// Whitespace-separated gtids.
std::vector<ThreadId> parse_schedule(std::string_view text);
std::string format_schedule(const std::vector<ThreadId>& picks);

enum class Verdict : std::uint8_t { RaceFree, Racy };
const char* verdict_name(Verdict v);

struct RunStats {
    std::uint64_t events = 0;
    std::uint64_t cas_retries = 0;
    std::uint64_t barriers = 0; // completed barrier instances
};

struct RunResult {
    std::string detector;
    Verdict verdict = Verdict::RaceFree;
    std::vector<RaceReport> reports;
    RunStats stats;
    std::vector<ThreadId> schedule; // every pick actually executed
    bool clock_overflow = false;
    bool detection_disabled = false;
    std::vector<std::string> warnings;
};

/// A barrier that can never complete.
class Deadlock : public Error {
public:
    Deadlock(const std::string& what, std::vector<ThreadId> waiting);
    const std::vector<ThreadId>& waiting() const { return waiting_; }

private:
    std::vector<ThreadId> waiting_;
};

class InvalidSchedule : public Error {
public:
    using Error::Error;
};

struct RunOptions {
    ShadowLayout layout;
};

/// Execution state shared by the runner and the enumerators. One step runs
/// one event (memory access or barrier arrival) of one thread.
class ExecutionState {
public:
    ExecutionState(const litmus::MaterializedProgram& program, const ShadowLayout& layout = {});

    const litmus::MaterializedProgram& program() const { return *program_; }
    const std::vector<ThreadState>& threads() const { return threads_; }

    bool runnable(ThreadId t) const { return threads_[t].status == ThreadStatus::Runnable; }
    std::vector<ThreadId> runnable_threads() const;
    bool finished() const;

    /// Throws Deadlock when nothing can run but some thread is not done.
    void check_progress() const;

    struct StepResult {
        std::optional<AccessInfo> access;
        bool barrier_completed = false;
        Scope scope = Scope::Block;
        std::vector<ThreadId> participants; // when barrier_completed
        bool overflow = false;              // a clock saturated at this barrier
    };

    /// Throws InvalidSchedule if `t` is not runnable.
    StepResult step(ThreadId t);

private:
    bool in_scope(ThreadId a, ThreadId b, Scope scope) const;
    void settle(ThreadId t);

    const litmus::MaterializedProgram* program_;
    ShadowLayout layout_;
    std::vector<ThreadState> threads_;
};

RunResult run_schedule(const litmus::MaterializedProgram& program, const Schedule& schedule, Detector& detector,
                       const RunOptions& options = {});
RunResult run_schedule(const litmus::KernelProgram& program, const Schedule& schedule, Detector& detector,
                       const RunOptions& options = {});

/// Uniform pick among runnable threads at each step (Rng over mt19937_64).
std::vector<ThreadId> random_schedule(const litmus::MaterializedProgram& program, std::uint64_t seed);

struct EnumerationResult {
    std::uint64_t count = 0;
    bool truncated = false;
};

/// Depth-first over runnable sets, lower gtids first. The callback returns
/// false to stop early. Stops with truncated=true after `limit` schedules.
EnumerationResult for_each_schedule(const litmus::MaterializedProgram& program, std::optional<std::uint64_t> limit,
                                    const std::function<bool(const std::vector<ThreadId>&)>& visit);

struct ScheduleSet {
    std::vector<std::vector<ThreadId>> schedules;
    bool truncated = false;
};

ScheduleSet enumerate_schedules(const litmus::MaterializedProgram& program, std::optional<std::uint64_t> limit = {});

} // namespace hirace
