// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "hirace/model.hpp"
#include "hirace/rng.hpp"

#include <charconv>
#include <sstream>

namespace hirace {

std::vector<ThreadId> parse_schedule(std::string_view text) {
    std::vector<ThreadId> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        ThreadId t = 0;
        auto [p, ec] = std::from_chars(text.data() + i, text.data() + j, t);
        if (ec != std::errc() || p != text.data() + j)
            throw InvalidSchedule("bad schedule entry '" + std::string(text.substr(i, j - i)) + "'");
        out.push_back(t);
        i = j;
    }
    return out;
}

std::string format_schedule(const std::vector<ThreadId>& picks) {
    std::string s;
    for (std::size_t i = 0; i < picks.size(); ++i) {
        if (i) s += ' ';
        s += std::to_string(picks[i]);
    }
    return s;
}

const char* verdict_name(Verdict v) { return v == Verdict::Racy ? "Racy" : "RaceFree"; }

Deadlock::Deadlock(const std::string& what, std::vector<ThreadId> waiting)
    : Error(what), waiting_(std::move(waiting)) {}

ExecutionState::ExecutionState(const litmus::MaterializedProgram& program, const ShadowLayout& layout)
    : program_(&program), layout_(layout) {
    const auto n = static_cast<ThreadId>(program.threads.size());
    threads_.resize(n);
    for (ThreadId t = 0; t < n; ++t) {
        threads_[t].coord = litmus::coord_of(program.grid, t);
        settle(t);
    }
}

void ExecutionState::settle(ThreadId t) {
    ThreadState& s = threads_[t];
    if (!program_->present[t] || s.pc >= program_->threads[t].size()) s.status = ThreadStatus::Done;
}

std::vector<ThreadId> ExecutionState::runnable_threads() const {
    std::vector<ThreadId> out;
    for (ThreadId t = 0; t < threads_.size(); ++t)
        if (threads_[t].status == ThreadStatus::Runnable) out.push_back(t);
    return out;
}

bool ExecutionState::finished() const {
    for (const auto& s : threads_)
        if (s.status != ThreadStatus::Done) return false;
    return true;
}

void ExecutionState::check_progress() const {
    std::vector<ThreadId> waiting;
    for (ThreadId t = 0; t < threads_.size(); ++t) {
        if (threads_[t].status == ThreadStatus::Runnable) return;
        if (threads_[t].status != ThreadStatus::Done) waiting.push_back(t);
    }
    if (waiting.empty()) return;
    std::ostringstream os;
    os << "deadlock: threads";
    for (ThreadId t : waiting) {
        const auto& s = threads_[t];
        os << ' ' << t << '@'
           << (s.status == ThreadStatus::AtBlockBarrier ? "syncthreads" : "syncwarp") << '#'
           << program_->threads[t][s.pc].instr;
    }
    os << " wait for a barrier that cannot complete";
    throw Deadlock(os.str(), std::move(waiting));
}

bool ExecutionState::in_scope(ThreadId a, ThreadId b, Scope scope) const {
    const auto& ca = threads_[a].coord;
    const auto& cb = threads_[b].coord;
    if (ca.block != cb.block) return false;
    return scope == Scope::Block || ca.warp == cb.warp;
}

ExecutionState::StepResult ExecutionState::step(ThreadId t) {
    if (t >= threads_.size()) throw InvalidSchedule("thread " + std::to_string(t) + " does not exist");
    if (threads_[t].status != ThreadStatus::Runnable)
        throw InvalidSchedule("thread " + std::to_string(t) + " is not runnable");
    ThreadState& self = threads_[t];
    const litmus::Event& ev = program_->threads[t][self.pc];
    StepResult r;
    if (ev.is_access()) {
        r.access = AccessInfo{ev.addr, ev.access_kind(), t, self.bc, self.wc, ev.instr};
        ++self.pc;
        settle(t);
        return r;
    }

    const Scope scope = ev.kind == litmus::EventKind::SyncThreads ? Scope::Block : Scope::Warp;
    const ThreadStatus waiting = scope == Scope::Block ? ThreadStatus::AtBlockBarrier : ThreadStatus::AtWarpBarrier;
    self.status = waiting;
    for (ThreadId u = 0; u < threads_.size(); ++u) {
        if (!program_->present[u] || !in_scope(t, u, scope)) continue;
        if (threads_[u].status != waiting) return r;
    }
    r.barrier_completed = true;
    r.scope = scope;
    for (ThreadId u = 0; u < threads_.size(); ++u) {
        if (!program_->present[u] || !in_scope(t, u, scope)) continue;
        ThreadState& s = threads_[u];
        const bool ok = scope == Scope::Block ? on_barrier(s.bc, layout_.bc_bits) : on_barrier(s.wc, layout_.wc_bits);
        r.overflow |= !ok;
        s.status = ThreadStatus::Runnable;
        ++s.pc;
        settle(u);
        r.participants.push_back(u);
    }
    return r;
}

namespace {

RunResult execute(const litmus::MaterializedProgram& program, const Schedule& schedule, Detector& detector,
                  const RunOptions& options) {
    ExecutionState st(program, options.layout);
    RunResult res;
    res.detector = detector.name();
    Rng rng(schedule.seed);
    std::size_t i = 0;
    for (;;) {
        if (st.finished()) break;
        st.check_progress();
        ThreadId t;
        if (i < schedule.picks.size()) {
            t = schedule.picks[i];
        } else if (schedule.random) {
            const auto ready = st.runnable_threads();
            t = ready[rng.below(ready.size())];
        } else {
            t = st.runnable_threads().front();
        }
        ++i;
        const auto r = st.step(t);
        res.schedule.push_back(t);
        ++res.stats.events;
        if (r.access && !res.detection_disabled) {
            if (auto rep = detector.on_access(*r.access)) res.reports.push_back(std::move(*rep));
        }
        if (r.barrier_completed) {
            ++res.stats.barriers;
            if (r.overflow && !res.detection_disabled) {
                res.clock_overflow = true;
                res.detection_disabled = true;
                const bool block = r.scope == Scope::Block;
                res.warnings.push_back(std::string(block ? "block" : "warp") + " clock overflow (" +
                                       (block ? "bc-bits=" : "wc-bits=") +
                                       std::to_string(block ? options.layout.bc_bits : options.layout.wc_bits) +
                                       "); race detection disabled after " + std::to_string(res.reports.size()) +
                                       " report(s)");
            }
            if (!res.detection_disabled) detector.on_barrier(r.scope, r.participants);
        }
    }
    if (i < schedule.picks.size())
        throw InvalidSchedule("schedule has " + std::to_string(schedule.picks.size()) + " picks but the run ended after " +
                              std::to_string(i));
    res.stats.cas_retries = detector.finalize().cas_retries;
    res.verdict = res.reports.empty() ? Verdict::RaceFree : Verdict::Racy;
    return res;
}

} // namespace

RunResult run_schedule(const litmus::MaterializedProgram& program, const Schedule& schedule, Detector& detector,
                       const RunOptions& options) {
    return execute(program, schedule, detector, options);
}

RunResult run_schedule(const litmus::KernelProgram& program, const Schedule& schedule, Detector& detector,
                       const RunOptions& options) {
    const auto m = litmus::materialize_threads(program);
    return execute(m, schedule, detector, options);
}

std::vector<ThreadId> random_schedule(const litmus::MaterializedProgram& program, std::uint64_t seed) {
    NullDetector none;
    return execute(program, Schedule::random_seed(seed), none, {}).schedule;
}

namespace {

struct Enumerator {
    const std::function<bool(const std::vector<ThreadId>&)>& visit;
    std::optional<std::uint64_t> limit;
    EnumerationResult result;
    std::vector<ThreadId> path;
    bool stop = false;

    void run(const ExecutionState& st) {
        if (stop) return;
        if (st.finished()) {
            if (limit && result.count >= *limit) {
                result.truncated = true;
                stop = true;
                return;
            }
            ++result.count;
            if (!visit(path)) stop = true;
            return;
        }
        st.check_progress();
        for (ThreadId t : st.runnable_threads()) {
            ExecutionState next = st;
            next.step(t);
            path.push_back(t);
            run(next);
            path.pop_back();
            if (stop) return;
        }
    }
};

} // namespace

EnumerationResult for_each_schedule(const litmus::MaterializedProgram& program, std::optional<std::uint64_t> limit,
                                    const std::function<bool(const std::vector<ThreadId>&)>& visit) {
    Enumerator e{visit, limit, {}, {}, false};
    // Clocks never matter for enumeration; wide widths avoid saturation.
    e.run(ExecutionState(program, ShadowLayout{4, 4, 28, 28}));
    return e.result;
}

ScheduleSet enumerate_schedules(const litmus::MaterializedProgram& program, std::optional<std::uint64_t> limit) {
    ScheduleSet set;
    const auto r = for_each_schedule(program, limit, [&set](const std::vector<ThreadId>& s) {
        set.schedules.push_back(s);
        return true;
    });
    set.truncated = r.truncated;
    return set;
}

} // namespace hirace
