// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "hirace/oracle.hpp"

#include <algorithm>
#include <map>

namespace hirace::oracle {

std::string format_pair(const RacePair& p, const litmus::AddressSpace& names) {
    return names.name(p.a.addr) + " " + std::to_string(p.a.tid) + "#" + std::to_string(p.a.seq) + " " +
           kind_letter(p.a.kind) + " × " + std::to_string(p.b.tid) + "#" + std::to_string(p.b.seq) + " " +
           kind_letter(p.b.kind);
}

std::vector<AccessEvent> access_events(const litmus::MaterializedProgram& program) {
    std::vector<AccessEvent> out;
    for (ThreadId t = 0; t < program.threads.size(); ++t) {
        if (!program.present[t]) continue;
        std::uint32_t bc = 0, wc = 0;
        const auto& evs = program.threads[t];
        for (std::uint32_t i = 0; i < evs.size(); ++i) {
            const auto& e = evs[i];
            if (e.kind == litmus::EventKind::SyncThreads) ++bc;
            else if (e.kind == litmus::EventKind::SyncWarp) ++wc;
            else out.push_back({t, i, e.addr, e.access_kind(), bc, wc, e.instr});
        }
    }
    return out;
}

bool hb_ordered(const AccessEvent& x, const AccessEvent& y, const litmus::GridConfig& grid) {
    if (x.tid == y.tid) return true;
    const auto cx = litmus::coord_of(grid, x.tid);
    const auto cy = litmus::coord_of(grid, y.tid);
    if (cx.block != cy.block) return false;
    if (x.bc != y.bc) return true;
    return cx.warp == cy.warp && x.wc != y.wc;
}

void check_barrier_uniformity(const litmus::MaterializedProgram& program) {
    ExecutionState st(program, ShadowLayout{4, 4, 28, 28});
    while (!st.finished()) {
        st.check_progress();
        st.step(st.runnable_threads().front());
    }
}

std::vector<RacePair> static_hb_races(const litmus::MaterializedProgram& program) {
    check_barrier_uniformity(program);
    std::map<Address, std::vector<AccessEvent>> by_addr;
    for (const auto& e : access_events(program)) by_addr[e.addr].push_back(e);
    std::vector<RacePair> out;
    for (const auto& [addr, evs] : by_addr) {
        for (std::size_t i = 0; i < evs.size(); ++i) {
            for (std::size_t j = i + 1; j < evs.size(); ++j) {
                const auto& x = evs[i];
                const auto& y = evs[j];
                if (!conflicts(x.kind, y.kind) || hb_ordered(x, y, program.grid)) continue;
                out.push_back({x, y}); // access_events is sorted by (tid, seq)
            }
        }
    }
    return out;
}

std::vector<RacePair> static_hb_races(const litmus::KernelProgram& program) {
    return static_hb_races(litmus::materialize_threads(program));
}

namespace {

std::vector<std::vector<std::uint32_t>> initial_clocks(std::size_t n) {
    std::vector<std::vector<std::uint32_t>> c(n, std::vector<std::uint32_t>(n, 0));
    for (std::size_t t = 0; t < n; ++t) c[t][t] = 1;
    return c;
}

void join_at_barrier(std::vector<std::vector<std::uint32_t>>& clocks, std::span<const ThreadId> participants) {
    if (participants.empty()) return;
    std::vector<std::uint32_t> joined(clocks.front().size(), 0);
    for (ThreadId p : participants)
        for (std::size_t i = 0; i < joined.size(); ++i) joined[i] = std::max(joined[i], clocks[p][i]);
    for (ThreadId p : participants) {
        clocks[p] = joined;
        ++clocks[p][p];
    }
}

std::size_t clocks_bytes(const std::vector<std::vector<std::uint32_t>>& clocks) {
    std::size_t n = 0;
    for (const auto& c : clocks) n += c.size() * sizeof(std::uint32_t);
    return n;
}

constexpr AccessKind kKinds[] = {AccessKind::Write, AccessKind::Read, AccessKind::Atomic};

} // namespace

VectorClockDetector::VectorClockDetector(const DetectorContext& ctx)
    : clocks_(initial_clocks(ctx.grid.total_threads())), history_(ctx.addresses), reported_(ctx.addresses, false),
      threads_(ctx.grid.total_threads()), report_all_(ctx.report_all) {}

std::optional<RaceReport> VectorClockDetector::on_access(const AccessInfo& a) {
    auto& h = history_.at(a.addr);
    if (h.empty()) h.resize(kAccessKindCount * threads_);
    const auto& mine = clocks_[a.tid];
    std::optional<RaceReport> report;
    for (AccessKind k : kKinds) {
        if (!conflicts(k, a.kind) || report) continue;
        for (ThreadId u = 0; u < threads_ && !report; ++u) {
            const Stamp& s = h[static_cast<std::size_t>(k) * threads_ + u];
            if (u == a.tid || s.epoch == 0 || s.epoch <= mine[u]) continue;
            report = RaceReport{"vclock", a.addr, a.tid, a.kind, a.instr, std::string(1, kind_letter(k)), u, s.bc, s.wc};
        }
    }
    h[static_cast<std::size_t>(a.kind) * threads_ + a.tid] = {mine[a.tid], a.bc, a.wc};
    if (report && !report_all_) {
        if (reported_[a.addr]) return std::nullopt;
        reported_[a.addr] = true;
    }
    return report;
}

void VectorClockDetector::on_barrier(Scope, std::span<const ThreadId> participants) {
    join_at_barrier(clocks_, participants);
}

DetectorStats VectorClockDetector::finalize() const {
    std::size_t bytes = clocks_bytes(clocks_);
    for (const auto& h : history_) bytes += h.size() * sizeof(Stamp);
    return {bytes, 0};
}

FiniteHistoryDetector::FiniteHistoryDetector(const DetectorContext& ctx, unsigned k)
    : clocks_(initial_clocks(ctx.grid.total_threads())), cells_(ctx.addresses), reported_(ctx.addresses, false), k_(k),
      report_all_(ctx.report_all) {
    if (k == 0) throw DetectorSpecError("finite history needs at least one slot");
}

std::optional<RaceReport> FiniteHistoryDetector::on_access(const AccessInfo& a) {
    Cell& cell = cells_.at(a.addr);
    const auto& mine = clocks_[a.tid];
    std::optional<RaceReport> report;
    auto check = [&](const Slot& s) {
        if (report || s.tid == a.tid || !conflicts(s.kind, a.kind) || s.epoch <= mine[s.tid]) return;
        report = RaceReport{name(), a.addr, a.tid, a.kind, a.instr, std::string(1, kind_letter(s.kind)), s.tid,
                            s.bc, s.wc};
    };
    if (cell.writer) check(*cell.writer);
    for (const auto& s : cell.readers) check(s);
    for (const auto& s : cell.atomics) check(s);

    const Slot slot{a.tid, mine[a.tid], a.kind, a.bc, a.wc};
    if (a.kind == AccessKind::Write) {
        cell.writer = slot;
    } else {
        auto& q = a.kind == AccessKind::Read ? cell.readers : cell.atomics;
        auto same = std::find_if(q.begin(), q.end(), [&](const Slot& s) { return s.tid == a.tid; });
        if (same != q.end()) q.erase(same);
        else if (q.size() >= k_) q.pop_front();
        q.push_back(slot);
    }
    if (report && !report_all_) {
        if (reported_[a.addr]) return std::nullopt;
        reported_[a.addr] = true;
    }
    return report;
}

void FiniteHistoryDetector::on_barrier(Scope, std::span<const ThreadId> participants) {
    join_at_barrier(clocks_, participants);
}

DetectorStats FiniteHistoryDetector::finalize() const {
    std::size_t bytes = clocks_bytes(clocks_);
    for (const auto& c : cells_) bytes += (c.readers.size() + c.atomics.size() + (c.writer ? 1 : 0)) * sizeof(Slot);
    return {bytes, 0};
}

RunResult vclock_check(const litmus::MaterializedProgram& program, const Schedule& schedule) {
    DetectorContext ctx;
    ctx.grid = program.grid;
    ctx.addresses = program.addresses.size();
    VectorClockDetector det(ctx);
    return run_schedule(program, schedule, det);
}

RunResult finite_history_check(const litmus::MaterializedProgram& program, const Schedule& schedule, unsigned k) {
    DetectorContext ctx;
    ctx.grid = program.grid;
    ctx.addresses = program.addresses.size();
    FiniteHistoryDetector det(ctx, k);
    return run_schedule(program, schedule, det);
}

} // namespace hirace::oracle
