// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "hirace/shadow.hpp"

#include <algorithm>

namespace hirace {

ShadowLayout ShadowLayout::from_flags(std::optional<unsigned> state_bits, std::optional<unsigned> tid_bits,
                                      std::optional<unsigned> bc_bits, std::optional<unsigned> wc_bits) {
    ShadowLayout l;
    l.state_bits = state_bits.value_or(l.state_bits);
    l.tid_bits = tid_bits.value_or(l.tid_bits);
    l.bc_bits = bc_bits.value_or(l.bc_bits);
    l.wc_bits = wc_bits.value_or(l.wc_bits);
    // Unset fields absorb the difference to 64 bits: tid first, then wc, then bc.
    int diff = 64 - static_cast<int>(l.state_bits + l.tid_bits + l.bc_bits + l.wc_bits);
    const std::pair<bool, unsigned*> absorbers[] = {{!tid_bits, &l.tid_bits}, {!wc_bits, &l.wc_bits}, {!bc_bits, &l.bc_bits}};
    for (const auto& [unset, width] : absorbers) {
        if (!unset || diff == 0) continue;
        const int target = std::clamp(static_cast<int>(*width) + diff, 1, 32);
        diff -= target - static_cast<int>(*width);
        *width = static_cast<unsigned>(target);
    }
    l.validate();
    return l;
}

void ShadowLayout::validate() const {
    if (state_bits < 1 || state_bits > 8) throw LayoutError("state width must be in [1, 8]");
    if (tid_bits < 1 || tid_bits > 32) throw LayoutError("tid width must be in [1, 32]");
    if (bc_bits < 1 || bc_bits > 32) throw LayoutError("bc width must be in [1, 32]");
    if (wc_bits < 1 || wc_bits > 32) throw LayoutError("wc width must be in [1, 32]");
    const unsigned sum = state_bits + tid_bits + bc_bits + wc_bits;
    if (sum != 64)
        throw LayoutError("shadow field widths must sum to 64, got " + std::to_string(state_bits) + "+" +
                          std::to_string(tid_bits) + "+" + std::to_string(bc_bits) + "+" + std::to_string(wc_bits) +
                          "=" + std::to_string(sum));
}

ShadowWord pack_shadow(const ShadowLayout& l, const ShadowFields& f) {
    if (f.state > l.max_state()) throw FieldOverflow("state " + std::to_string(f.state) + " exceeds " + std::to_string(l.state_bits) + " bits");
    if (f.tid > l.max_tid()) throw FieldOverflow("tid " + std::to_string(f.tid) + " exceeds " + std::to_string(l.tid_bits) + " bits");
    if (f.bc > l.max_bc()) throw FieldOverflow("bc " + std::to_string(f.bc) + " exceeds " + std::to_string(l.bc_bits) + " bits");
    if (f.wc > l.max_wc()) throw FieldOverflow("wc " + std::to_string(f.wc) + " exceeds " + std::to_string(l.wc_bits) + " bits");
    ShadowWord w = f.state;
    w = (w << l.tid_bits) | f.tid;
    w = (w << l.bc_bits) | f.bc;
    w = (w << l.wc_bits) | f.wc;
    return w;
}

ShadowFields unpack_shadow(const ShadowLayout& l, ShadowWord w) {
    ShadowFields f;
    f.wc = static_cast<std::uint32_t>(w & l.max_wc());
    w >>= l.wc_bits;
    f.bc = static_cast<std::uint32_t>(w & l.max_bc());
    w >>= l.bc_bits;
    f.tid = static_cast<ThreadId>(w & l.max_tid());
    w >>= l.tid_bits;
    f.state = static_cast<fsm::StateId>(w & l.max_state());
    return f;
}

ThreadRelation compare_tids(ThreadId a, ThreadId b, const litmus::GridConfig& grid) {
    const auto ca = litmus::coord_of(grid, a);
    const auto cb = litmus::coord_of(grid, b);
    if (a == b) return ThreadRelation::Self;
    if (ca.block != cb.block) return ThreadRelation::Global;
    if (ca.warp != cb.warp) return ThreadRelation::Block;
    return ThreadRelation::Warp;
}

SyncStatus check_sync(ThreadRelation rel, std::uint32_t bc, std::uint32_t old_bc, std::uint32_t wc,
                      std::uint32_t old_wc) {
    if (rel == ThreadRelation::Global) return SyncStatus::Us;
    if (bc < old_bc) throw ModelViolation("block clock went backwards (" + std::to_string(bc) + " < " + std::to_string(old_bc) + ")");
    if (bc > old_bc) return SyncStatus::Bs;
    if (rel == ThreadRelation::Block) return SyncStatus::Us;
    if (wc < old_wc) throw ModelViolation("warp clock went backwards (" + std::to_string(wc) + " < " + std::to_string(old_wc) + ")");
    return wc > old_wc ? SyncStatus::Ws : SyncStatus::Us;
}

ShadowStep shadow_transition(const ShadowLayout& layout, const fsm::FsmTable& machine,
                             const litmus::GridConfig& grid, ShadowWord old_word, AccessKind kind, ThreadId tid,
                             std::uint32_t bc, std::uint32_t wc) {
    ShadowStep s;
    s.before = unpack_shadow(layout, old_word);
    if (s.before.state >= machine.state_count())
        throw ModelViolation("shadow word holds unknown state " + std::to_string(s.before.state));
    s.label.kind = kind;
    if (s.before.state != machine.init()) {
        s.label.rel = compare_tids(tid, s.before.tid, grid);
        s.label.sync = check_sync(s.label.rel, bc, s.before.bc, wc, s.before.wc);
    }
    const fsm::StateId next = machine.next(s.before.state, s.label);
    if (next == fsm::kNoTransition)
        throw ModelViolation("no transition from " + machine.name(s.before.state) + " on " +
                             fsm::label_name(fsm::label_index(s.label)));
    s.after = {next, tid, bc, wc};
    s.entered_race = next == machine.race() && s.before.state != machine.race();
    return s;
}

ShadowTable::ShadowTable(std::size_t addresses)
    : words_(std::make_unique<std::atomic<ShadowWord>[]>(addresses)), size_(addresses) {
    for (std::size_t i = 0; i < addresses; ++i) words_[i].store(0, std::memory_order_relaxed);
}

ShadowUpdate update_shadow(ShadowTable& table, Address addr, AccessKind kind, ThreadId tid, std::uint32_t bc,
                           std::uint32_t wc, const fsm::FsmTable& machine, const litmus::GridConfig& grid,
                           const ShadowLayout& layout, const CasHook& hook) {
    if (addr >= table.size()) throw Error("address " + std::to_string(addr) + " is not monitored");
    ShadowUpdate u;
    ShadowWord old_word = table.load(addr);
    for (;;) {
        u.step = shadow_transition(layout, machine, grid, old_word, kind, tid, bc, wc);
        const ShadowWord new_word = pack_shadow(layout, u.step.after);
        if (hook) hook(addr, u.retries);
        if (table.compare_exchange(addr, old_word, new_word)) {
            u.old_word = old_word;
            u.new_word = new_word;
            return u;
        }
        ++u.retries; // old_word now holds the fresh value
    }
}

bool on_barrier(std::uint32_t& clock, unsigned bits) {
    const std::uint64_t max = bits >= 32 ? 0xFFFFFFFFull : (1ull << bits) - 1;
    if (clock >= max) {
        clock = static_cast<std::uint32_t>(max);
        return false;
    }
    ++clock;
    return true;
}

} // namespace hirace
