// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hirace/fsm.hpp"
#include "hirace/litmus.hpp"
#include "hirace/types.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace hirace {

using ShadowWord = std::uint64_t;

/// Field widths of the packed shadow word. The state sits in the most
/// significant bits, followed by tid, bc and wc.
struct ShadowLayout {
    unsigned state_bits = 5;
    unsigned tid_bits = 27;
    unsigned bc_bits = 16;
    unsigned wc_bits = 16;

    /// Unset widths start at their defaults; unset fields then absorb the
    /// difference to 64 bits, tid first (up to 32), then wc, then bc.
    /// Throws LayoutError.
    static ShadowLayout from_flags(std::optional<unsigned> state_bits, std::optional<unsigned> tid_bits,
                                   std::optional<unsigned> bc_bits, std::optional<unsigned> wc_bits);

    void validate() const;

    std::uint64_t max_state() const { return mask(state_bits); }
    std::uint64_t max_tid() const { return mask(tid_bits); }
    std::uint64_t max_bc() const { return mask(bc_bits); }
    std::uint64_t max_wc() const { return mask(wc_bits); }

    friend bool operator==(const ShadowLayout&, const ShadowLayout&) = default;

private:
    static std::uint64_t mask(unsigned bits) { return bits >= 64 ? ~0ull : (1ull << bits) - 1; }
};

class LayoutError : public Error {
public:
    using Error::Error;
};

/// A field does not fit its configured width.
class FieldOverflow : public Error {
public:
    using Error::Error;
};

struct ShadowFields {
    fsm::StateId state = 0;
    ThreadId tid = 0;
    std::uint32_t bc = 0;
    std::uint32_t wc = 0;

    friend bool operator==(const ShadowFields&, const ShadowFields&) = default;
};

ShadowWord pack_shadow(const ShadowLayout& layout, const ShadowFields& fields);
ShadowFields unpack_shadow(const ShadowLayout& layout, ShadowWord word);

/// Throws Error when either gtid is outside the grid.
ThreadRelation compare_tids(ThreadId a, ThreadId b, const litmus::GridConfig& grid);

/// Bs (any same-block relation, bc advanced) takes precedence over Ws
/// (same warp including Self, bc equal, wc advanced). Clocks running
/// backwards within a scope throw ModelViolation.
SyncStatus check_sync(ThreadRelation rel, std::uint32_t bc, std::uint32_t old_bc, std::uint32_t wc,
                      std::uint32_t old_wc);

/// One evaluation of the transition function on a stored word.
struct ShadowStep {
    ShadowFields before;
    ShadowFields after;
    fsm::TransitionLabel label; // meaningless when before.state is INIT
    bool entered_race = false;
};

/// Pure part of the update: the word `old_word` followed by one access. An
/// INIT word skips the relation and sync computation. Throws ModelViolation
/// when the label has no transition.
ShadowStep shadow_transition(const ShadowLayout& layout, const fsm::FsmTable& machine,
                             const litmus::GridConfig& grid, ShadowWord old_word, AccessKind kind, ThreadId tid,
                             std::uint32_t bc, std::uint32_t wc);

/// One atomic word per monitored address, all starting as INIT with zero
/// clocks (the all-zero word).
class ShadowTable {
public:
    explicit ShadowTable(std::size_t addresses);

    std::size_t size() const { return size_; }
    ShadowWord load(Address addr) const { return words_[addr].load(std::memory_order_acquire); }
    bool compare_exchange(Address addr, ShadowWord& expected, ShadowWord desired) {
        return words_[addr].compare_exchange_strong(expected, desired, std::memory_order_acq_rel,
                                                    std::memory_order_acquire);
    }
    /// Bytes of metadata per monitored address.
    static constexpr std::size_t bytes_per_address() { return sizeof(std::atomic<ShadowWord>); }
    std::size_t metadata_bytes() const { return size_ * bytes_per_address(); }

private:
    std::unique_ptr<std::atomic<ShadowWord>[]> words_;
    std::size_t size_;
};

struct ShadowUpdate {
    ShadowStep step;       // the committed transition
    ShadowWord old_word = 0;
    ShadowWord new_word = 0;
    unsigned retries = 0; // failed compare-and-swap attempts
};

/// Called between computing the new word and the compare-and-swap; lets
/// tests and the simulator inject a concurrent commit.
using CasHook = std::function<void(Address addr, unsigned attempt)>;

/// Read, compute, compare-and-swap; on failure recompute from the fresh word.
ShadowUpdate update_shadow(ShadowTable& table, Address addr, AccessKind kind, ThreadId tid, std::uint32_t bc,
                           std::uint32_t wc, const fsm::FsmTable& machine, const litmus::GridConfig& grid,
                           const ShadowLayout& layout, const CasHook& hook = {});

/// Advance a scalar clock by one barrier. Returns false, leaving the clock
/// at its maximum, when the increment would not fit `bits`.
bool on_barrier(std::uint32_t& clock, unsigned bits);

} // namespace hirace
