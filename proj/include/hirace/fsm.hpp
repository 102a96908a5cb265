// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hirace/types.hpp"

#include <array>
#include <bitset>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hirace::fsm {

// Label index layout (6 bits, 48 slots):
//
//   bit 5..4  access kind    R=0 W=1 A=2
//   bit 3..2  sync status    Us=0 Ws=1 Bs=2   (3 is unused)
//   bit 1..0  relation       S=0 W=1 B=2 G=3
//
// (R, Us, Self) is index 0. Of the 36 (kind, sync, rel) triples, 27 are
// feasible: Bs never pairs with Global, and Ws only pairs with Self/Warp.
inline constexpr unsigned kLabelSlots = 48;

struct TransitionLabel {
    AccessKind kind = AccessKind::Read;
    SyncStatus sync = SyncStatus::Us;
    ThreadRelation rel = ThreadRelation::Self;

    friend bool operator==(const TransitionLabel&, const TransitionLabel&) = default;
};

constexpr unsigned label_index(AccessKind kind, SyncStatus sync, ThreadRelation rel) {
    return (static_cast<unsigned>(kind) << 4) | (static_cast<unsigned>(sync) << 2) |
           static_cast<unsigned>(rel);
}

constexpr unsigned label_index(const TransitionLabel& l) {
    return label_index(l.kind, l.sync, l.rel);
}

/// True when the slot decodes to a (kind, sync, rel) triple.
constexpr bool is_label_slot(unsigned idx) {
    return idx < kLabelSlots && ((idx >> 2) & 3u) != 3u;
}

constexpr bool is_feasible(SyncStatus sync, ThreadRelation rel) {
    switch (sync) {
    case SyncStatus::Us: return true;
    case SyncStatus::Ws: return rel == ThreadRelation::Self || rel == ThreadRelation::Warp;
    case SyncStatus::Bs: return rel != ThreadRelation::Global;
    }
    return false;
}

constexpr bool is_feasible(unsigned idx) {
    return is_label_slot(idx) &&
           is_feasible(static_cast<SyncStatus>((idx >> 2) & 3u), static_cast<ThreadRelation>(idx & 3u));
}

TransitionLabel decode_label(unsigned idx);

/// Subscript notation, e.g. `W{Bs,B}`.
std::string label_name(unsigned idx);

using Alphabet = std::bitset<kLabelSlots>;

/// Every feasible label.
Alphabet feasible_alphabet();

/// Feasible labels in the product of the given axes.
Alphabet make_alphabet(std::initializer_list<AccessKind> kinds, std::initializer_list<SyncStatus> syncs,
                       std::initializer_list<ThreadRelation> rels);

using StateId = std::uint8_t;
inline constexpr StateId kNoTransition = 0xFF;
inline constexpr unsigned kMaxStates = 0xFF;

/// Malformed machine description (bad file, out-of-range index, partial table).
class TableError : public Error {
public:
    using Error::Error;
};

/// Flat transition table indexed by `state * kLabelSlots + label`. State 0 is
/// INIT. Labels outside the alphabet map to kNoTransition, which the shadow
/// engine treats as a model violation.
///
/// Construction only checks shape and totality over the alphabet; semantic
/// properties (absorbing race state, INIT row uniformity) are checked by
/// structural checks so that faulty machines can still be represented.
class FsmTable {
public:
    FsmTable(std::vector<std::string> names, StateId race, Alphabet alphabet, std::vector<StateId> table);

    unsigned state_count() const { return static_cast<unsigned>(names_.size()); }
    StateId init() const { return 0; }
    StateId race() const { return race_; }
    const Alphabet& alphabet() const { return alphabet_; }
    const std::string& name(StateId s) const { return names_.at(s); }
    const std::vector<std::string>& names() const { return names_; }
    std::optional<StateId> find(std::string_view name) const;

    StateId next(StateId s, unsigned label) const { return table_[s * kLabelSlots + label]; }
    StateId next(StateId s, const TransitionLabel& l) const { return next(s, label_index(l)); }

    /// Copy with one transition rerouted. Used for fault injection.
    FsmTable with_transition(StateId s, unsigned label, StateId dst) const;

    const std::vector<StateId>& raw() const { return table_; }

    friend bool operator==(const FsmTable&, const FsmTable&) = default;

private:
    std::vector<std::string> names_;
    StateId race_;
    Alphabet alphabet_;
    std::vector<StateId> table_;
};

FsmTable reference_machine_fig1();
FsmTable reference_machine_fig4();

// Abstract access history used to derive the full machine. Every field is
// relative to the most recent accessor L.
namespace history {

enum class Spread : std::uint8_t { None = 0, Self = 1, Warp = 2, Block = 3 };

struct KindHistory {
    Spread unordered = Spread::None; // same block as L, not barrier-ordered before L
    bool warp_ordered = false;       // L's warp, ordered before L by a warp barrier only
    bool block_ordered = false;      // L's block, ordered before L by a block barrier
    bool foreign = false;            // some other block

    bool empty() const { return unordered == Spread::None && !warp_ordered && !block_ordered && !foreign; }
    friend bool operator==(const KindHistory&, const KindHistory&) = default;
};

struct AbstractHistory {
    std::array<KindHistory, kAccessKindCount> kinds{};
    bool race = false;

    /// 5 bits per kind plus one race bit.
    std::uint16_t encode() const;
    static AbstractHistory decode(std::uint16_t code);
    std::string describe() const;

    friend bool operator==(const AbstractHistory&, const AbstractHistory&) = default;
};

/// Transfer function: the history after one more access labelled `label`.
AbstractHistory step(const AbstractHistory& h, const TransitionLabel& label);

} // namespace history

struct GeneratorOptions {
    unsigned state_cap = 4096; // closure size that signals a domain bug
};

struct GenerationStats {
    unsigned closure_states = 0; // reachable abstract histories (RACE counted once)
    unsigned minimized_states = 0;
};

/// Reachable closure of the abstract history under every feasible label,
/// minimized with RACE as the only accepting class.
FsmTable generate_full_machine(const GeneratorOptions& options = {}, GenerationStats* stats = nullptr);

/// Reachable part of `machine` over a sub-alphabet.
FsmTable restrict_machine(const FsmTable& machine, const Alphabet& alphabet);

/// Moore partition refinement (RACE vs the rest), reachable states only,
/// renumbered breadth-first from INIT. Keeps the name of each class's
/// lowest-numbered member.
FsmTable minimize(const FsmTable& machine);

/// Label-preserving bijection from INIT that maps RACE to RACE. Names are
/// ignored.
bool isomorphic(const FsmTable& a, const FsmTable& b);

void write_table(std::ostream& os, const FsmTable& machine);
FsmTable read_table(std::istream& is);
void export_table(const FsmTable& machine, const std::filesystem::path& path);
FsmTable import_table(const std::filesystem::path& path);

/// Human-readable transition dump; self loops are omitted.
std::string dump(const FsmTable& machine);

} // namespace hirace::fsm
