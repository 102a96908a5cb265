// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "hirace/fsm.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace hirace::fsm {

TransitionLabel decode_label(unsigned idx) {
    if (!is_label_slot(idx)) throw TableError("label index " + std::to_string(idx) + " does not decode");
    return {static_cast<AccessKind>(idx >> 4), static_cast<SyncStatus>((idx >> 2) & 3u),
            static_cast<ThreadRelation>(idx & 3u)};
}

std::string label_name(unsigned idx) {
    const TransitionLabel l = decode_label(idx);
    std::string s(1, kind_letter(l.kind));
    s += '{';
    s += sync_name(l.sync);
    s += ',';
    s += relation_name(l.rel);
    s += '}';
    return s;
}

Alphabet feasible_alphabet() {
    Alphabet a;
    for (unsigned i = 0; i < kLabelSlots; ++i)
        if (is_feasible(i)) a.set(i);
    return a;
}

Alphabet make_alphabet(std::initializer_list<AccessKind> kinds, std::initializer_list<SyncStatus> syncs,
                       std::initializer_list<ThreadRelation> rels) {
    Alphabet a;
    for (AccessKind k : kinds)
        for (SyncStatus s : syncs)
            for (ThreadRelation r : rels)
                if (is_feasible(s, r)) a.set(label_index(k, s, r));
    return a;
}

FsmTable::FsmTable(std::vector<std::string> names, StateId race, Alphabet alphabet, std::vector<StateId> table)
    : names_(std::move(names)), race_(race), alphabet_(alphabet), table_(std::move(table)) {
    const std::size_t n = names_.size();
    if (n == 0 || n > kMaxStates) throw TableError("state count out of range: " + std::to_string(n));
    if (race_ >= n) throw TableError("race state index out of range");
    if (table_.size() != n * kLabelSlots) throw TableError("table size does not match state count");
    for (unsigned l = 0; l < kLabelSlots; ++l)
        if (alphabet_.test(l) && !is_feasible(l))
            throw TableError("alphabet contains infeasible label " + std::to_string(l));
    for (std::size_t s = 0; s < n; ++s) {
        for (unsigned l = 0; l < kLabelSlots; ++l) {
            const StateId dst = table_[s * kLabelSlots + l];
            if (alphabet_.test(l)) {
                if (dst == kNoTransition)
                    throw TableError("table is not total: state " + names_[s] + " lacks " + label_name(l));
                if (dst >= n) throw TableError("transition target out of range");
            } else if (dst != kNoTransition) {
                throw TableError("transition on label outside the alphabet");
            }
        }
    }
    std::map<std::string, int> seen;
    for (const auto& nm : names_) {
        if (nm.empty() || nm.find_first_of(" \t\n") != std::string::npos)
            throw TableError("invalid state name '" + nm + "'");
        if (seen[nm]++) throw TableError("duplicate state name " + nm);
    }
}

std::optional<StateId> FsmTable::find(std::string_view name) const {
    for (unsigned s = 0; s < names_.size(); ++s)
        if (names_[s] == name) return static_cast<StateId>(s);
    return std::nullopt;
}

FsmTable FsmTable::with_transition(StateId s, unsigned label, StateId dst) const {
    FsmTable copy = *this;
    copy.table_.at(s * kLabelSlots + label) = dst;
    return copy;
}

// ---------------------------------------------------------------------------
// Hand-coded machines

namespace {

// Unmentioned transitions are self loops.
class MachineBuilder {
public:
    MachineBuilder(std::vector<std::string> names, Alphabet alphabet)
        : names_(std::move(names)), alphabet_(alphabet), table_(names_.size() * kLabelSlots, kNoTransition) {
        for (unsigned s = 0; s < names_.size(); ++s)
            for (unsigned l = 0; l < kLabelSlots; ++l)
                if (alphabet_.test(l)) table_[s * kLabelSlots + l] = static_cast<StateId>(s);
    }

    // Applies to every alphabet label matching the pattern; nullopt is "*".
    MachineBuilder& on(std::string_view from, std::optional<AccessKind> kind, std::optional<SyncStatus> sync,
                       std::optional<ThreadRelation> rel, std::string_view to) {
        const StateId src = id(from);
        const StateId dst = id(to);
        for (unsigned l = 0; l < kLabelSlots; ++l) {
            if (!alphabet_.test(l)) continue;
            const TransitionLabel t = decode_label(l);
            if (kind && *kind != t.kind) continue;
            if (sync && *sync != t.sync) continue;
            if (rel && *rel != t.rel) continue;
            table_[src * kLabelSlots + l] = dst;
        }
        return *this;
    }

    FsmTable build() { return FsmTable(names_, id("RACE"), alphabet_, table_); }

private:
    StateId id(std::string_view name) const {
        for (unsigned s = 0; s < names_.size(); ++s)
            if (names_[s] == name) return static_cast<StateId>(s);
        throw TableError("unknown state " + std::string(name));
    }

    std::vector<std::string> names_;
    Alphabet alphabet_;
    std::vector<StateId> table_;
};

constexpr auto R = AccessKind::Read;
constexpr auto W = AccessKind::Write;
constexpr auto Us = SyncStatus::Us;
constexpr auto Bs = SyncStatus::Bs;
constexpr auto S = ThreadRelation::Self;
constexpr auto B = ThreadRelation::Block;
constexpr auto G = ThreadRelation::Global;
constexpr std::nullopt_t any = std::nullopt;

// Renumber reachable states breadth-first from INIT, labels in index order.
FsmTable canonical(const FsmTable& m) {
    std::vector<int> order(m.state_count(), -1);
    std::vector<StateId> bfs{m.init()};
    order[m.init()] = 0;
    for (std::size_t i = 0; i < bfs.size(); ++i) {
        for (unsigned l = 0; l < kLabelSlots; ++l) {
            if (!m.alphabet().test(l)) continue;
            const StateId d = m.next(bfs[i], l);
            if (order[d] < 0) {
                order[d] = static_cast<int>(bfs.size());
                bfs.push_back(d);
            }
        }
    }
    if (order[m.race()] < 0) {
        order[m.race()] = static_cast<int>(bfs.size());
        bfs.push_back(m.race());
    }
    std::vector<std::string> names;
    std::vector<StateId> table(bfs.size() * kLabelSlots, kNoTransition);
    for (std::size_t i = 0; i < bfs.size(); ++i) {
        names.push_back(m.name(bfs[i]));
        for (unsigned l = 0; l < kLabelSlots; ++l)
            if (m.alphabet().test(l)) table[i * kLabelSlots + l] = static_cast<StateId>(order[m.next(bfs[i], l)]);
    }
    return FsmTable(std::move(names), static_cast<StateId>(order[m.race()]), m.alphabet(), std::move(table));
}

} // namespace

FsmTable reference_machine_fig1() {
    MachineBuilder b({"INIT", "READ", "GREAD", "WRITE", "RACE"}, make_alphabet({R, W}, {Us}, {S, G}));
    b.on("INIT", R, any, any, "READ")
        .on("INIT", W, any, any, "WRITE")
        .on("READ", R, Us, G, "GREAD")
        .on("READ", W, Us, S, "WRITE")
        .on("READ", W, Us, G, "RACE")
        .on("GREAD", W, any, any, "RACE")
        .on("WRITE", any, Us, G, "RACE");
    return canonical(b.build());
}

FsmTable reference_machine_fig4() {
    // SREAD/SBREAD are READ/BREAD reached after a block-synchronized write:
    // the write is still unordered with every other block, so a foreign
    // read races instead of promoting to GREAD.
    MachineBuilder b({"INIT", "READ", "BREAD", "GREAD", "WRITE", "SREAD", "SBREAD", "RACE"},
                     make_alphabet({R, W}, {Us, Bs}, {S, B, G}));
    b.on("INIT", R, any, any, "READ")
        .on("INIT", W, any, any, "WRITE")
        // READ: reads by one thread of the block, or block-ordered history.
        .on("READ", R, Us, B, "BREAD")
        .on("READ", R, any, G, "GREAD")
        .on("READ", W, Us, S, "WRITE")
        .on("READ", W, Bs, any, "WRITE")
        .on("READ", W, Us, B, "RACE")
        .on("READ", W, any, G, "RACE")
        // BREAD: concurrent reads from several threads of one block.
        .on("BREAD", R, Bs, any, "READ")
        .on("BREAD", R, any, G, "GREAD")
        .on("BREAD", W, Bs, any, "WRITE")
        .on("BREAD", W, Us, any, "RACE")
        .on("BREAD", W, any, G, "RACE")
        // GREAD: reads from at least two blocks.
        .on("GREAD", W, any, any, "RACE")
        // WRITE
        .on("WRITE", R, Bs, any, "SREAD")
        .on("WRITE", any, Us, B, "RACE")
        .on("WRITE", any, any, G, "RACE")
        // SREAD / SBREAD
        .on("SREAD", R, Us, B, "SBREAD")
        .on("SREAD", W, Us, S, "WRITE")
        .on("SREAD", W, Bs, any, "WRITE")
        .on("SREAD", W, Us, B, "RACE")
        .on("SREAD", any, any, G, "RACE")
        .on("SBREAD", R, Bs, any, "SREAD")
        .on("SBREAD", W, Bs, any, "WRITE")
        .on("SBREAD", W, Us, any, "RACE")
        .on("SBREAD", any, any, G, "RACE");
    return canonical(b.build());
}

// ---------------------------------------------------------------------------
// Abstract history

namespace history {

namespace {

Spread widen(Spread s, Spread to) { return s == Spread::None ? s : std::max(s, to); }

Spread join(Spread a, Spread b) { return std::max(a, b); }

const char* spread_letter(Spread s) {
    switch (s) {
    case Spread::None: return "-";
    case Spread::Self: return "S";
    case Spread::Warp: return "W";
    case Spread::Block: return "B";
    }
    return "?";
}

} // namespace

std::uint16_t AbstractHistory::encode() const {
    std::uint16_t code = race ? 1u : 0u;
    for (int k = 0; k < kAccessKindCount; ++k) {
        const KindHistory& h = kinds[k];
        const unsigned bits = static_cast<unsigned>(h.unordered) | (h.warp_ordered ? 4u : 0u) |
                              (h.block_ordered ? 8u : 0u) | (h.foreign ? 16u : 0u);
        code |= static_cast<std::uint16_t>(bits << (1 + 5 * k));
    }
    return code;
}

AbstractHistory AbstractHistory::decode(std::uint16_t code) {
    AbstractHistory h;
    h.race = code & 1u;
    for (int k = 0; k < kAccessKindCount; ++k) {
        const unsigned bits = (code >> (1 + 5 * k)) & 31u;
        h.kinds[k] = {static_cast<Spread>(bits & 3u), (bits & 4u) != 0, (bits & 8u) != 0, (bits & 16u) != 0};
    }
    return h;
}

std::string AbstractHistory::describe() const {
    if (race) return "RACE";
    std::string out;
    for (int k = 0; k < kAccessKindCount; ++k) {
        const KindHistory& h = kinds[k];
        if (h.empty()) continue;
        if (!out.empty()) out += '.';
        out += kind_letter(static_cast<AccessKind>(k));
        out += '(';
        std::string parts;
        auto add = [&parts](const std::string& p) {
            if (!parts.empty()) parts += ',';
            parts += p;
        };
        if (h.unordered != Spread::None) add(std::string("u") + spread_letter(h.unordered));
        if (h.warp_ordered) add("w");
        if (h.block_ordered) add("b");
        if (h.foreign) add("f");
        out += parts + ')';
    }
    return out.empty() ? "INIT" : out;
}

AbstractHistory step(const AbstractHistory& in, const TransitionLabel& label) {
    if (in.race) return in;
    AbstractHistory h = in;

    // Re-level by synchronization with L.
    for (KindHistory& k : h.kinds) {
        if (label.sync == SyncStatus::Bs) {
            if (k.unordered != Spread::None || k.warp_ordered) k.block_ordered = true;
            k.unordered = Spread::None;
            k.warp_ordered = false;
        } else if (label.sync == SyncStatus::Ws) {
            if (k.unordered == Spread::Self || k.unordered == Spread::Warp) {
                k.unordered = Spread::None;
                k.warp_ordered = true;
            }
        }
    }

    // Re-express relative to the new accessor.
    for (KindHistory& k : h.kinds) {
        switch (label.rel) {
        case ThreadRelation::Global:
            if (k.unordered != Spread::None || k.warp_ordered || k.block_ordered) k.foreign = true;
            k.unordered = Spread::None;
            k.warp_ordered = false;
            k.block_ordered = false;
            break;
        case ThreadRelation::Block:
            if (k.warp_ordered) k.unordered = Spread::Block;
            k.warp_ordered = false;
            k.unordered = widen(k.unordered, Spread::Block);
            break;
        case ThreadRelation::Warp:
            k.unordered = widen(k.unordered, Spread::Warp);
            break;
        case ThreadRelation::Self:
            break;
        }
    }

    for (int k = 0; k < kAccessKindCount; ++k) {
        if (!conflicts(static_cast<AccessKind>(k), label.kind)) continue;
        const KindHistory& kh = h.kinds[k];
        const bool own_only = label.rel == ThreadRelation::Self && kh.unordered == Spread::Self;
        if (kh.foreign || (kh.unordered != Spread::None && !own_only)) {
            AbstractHistory race;
            race.race = true;
            return race;
        }
    }

    KindHistory& mine = h.kinds[static_cast<int>(label.kind)];
    mine.unordered = join(mine.unordered, Spread::Self);
    return h;
}

} // namespace history

// ---------------------------------------------------------------------------
// Generation and minimization

namespace {

struct Partition {
    std::vector<unsigned> cls;
    unsigned classes = 0;
};

// Moore refinement starting from {RACE} vs the rest. Class ids follow first
// occurrence, so state 0 lands in class 0.
Partition moore_partition(const std::vector<std::vector<unsigned>>& succ, unsigned race, const Alphabet& alphabet) {
    const std::size_t n = succ.size();
    Partition p;
    p.cls.assign(n, 0);
    for (std::size_t s = 0; s < n; ++s) p.cls[s] = (s == race) ? 1u : 0u;
    for (;;) {
        std::map<std::vector<unsigned>, unsigned> signatures;
        std::vector<unsigned> next(n);
        for (std::size_t s = 0; s < n; ++s) {
            std::vector<unsigned> sig{p.cls[s]};
            for (unsigned l = 0; l < kLabelSlots; ++l)
                if (alphabet.test(l)) sig.push_back(p.cls[succ[s][l]]);
            const auto [it, inserted] = signatures.emplace(std::move(sig), static_cast<unsigned>(signatures.size()));
            next[s] = it->second;
        }
        p.cls = std::move(next);
        if (signatures.size() == p.classes) break;
        p.classes = static_cast<unsigned>(signatures.size());
    }
    return p;
}

std::string friendly_name(const std::string& descriptor) {
    static const std::map<std::string, std::string> kNames = {
        {"INIT", "INIT"},        {"RACE", "RACE"},       {"R(uS)", "READ"},       {"W(uS)", "WRITE"},
        {"A(uS)", "ATOMIC"},     {"R(uW)", "WREAD"},     {"R(uB)", "BREAD"},      {"R(uS,f)", "GREAD"},
        {"A(uW)", "WATOMIC"},    {"A(uB)", "BATOMIC"},   {"A(uS,f)", "GATOMIC"},
        {"R(uS).W(b)", "SREAD"}, {"R(uB).W(b)", "SBREAD"},
    };
    const auto it = kNames.find(descriptor);
    return it == kNames.end() ? descriptor : it->second;
}

} // namespace

FsmTable generate_full_machine(const GeneratorOptions& options, GenerationStats* stats) {
    using history::AbstractHistory;
    const Alphabet alphabet = feasible_alphabet();

    std::unordered_map<std::uint16_t, unsigned> index;
    std::vector<AbstractHistory> states;
    std::vector<std::vector<unsigned>> succ;
    auto intern = [&](const AbstractHistory& h) {
        const auto [it, inserted] = index.emplace(h.encode(), static_cast<unsigned>(states.size()));
        if (inserted) {
            if (states.size() >= options.state_cap)
                throw Error("abstract history closure exceeded the state cap of " +
                            std::to_string(options.state_cap));
            states.push_back(h);
        }
        return it->second;
    };

    intern(AbstractHistory{});
    for (std::size_t i = 0; i < states.size(); ++i) {
        std::vector<unsigned> row(kLabelSlots, kNoTransition);
        for (unsigned l = 0; l < kLabelSlots; ++l)
            if (alphabet.test(l)) row[l] = intern(history::step(states[i], decode_label(l)));
        succ.push_back(std::move(row));
    }

    AbstractHistory race_history;
    race_history.race = true;
    const unsigned race = intern(race_history);
    if (succ.size() < states.size()) {
        std::vector<unsigned> row(kLabelSlots, kNoTransition);
        for (unsigned l = 0; l < kLabelSlots; ++l)
            if (alphabet.test(l)) row[l] = race;
        succ.push_back(std::move(row));
    }
    const Partition part = moore_partition(succ, race, alphabet);
    if (part.classes > kMaxStates) throw Error("minimized machine does not fit a state id");

    // Class representative is the earliest-discovered history.
    std::vector<int> rep(part.classes, -1);
    for (unsigned s = 0; s < states.size(); ++s)
        if (rep[part.cls[s]] < 0) rep[part.cls[s]] = static_cast<int>(s);
    std::vector<std::string> names;
    std::vector<StateId> table(part.classes * kLabelSlots, kNoTransition);
    for (unsigned c = 0; c < part.classes; ++c) {
        names.push_back(states[rep[c]].describe());
        for (unsigned l = 0; l < kLabelSlots; ++l)
            if (alphabet.test(l)) table[c * kLabelSlots + l] = static_cast<StateId>(part.cls[succ[rep[c]][l]]);
    }
    const FsmTable minimal =
        canonical(FsmTable(std::move(names), static_cast<StateId>(part.cls[race]), alphabet, std::move(table)));

    std::vector<std::string> friendly;
    for (const auto& n : minimal.names()) friendly.push_back(friendly_name(n));
    FsmTable named(std::move(friendly), minimal.race(), minimal.alphabet(), minimal.raw());

    if (stats) {
        stats->closure_states = static_cast<unsigned>(states.size());
        stats->minimized_states = named.state_count();
    }
    return named;
}

FsmTable restrict_machine(const FsmTable& machine, const Alphabet& alphabet) {
    if ((alphabet & ~machine.alphabet()).any()) throw TableError("restriction alphabet is not a subset");
    std::vector<int> order(machine.state_count(), -1);
    std::vector<StateId> bfs{machine.init()};
    order[machine.init()] = 0;
    for (std::size_t i = 0; i < bfs.size(); ++i) {
        for (unsigned l = 0; l < kLabelSlots; ++l) {
            if (!alphabet.test(l)) continue;
            const StateId d = machine.next(bfs[i], l);
            if (order[d] < 0) {
                order[d] = static_cast<int>(bfs.size());
                bfs.push_back(d);
            }
        }
    }
    if (order[machine.race()] < 0) {
        order[machine.race()] = static_cast<int>(bfs.size());
        bfs.push_back(machine.race());
    }
    std::vector<std::string> names;
    std::vector<StateId> table(bfs.size() * kLabelSlots, kNoTransition);
    for (std::size_t i = 0; i < bfs.size(); ++i) {
        names.push_back(machine.name(bfs[i]));
        for (unsigned l = 0; l < kLabelSlots; ++l)
            if (alphabet.test(l)) table[i * kLabelSlots + l] = static_cast<StateId>(order[machine.next(bfs[i], l)]);
    }
    return FsmTable(std::move(names), static_cast<StateId>(order[machine.race()]), alphabet, std::move(table));
}

FsmTable minimize(const FsmTable& input) {
    const FsmTable m = canonical(input);
    const unsigned n = m.state_count();
    std::vector<std::vector<unsigned>> succ(n, std::vector<unsigned>(kLabelSlots, kNoTransition));
    for (unsigned s = 0; s < n; ++s)
        for (unsigned l = 0; l < kLabelSlots; ++l)
            if (m.alphabet().test(l)) succ[s][l] = m.next(static_cast<StateId>(s), l);
    const Partition part = moore_partition(succ, m.race(), m.alphabet());

    // Representative of a class is its lowest (earliest breadth-first) member.
    std::vector<int> rep(part.classes, -1);
    for (unsigned s = 0; s < n; ++s)
        if (rep[part.cls[s]] < 0) rep[part.cls[s]] = static_cast<int>(s);
    std::vector<std::string> names;
    std::vector<StateId> table(part.classes * kLabelSlots, kNoTransition);
    for (unsigned c = 0; c < part.classes; ++c) {
        names.push_back(m.name(static_cast<StateId>(rep[c])));
        for (unsigned l = 0; l < kLabelSlots; ++l)
            if (m.alphabet().test(l)) table[c * kLabelSlots + l] = static_cast<StateId>(part.cls[succ[rep[c]][l]]);
    }
    return canonical(FsmTable(std::move(names), static_cast<StateId>(part.cls[m.race()]), m.alphabet(), std::move(table)));
}

bool isomorphic(const FsmTable& a, const FsmTable& b) {
    if (a.state_count() != b.state_count() || a.alphabet() != b.alphabet()) return false;
    std::vector<int> fwd(a.state_count(), -1), back(b.state_count(), -1);
    std::deque<std::pair<StateId, StateId>> work{{a.init(), b.init()}};
    fwd[a.init()] = b.init();
    back[b.init()] = a.init();
    while (!work.empty()) {
        const auto [x, y] = work.front();
        work.pop_front();
        if ((x == a.race()) != (y == b.race())) return false;
        for (unsigned l = 0; l < kLabelSlots; ++l) {
            if (!a.alphabet().test(l)) continue;
            const StateId nx = a.next(x, l);
            const StateId ny = b.next(y, l);
            if (fwd[nx] < 0 && back[ny] < 0) {
                fwd[nx] = ny;
                back[ny] = nx;
                work.emplace_back(nx, ny);
            } else if (fwd[nx] != ny || back[ny] != nx) {
                return false;
            }
        }
    }
    // Unreachable states must be matched too; only RACE may be unreachable.
    for (unsigned s = 0; s < a.state_count(); ++s)
        if (fwd[s] < 0 && s != a.race()) return false;
    return fwd[a.race()] < 0 ? back[b.race()] < 0 : fwd[a.race()] == b.race();
}

// ---------------------------------------------------------------------------
// Table files

void write_table(std::ostream& os, const FsmTable& m) {
    os << "states " << m.state_count() << " labels " << kLabelSlots << '\n';
    for (unsigned s = 0; s < m.state_count(); ++s) os << m.name(static_cast<StateId>(s)) << ' ' << s << '\n';
    for (unsigned s = 0; s < m.state_count(); ++s)
        for (unsigned l = 0; l < kLabelSlots; ++l)
            if (m.alphabet().test(l)) os << s << ' ' << l << ' ' << unsigned(m.next(static_cast<StateId>(s), l)) << '\n';
}

FsmTable read_table(std::istream& is) {
    std::string line;
    unsigned line_no = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(is, line)) {
            ++line_no;
            const auto p = line.find_first_not_of(" \t\r");
            if (p != std::string::npos && line[p] != '#') return true;
        }
        return false;
    };
    auto fail = [&](const std::string& what) -> TableError {
        return TableError("table line " + std::to_string(line_no) + ": " + what);
    };

    if (!next_line()) throw TableError("empty table file");
    std::istringstream header(line);
    std::string kw_states, kw_labels;
    long n = 0, m = 0;
    if (!(header >> kw_states >> n >> kw_labels >> m) || kw_states != "states" || kw_labels != "labels")
        throw fail("expected 'states <n> labels <m>'");
    if (m != static_cast<long>(kLabelSlots)) throw fail("label count must be " + std::to_string(kLabelSlots));
    if (n <= 0 || n > static_cast<long>(kMaxStates)) throw fail("state count out of range");

    std::vector<std::string> names(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        if (!next_line()) throw fail("missing state line");
        std::istringstream ss(line);
        std::string name;
        long idx = -1;
        std::string extra;
        if (!(ss >> name >> idx) || (ss >> extra)) throw fail("expected '<name> <idx>'");
        if (idx < 0 || idx >= n || !names[static_cast<std::size_t>(idx)].empty()) throw fail("bad state index");
        names[static_cast<std::size_t>(idx)] = name;
    }

    std::vector<StateId> table(static_cast<std::size_t>(n) * kLabelSlots, kNoTransition);
    Alphabet alphabet;
    while (next_line()) {
        std::istringstream ss(line);
        long src = -1, label = -1, dst = -1;
        std::string extra;
        if (!(ss >> src >> label >> dst) || (ss >> extra)) throw fail("expected '<src> <label> <dst>'");
        if (src < 0 || src >= n || dst < 0 || dst >= n) throw fail("state index out of range");
        if (label < 0 || !is_feasible(static_cast<unsigned>(label))) throw fail("infeasible or invalid label");
        auto& slot = table[static_cast<std::size_t>(src) * kLabelSlots + static_cast<std::size_t>(label)];
        if (slot != kNoTransition) throw fail("duplicate transition");
        slot = static_cast<StateId>(dst);
        alphabet.set(static_cast<std::size_t>(label));
    }

    auto race = std::find(names.begin(), names.end(), "RACE");
    if (race == names.end()) throw TableError("table has no RACE state");
    return FsmTable(std::move(names), static_cast<StateId>(race - names.begin()), alphabet, std::move(table));
}

void export_table(const FsmTable& machine, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    write_table(os, machine);
    if (!os) throw Error("write to " + path.string() + " failed");
}

FsmTable import_table(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open " + path.string());
    return read_table(is);
}

std::string dump(const FsmTable& m) {
    std::ostringstream os;
    os << m.state_count() << " states, " << m.alphabet().count() << " labels; INIT=" << m.name(m.init())
       << " RACE=" << m.name(m.race()) << '\n';
    for (unsigned s = 0; s < m.state_count(); ++s) {
        const auto src = static_cast<StateId>(s);
        os << m.name(src) << ":\n";
        std::map<StateId, std::vector<std::string>> by_target;
        for (unsigned l = 0; l < kLabelSlots; ++l)
            if (m.alphabet().test(l) && m.next(src, l) != src) by_target[m.next(src, l)].push_back(label_name(l));
        for (const auto& [dst, labels] : by_target) {
            os << "  -> " << m.name(dst) << "  ";
            for (std::size_t i = 0; i < labels.size(); ++i) os << (i ? " " : "") << labels[i];
            os << '\n';
        }
    }
    return os.str();
}

} // namespace hirace::fsm
