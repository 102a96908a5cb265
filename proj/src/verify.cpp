// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "hirace/verify.hpp"
#include "hirace/detector.hpp"
#include "hirace/oracle.hpp"
#include "hirace/rng.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace hirace::verify {

using litmus::Event;
using litmus::EventKind;
using litmus::Expr;
using litmus::GridConfig;
using litmus::Instruction;
using litmus::KernelProgram;
using litmus::MaterializedProgram;

std::string to_string(u128 v) {
    if (v == 0) return "0";
    std::string s;
    while (v) {
        s += static_cast<char>('0' + static_cast<int>(v % 10));
        v /= 10;
    }
    return {s.rbegin(), s.rend()};
}

std::string VerifyReport::summary_line() const {
    return "checked=" + to_string(instances) + " sound_viol=" + std::to_string(sound_viol) +
           " complete_viol=" + std::to_string(complete_viol) + " sched_dep=" + std::to_string(sched_dep);
}

// ---------------------------------------------------------------------------
// Family enumeration

namespace {

std::vector<Instruction> family_menu(const FamilyConfig& f) {
    std::vector<Instruction> menu;
    if (f.sync_threads) menu.push_back(Instruction::sync_threads());
    if (f.sync_warp) menu.push_back(Instruction::sync_warp());

    std::vector<Expr> indices;
    for (std::uint32_t i = 0; i < std::min<std::uint32_t>(f.max_addrs, 2); ++i)
        indices.push_back(Expr::literal(i));
    const std::pair<const char*, std::uint32_t> vars[] = {
        {"lane", f.max_lanes}, {"wid", f.max_warps}, {"bid", f.max_blocks}};
    for (const auto& [name, range] : vars)
        if (range >= 2 && range <= f.max_addrs) indices.push_back(Expr::var(name));

    std::vector<std::optional<Expr>> guards{std::nullopt};
    const std::pair<const char*, std::uint32_t> guard_vars[] = {
        {"lane", f.max_lanes}, {"wid", f.max_warps}, {"bid", f.max_blocks},
        {"gtid", f.max_blocks * f.max_warps * f.max_lanes}};
    for (const auto& [name, range] : guard_vars)
        if (range >= 2) guards.push_back(Expr::binary(Expr::Op::Eq, Expr::var(name), Expr::literal(0)));

    for (AccessKind k : f.kinds) {
        for (const auto& idx : indices) {
            for (const auto& g : guards) {
                Instruction access = Instruction::access(k, "data", idx);
                menu.push_back(g ? Instruction::if_then(*g, {access}) : access);
            }
        }
    }
    return menu;
}

std::vector<GridConfig> family_grids(const FamilyConfig& f) {
    std::vector<GridConfig> grids;
    for (std::uint32_t b = 1; b <= std::max(1u, f.max_blocks); ++b)
        for (std::uint32_t w = 1; w <= std::max(1u, f.max_warps); ++w)
            for (std::uint32_t l = 1; l <= std::max(1u, f.max_lanes); ++l) grids.push_back({b, w, l});
    return grids;
}

std::uint64_t sequences_up_to(std::uint64_t menu, std::uint32_t len) {
    std::uint64_t total = 0, term = 1;
    for (std::uint32_t k = 0; k <= len; ++k) {
        total += term;
        if (term > UINT64_MAX / std::max<std::uint64_t>(menu, 1)) return UINT64_MAX;
        term *= menu;
    }
    return total;
}

// Event a menu statement produces on each thread of a grid.
using StatementEvents = std::vector<std::optional<Event>>;

StatementEvents statement_events(const Instruction& stmt, const GridConfig& grid, const litmus::AddressSpace& space) {
    StatementEvents out(grid.total_threads());
    const litmus::Params none;
    for (ThreadId t = 0; t < grid.total_threads(); ++t) {
        const auto c = litmus::coord_of(grid, t);
        const Instruction* s = &stmt;
        std::uint32_t instr = 0;
        if (s->kind == Instruction::Kind::If) {
            if (litmus::eval_expr(s->cond, c, grid, none) == 0) continue;
            s = &s->then_body.front();
            instr = 1;
        }
        if (s->kind == Instruction::Kind::SyncThreads) out[t] = Event{EventKind::SyncThreads, 0, instr};
        else if (s->kind == Instruction::Kind::SyncWarp) out[t] = Event{EventKind::SyncWarp, 0, instr};
        else {
            const auto idx = litmus::eval_expr(s->index, c, grid, none);
            out[t] = Event{static_cast<EventKind>(s->access_kind()), space.resolve(s->array, c.block, idx), instr};
        }
    }
    return out;
}

char event_code(EventKind k, bool swap_ra) {
    if (swap_ra && k == EventKind::Read) return 'A';
    if (swap_ra && k == EventKind::Atomic) return 'R';
    return litmus::event_letter(k);
}

} // namespace

std::string canonical_key(const MaterializedProgram& m, bool kind_symmetry) {
    const GridConfig& g = m.grid;
    std::set<Address> used;
    for (std::size_t t = 0; t < m.threads.size(); ++t)
        if (m.present[t])
            for (const auto& e : m.threads[t])
                if (e.is_access()) used.insert(e.addr);
    std::vector<Address> addrs(used.begin(), used.end());
    std::vector<std::size_t> perm(addrs.size());
    std::iota(perm.begin(), perm.end(), 0);

    std::string best;
    bool first = true;
    do {
        std::unordered_map<Address, char> rename;
        for (std::size_t i = 0; i < addrs.size(); ++i) rename[addrs[perm[i]]] = static_cast<char>('a' + i);
        for (int swap = 0; swap < (kind_symmetry ? 2 : 1); ++swap) {
            std::vector<std::string> blocks;
            for (std::uint32_t b = 0; b < g.blocks; ++b) {
                std::vector<std::string> warps;
                for (std::uint32_t w = 0; w < g.warps_per_block; ++w) {
                    std::vector<std::string> lanes;
                    for (std::uint32_t l = 0; l < g.lanes_per_warp; ++l) {
                        const ThreadId t = litmus::gtid_of(g, b, w, l);
                        std::string s = m.present[t] ? "" : "-";
                        for (const auto& e : m.threads[t]) {
                            s += event_code(e.kind, swap == 1);
                            if (e.is_access()) s += rename.at(e.addr);
                        }
                        lanes.push_back(std::move(s));
                    }
                    std::sort(lanes.begin(), lanes.end());
                    std::string ws = "(";
                    for (const auto& s : lanes) ws += s + ",";
                    warps.push_back(ws + ")");
                }
                std::sort(warps.begin(), warps.end());
                std::string bs = "[";
                for (const auto& s : warps) bs += s;
                blocks.push_back(bs + "]");
            }
            std::sort(blocks.begin(), blocks.end());
            std::string key = litmus::to_string(g) + ":";
            for (const auto& s : blocks) key += s;
            if (first || key < best) best = std::move(key);
            first = false;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

std::uint64_t family_estimate(const FamilyConfig& f) {
    const std::uint64_t per_grid = sequences_up_to(family_menu(f).size(), f.max_events);
    const std::uint64_t grids = family_grids(f).size();
    return per_grid > UINT64_MAX / grids ? UINT64_MAX : per_grid * grids;
}

namespace {

litmus::GenConfig gen_config(const FamilyConfig& f, std::uint64_t seed) {
    litmus::GenConfig c;
    c.max_blocks = f.max_blocks;
    c.max_warps = f.max_warps;
    c.max_lanes = f.max_lanes;
    c.max_instrs = f.max_events;
    c.max_addrs = f.max_addrs;
    c.atomics = std::find(f.kinds.begin(), f.kinds.end(), AccessKind::Atomic) != f.kinds.end();
    c.seed = seed;
    return c;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Returns the raw count; stops after `budget` raw programs.
std::uint64_t enumerate_family(const FamilyConfig& f, const std::function<void(const KernelProgram&)>& visit,
                               bool& partial) {
    partial = false;
    if (f.programs == ProgramMode::SeededRandom) {
        for (std::uint64_t i = 0; i < f.random_programs; ++i)
            visit(litmus::generate_random_program(gen_config(f, mix(f.seed, i))));
        return f.random_programs;
    }

    const auto menu = family_menu(f);
    std::unordered_set<std::string> seen;
    std::uint64_t raw = 0;
    for (const GridConfig& grid : family_grids(f)) {
        KernelProgram base;
        base.grid = grid;
        base.arrays.push_back({"data", litmus::ArrayScope::Global, std::max(1u, f.max_addrs)});
        const litmus::AddressSpace space(base.arrays, grid.blocks);
        std::vector<StatementEvents> events;
        for (const auto& stmt : menu) events.push_back(statement_events(stmt, grid, space));

        MaterializedProgram m;
        m.grid = grid;
        m.addresses = space;
        m.present.assign(grid.total_threads(), true);
        for (std::uint32_t len = 0; len <= f.max_events; ++len) {
            std::vector<std::size_t> pick(len, 0);
            for (;;) {
                if (raw >= f.budget) {
                    partial = true;
                    return raw;
                }
                ++raw;
                m.threads.assign(grid.total_threads(), {});
                std::uint32_t instr = 0;
                for (std::size_t i = 0; i < len; ++i) {
                    const auto& se = events[pick[i]];
                    for (ThreadId t = 0; t < grid.total_threads(); ++t) {
                        if (!se[t]) continue;
                        Event e = *se[t];
                        e.instr += instr;
                        m.threads[t].push_back(e);
                    }
                    instr += menu[pick[i]].kind == Instruction::Kind::If ? 2 : 1;
                }
                if (seen.insert(canonical_key(m, f.kind_symmetry)).second) {
                    KernelProgram p = base;
                    for (std::size_t i = 0; i < len; ++i) p.body.push_back(menu[pick[i]]);
                    visit(p);
                }
                std::size_t i = 0;
                while (i < len && ++pick[i] == menu.size()) pick[i++] = 0;
                if (i == len) break;
            }
        }
    }
    return raw;
}

} // namespace

std::uint64_t for_each_family_program(const FamilyConfig& family,
                                      const std::function<void(const KernelProgram&)>& visit) {
    bool partial = false;
    return enumerate_family(family, visit, partial);
}

// ---------------------------------------------------------------------------
// Per-address exploration

namespace {

struct AddrAccess {
    ThreadId tid;
    AccessKind kind;
    std::uint32_t bc;
    std::uint32_t wc;
    std::uint32_t seq;
};

// True when x happens before y (barrier epochs, program order).
bool precedes(const AddrAccess& x, const AddrAccess& y, const GridConfig& g) {
    if (x.tid == y.tid) return x.seq < y.seq;
    const auto cx = litmus::coord_of(g, x.tid);
    const auto cy = litmus::coord_of(g, y.tid);
    if (cx.block != cy.block) return false;
    if (x.bc != y.bc) return x.bc < y.bc;
    return cx.warp == cy.warp && x.wc < y.wc;
}

enum class Goal { Outcome, FindRace, FindClean };

struct PairHash {
    std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const {
        return std::hash<std::uint64_t>()(p.first * 0x9e3779b97f4a7c15ull ^ p.second);
    }
};

/// Every linear extension of happens-before restricted to one address's
/// accesses is realized by some schedule, and the shadow word only sees
/// those accesses, each carrying the clocks of its program position.
class AddressExplorer {
public:
    AddressExplorer(const MaterializedProgram& m, Address addr, const fsm::FsmTable& machine, const ShadowLayout& layout)
        : m_(m), machine_(machine), layout_(layout) {
        std::vector<std::vector<AddrAccess>> per_thread(m.threads.size());
        for (ThreadId t = 0; t < m.threads.size(); ++t) {
            if (!m.present[t]) continue;
            std::uint32_t bc = 0, wc = 0;
            for (std::uint32_t i = 0; i < m.threads[t].size(); ++i) {
                const Event& e = m.threads[t][i];
                if (e.kind == EventKind::SyncThreads) ++bc;
                else if (e.kind == EventKind::SyncWarp) ++wc;
                else if (e.addr == addr) per_thread[t].push_back({t, e.access_kind(), bc, wc, i});
            }
        }
        for (auto& v : per_thread)
            if (!v.empty()) threads_.push_back(std::move(v));
        if (threads_.size() > 16) throw Error("explorer supports at most 16 threads per address");
        for (const auto& v : threads_)
            if (v.size() > 15) throw Error("explorer supports at most 15 accesses per thread and address");
        // need_[t][i][u]: accesses of u that happen before access i of t
        need_.resize(threads_.size());
        for (std::size_t t = 0; t < threads_.size(); ++t) {
            for (const auto& x : threads_[t]) {
                std::vector<std::uint8_t> req(threads_.size(), 0);
                for (std::size_t u = 0; u < threads_.size(); ++u) {
                    if (u == t) continue;
                    for (const auto& y : threads_[u])
                        if (precedes(y, x, m.grid)) ++req[u];
                }
                need_[t].push_back(std::move(req));
            }
        }
    }

    AddressOutcome outcome() {
        goal_ = Goal::Outcome;
        visited_.clear();
        run(0, 0);
        AddressOutcome o;
        o.can_race = race_;
        o.can_clean = clean_;
        o.states = visited_.size();
        return o;
    }

    /// Order (as thread ids) of the accesses that reaches the goal.
    std::optional<std::vector<ThreadId>> find(bool want_race) {
        goal_ = want_race ? Goal::FindRace : Goal::FindClean;
        visited_.clear();
        path_.clear();
        found_ = false;
        run(0, 0);
        if (!found_) return std::nullopt;
        return path_;
    }

private:
    unsigned count(std::uint64_t counts, std::size_t t) const { return (counts >> (4 * t)) & 0xF; }

    bool done() const {
        if (goal_ == Goal::Outcome) return race_ && clean_;
        return found_;
    }

    void run(std::uint64_t counts, ShadowWord word) {
        if (done() || !visited_.insert({counts, word}).second) return;
        const auto state = unpack_shadow(layout_, word).state;
        if (state == machine_.race()) {
            race_ = true;
            if (goal_ == Goal::FindRace) found_ = true;
            return;
        }
        bool complete = true;
        for (std::size_t t = 0; t < threads_.size(); ++t) {
            const unsigned i = count(counts, t);
            if (i == threads_[t].size()) continue;
            complete = false;
            bool enabled = true;
            for (std::size_t u = 0; u < threads_.size() && enabled; ++u) enabled = count(counts, u) >= need_[t][i][u];
            if (!enabled) continue;
            const AddrAccess& a = threads_[t][i];
            const auto step = shadow_transition(layout_, machine_, m_.grid, word, a.kind, a.tid, a.bc, a.wc);
            if (goal_ != Goal::Outcome) path_.push_back(a.tid);
            run(counts + (1ull << (4 * t)), pack_shadow(layout_, step.after));
            if (done()) return;
            if (goal_ != Goal::Outcome) path_.pop_back();
        }
        if (complete) {
            clean_ = true;
            if (goal_ == Goal::FindClean) found_ = true;
        }
    }

    const MaterializedProgram& m_;
    const fsm::FsmTable& machine_;
    ShadowLayout layout_;
    std::vector<std::vector<AddrAccess>> threads_;
    std::vector<std::vector<std::vector<std::uint8_t>>> need_;
    std::unordered_set<std::pair<std::uint64_t, std::uint64_t>, PairHash> visited_;
    Goal goal_ = Goal::Outcome;
    bool race_ = false;
    bool clean_ = false;
    bool found_ = false;
    std::vector<ThreadId> path_;
};

std::vector<Address> accessed_addresses(const MaterializedProgram& m) {
    std::set<Address> s;
    for (std::size_t t = 0; t < m.threads.size(); ++t)
        if (m.present[t])
            for (const auto& e : m.threads[t])
                if (e.is_access()) s.insert(e.addr);
    return {s.begin(), s.end()};
}

/// Full schedule whose accesses to `addr` start with `order`: everything
/// else runs as early as possible, lowest gtid first.
std::vector<ThreadId> complete_schedule(const MaterializedProgram& m, Address addr, const std::vector<ThreadId>& order) {
    ExecutionState st(m, ShadowLayout{4, 4, 28, 28});
    std::vector<ThreadId> out;
    std::size_t next = 0;
    while (!st.finished()) {
        st.check_progress();
        std::optional<ThreadId> pick;
        for (ThreadId t : st.runnable_threads()) {
            const Event& e = m.threads[t][st.threads()[t].pc];
            if (!e.is_access() || e.addr != addr) {
                pick = t;
                break;
            }
        }
        if (!pick && next >= order.size()) {
            // A racy order may stop early; RACE absorbs the rest.
            const auto r = st.runnable_threads();
            if (!r.empty()) pick = r.front();
        }
        if (!pick) {
            if (next >= order.size() || !st.runnable(order[next]))
                throw Error("access order is not realizable by any schedule");
            pick = order[next++];
        }
        st.step(*pick);
        out.push_back(*pick);
    }
    return out;
}

} // namespace

std::vector<AddressOutcome> explore_addresses(const MaterializedProgram& m, const fsm::FsmTable& machine,
                                              const ShadowLayout& layout) {
    std::vector<AddressOutcome> out;
    for (Address a : accessed_addresses(m)) {
        AddressExplorer ex(m, a, machine, layout);
        auto o = ex.outcome();
        o.addr = a;
        out.push_back(o);
    }
    return out;
}

u128 count_schedules(const MaterializedProgram& m) {
    std::unordered_map<std::string, u128> memo;
    const u128 max = ~static_cast<u128>(0);
    std::function<u128(const ExecutionState&)> count = [&](const ExecutionState& st) -> u128 {
        if (st.finished()) return 1;
        std::string key;
        for (const auto& s : st.threads()) {
            key += static_cast<char>(s.pc);
            key += static_cast<char>(s.status);
        }
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        st.check_progress();
        u128 total = 0;
        for (ThreadId t : st.runnable_threads()) {
            ExecutionState next = st;
            next.step(t);
            const auto c = count(next);
            total = c > max - total ? max : total + c;
        }
        memo.emplace(std::move(key), total);
        return total;
    };
    return count(ExecutionState(m, ShadowLayout{4, 4, 28, 28}));
}

std::optional<std::vector<ThreadId>> find_schedule(const MaterializedProgram& m, const fsm::FsmTable& machine,
                                                   bool want_race, const ShadowLayout& layout) {
    // Joint search: thread states plus every shadow word.
    std::unordered_set<std::string> visited;
    std::vector<ThreadId> path;
    std::function<bool(const ExecutionState&, std::vector<ShadowWord>&)> dfs =
        [&](const ExecutionState& st, std::vector<ShadowWord>& words) -> bool {
        bool raced = false;
        for (ShadowWord w : words) raced |= unpack_shadow(layout, w).state == machine.race();
        if (raced) return want_race;
        if (st.finished()) return !want_race;
        std::string key;
        for (const auto& s : st.threads()) {
            key.append(reinterpret_cast<const char*>(&s.pc), sizeof s.pc);
            key += static_cast<char>(s.status);
        }
        key.append(reinterpret_cast<const char*>(words.data()), words.size() * sizeof(ShadowWord));
        if (!visited.insert(std::move(key)).second) return false;
        st.check_progress();
        for (ThreadId t : st.runnable_threads()) {
            ExecutionState next = st;
            const auto r = next.step(t);
            std::vector<ShadowWord> nw = words;
            if (r.access) {
                const auto& a = *r.access;
                nw[a.addr] = pack_shadow(layout, shadow_transition(layout, machine, m.grid, nw[a.addr], a.kind, a.tid,
                                                                   a.bc, a.wc)
                                                     .after);
            }
            path.push_back(t);
            if (dfs(next, nw)) return true;
            path.pop_back();
        }
        return false;
    };
    std::vector<ShadowWord> words(m.addresses.size(), 0);
    if (!dfs(ExecutionState(m, layout), words)) return std::nullopt;
    // Finish the schedule; the verdict is already settled.
    ExecutionState st(m, ShadowLayout{4, 4, 28, 28});
    for (ThreadId t : path) st.step(t);
    while (!st.finished()) {
        st.check_progress();
        const ThreadId t = st.runnable_threads().front();
        st.step(t);
        path.push_back(t);
    }
    return path;
}

// ---------------------------------------------------------------------------
// Differential verification

namespace {

struct ProgramResult {
    u128 instances = 0;
    bool racy = false;
    bool sound = false;
    bool complete = false;
    bool dep = false;
    bool oracle = false;
    bool partial = false;
    std::vector<Witness> witnesses;
};

struct ShapeCache {
    std::unordered_map<std::string, u128> counts;

    u128 get(const MaterializedProgram& m) {
        std::string key = litmus::to_string(m.grid) + ":";
        for (const auto& th : m.threads) {
            for (const auto& e : th) key += e.is_access() ? 'M' : litmus::event_letter(e.kind);
            key += '|';
        }
        if (auto it = counts.find(key); it != counts.end()) return it->second;
        const auto c = count_schedules(m);
        counts.emplace(std::move(key), c);
        return c;
    }
};

std::set<Address> racy_addresses(const std::vector<oracle::RacePair>& pairs) {
    std::set<Address> s;
    for (const auto& p : pairs) s.insert(p.a.addr);
    return s;
}

Witness make_witness(std::string kind, const KernelProgram& p, std::vector<ThreadId> schedule, Verdict fsm,
                     Verdict oracle_verdict, std::string detail) {
    return {std::move(kind), litmus::to_string(p), std::move(schedule), fsm, oracle_verdict, std::move(detail)};
}

ProgramResult check_explored(const KernelProgram& p, const FamilyConfig& f, const fsm::FsmTable& machine,
                             ShapeCache& shapes) {
    ProgramResult r;
    const auto m = litmus::materialize_threads(p);
    const auto pairs = oracle::static_hb_races(m);
    const auto racy = racy_addresses(pairs);
    r.racy = !racy.empty();
    r.instances = shapes.get(m);
    const Verdict oracle_verdict = r.racy ? Verdict::Racy : Verdict::RaceFree;

    bool any_race = false;
    bool all_race = false; // some racy address races on every order
    for (Address a : accessed_addresses(m)) {
        AddressExplorer ex(m, a, machine, f.layout);
        const auto o = ex.outcome();
        any_race |= o.can_race;
        const bool expected = racy.count(a) > 0;
        if (expected && !o.can_clean) all_race = true;
        if (!expected && o.can_race) {
            r.sound = true;
            if (r.witnesses.empty()) {
                auto order = ex.find(true);
                r.witnesses.push_back(make_witness("soundness", p, complete_schedule(m, a, *order), Verdict::Racy,
                                                   oracle_verdict,
                                                   "fsm reaches RACE on " + m.addresses.name(a) +
                                                       ", which has no unordered conflicting pair"));
            }
        }
        if (expected && o.can_clean) {
            r.complete = true;
            if (r.witnesses.empty()) {
                auto order = ex.find(false);
                r.witnesses.push_back(make_witness("completeness", p, complete_schedule(m, a, *order),
                                                   Verdict::RaceFree, oracle_verdict,
                                                   "fsm never reaches RACE on " + m.addresses.name(a) +
                                                       " although it has an unordered conflicting pair"));
            }
        }
    }
    if (r.sound || r.complete) {
        // Only failing programs need the joint search.
        const bool some_clean = !all_race && (!any_race || find_schedule(m, machine, false, f.layout).has_value());
        r.dep = any_race && some_clean;
        if (r.dep) {
            auto s = find_schedule(m, machine, true, f.layout);
            r.witnesses.push_back(make_witness("schedule-dependence", p, s.value_or(std::vector<ThreadId>{}),
                                               Verdict::Racy, oracle_verdict,
                                               "fsm verdict differs between schedules"));
        }
    }
    return r;
}

// Runs both detectors along one schedule and folds the outcome into r.
void check_literal(const KernelProgram& p, const MaterializedProgram& m, const std::vector<ThreadId>& schedule,
                   Verdict static_verdict, const FamilyConfig& f, const std::shared_ptr<const fsm::FsmTable>& machine,
                   ProgramResult& r, std::set<Verdict>& seen) {
    DetectorContext ctx;
    ctx.grid = m.grid;
    ctx.addresses = m.addresses.size();
    ctx.machine = machine;
    ctx.layout = f.layout;
    FsmDetector fsm_det(ctx);
    oracle::VectorClockDetector vc(ctx);
    const auto sched = Schedule::explicit_picks(schedule);
    const auto fr = run_schedule(m, sched, fsm_det, {f.layout});
    const auto vr = run_schedule(m, sched, vc, {f.layout});
    ++r.instances;
    seen.insert(fr.verdict);
    auto note = [&](const char* kind, std::string detail) {
        if (r.witnesses.empty())
            r.witnesses.push_back(make_witness(kind, p, schedule, fr.verdict, vr.verdict, std::move(detail)));
    };
    if (vr.verdict != static_verdict) {
        r.oracle = true;
        note("oracle", std::string("vclock says ") + verdict_name(vr.verdict) + ", static analysis says " +
                           verdict_name(static_verdict));
    }
    if (fr.verdict == Verdict::Racy && vr.verdict == Verdict::RaceFree) {
        r.sound = true;
        note("soundness", "fsm reports a race vclock does not");
    }
    if (fr.verdict == Verdict::RaceFree && vr.verdict == Verdict::Racy) {
        r.complete = true;
        note("completeness", "fsm misses a race vclock reports");
    }
}

ProgramResult check_program(const KernelProgram& p, std::uint64_t index, const FamilyConfig& f,
                            const std::shared_ptr<const fsm::FsmTable>& machine, ShapeCache& shapes) {
    if (f.schedules == ScheduleMode::Exhaustive && !f.literal_schedules) return check_explored(p, f, *machine, shapes);

    ProgramResult r;
    const auto m = litmus::materialize_threads(p);
    r.racy = !oracle::static_hb_races(m).empty();
    const Verdict static_verdict = r.racy ? Verdict::Racy : Verdict::RaceFree;
    std::set<Verdict> seen;
    if (f.schedules == ScheduleMode::Exhaustive) {
        const auto e = for_each_schedule(m, f.literal_limit, [&](const std::vector<ThreadId>& s) {
            check_literal(p, m, s, static_verdict, f, machine, r, seen);
            return true;
        });
        r.partial = e.truncated;
    } else {
        for (std::uint64_t i = 0; i < f.random_schedules; ++i)
            check_literal(p, m, random_schedule(m, mix(mix(f.seed, index), i)), static_verdict, f, machine, r, seen);
    }
    r.dep = seen.size() > 1;
    if (r.dep && r.witnesses.empty())
        r.witnesses.push_back(make_witness("schedule-dependence", p, {}, Verdict::Racy, static_verdict,
                                           "fsm verdict differs between schedules"));
    return r;
}

} // namespace

VerifyReport differential_verify(const FamilyConfig& f, const fsm::FsmTable& machine_in) {
    VerifyReport report;
    report.estimate = f.programs == ProgramMode::Exhaustive ? family_estimate(f) : f.random_programs;
    const auto machine = std::make_shared<const fsm::FsmTable>(machine_in);

    std::vector<KernelProgram> programs;
    bool partial = false;
    report.raw_programs = enumerate_family(f, [&](const KernelProgram& p) { programs.push_back(p); }, partial);
    report.partial = partial;
    report.programs = programs.size();

    std::vector<ProgramResult> results(programs.size());
    const unsigned workers = std::max(1u, std::min<unsigned>(f.workers, static_cast<unsigned>(programs.size())));
    std::vector<std::exception_ptr> errors(workers);
    auto work = [&](unsigned w) {
        try {
            ShapeCache shapes;
            for (std::size_t i = w; i < programs.size(); i += workers)
                results[i] = check_program(programs[i], i, f, machine, shapes);
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    for (auto& r : results) {
        report.instances += r.instances;
        report.racy_programs += r.racy;
        report.sound_viol += r.sound;
        report.complete_viol += r.complete;
        report.sched_dep += r.dep;
        report.oracle_disagree += r.oracle;
        report.partial |= r.partial;
        for (auto& w : r.witnesses)
            if (report.witnesses.size() < 16) report.witnesses.push_back(std::move(w));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Two-thread projections

std::optional<std::pair<ThreadId, ThreadId>> racy_projection(const MaterializedProgram& m) {
    const auto pairs = oracle::static_hb_races(m);
    if (pairs.empty()) return std::nullopt;
    std::vector<std::pair<ThreadId, ThreadId>> candidates{{pairs.front().a.tid, pairs.front().b.tid}};
    for (ThreadId t = 0; t < m.threads.size(); ++t)
        for (ThreadId u = t + 1; u < m.threads.size(); ++u) candidates.emplace_back(t, u);
    for (const auto& [t, u] : candidates) {
        const auto proj = m.project({t, u});
        if (oracle::static_hb_races(proj).empty()) continue;
        if (oracle::vclock_check(proj, Schedule::explicit_picks({})).verdict == Verdict::Racy) return std::pair{t, u};
    }
    return std::nullopt;
}

ProjectionReport two_thread_projection_check(const FamilyConfig& f) {
    ProjectionReport report;
    bool partial = false;
    enumerate_family(
        f,
        [&](const KernelProgram& p) {
            ++report.programs;
            const auto m = litmus::materialize_threads(p);
            if (oracle::static_hb_races(m).empty()) return;
            ++report.racy;
            if (!racy_projection(m)) {
                ++report.counterexamples;
                if (report.witnesses.size() < 16) report.witnesses.push_back(litmus::to_string(p));
            }
        },
        partial);
    return report;
}

// ---------------------------------------------------------------------------
// Structural checks

bool StructuralReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

const CheckResult* StructuralReport::find(std::string_view name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

CheckResult check_totality(const fsm::FsmTable& m) {
    for (unsigned s = 0; s < m.state_count(); ++s) {
        for (unsigned l = 0; l < fsm::kLabelSlots; ++l) {
            const auto dst = m.next(static_cast<fsm::StateId>(s), l);
            if (m.alphabet().test(l) && dst >= m.state_count())
                return {"totality", false, m.name(static_cast<fsm::StateId>(s)) + " has no transition on " + fsm::label_name(l)};
            if (!m.alphabet().test(l) && dst != fsm::kNoTransition)
                return {"totality", false, "label slot " + std::to_string(l) + " outside the alphabet has a transition"};
        }
    }
    return {"totality", true, std::to_string(m.state_count()) + " states x " + std::to_string(m.alphabet().count()) + " labels"};
}

CheckResult check_absorbing(const fsm::FsmTable& m) {
    for (unsigned l = 0; l < fsm::kLabelSlots; ++l)
        if (m.alphabet().test(l) && m.next(m.race(), l) != m.race())
            return {"race-absorbing", false,
                    "RACE leaves to " + m.name(m.next(m.race(), l)) + " on " + fsm::label_name(l)};
    return {"race-absorbing", true, ""};
}

CheckResult check_init_uniform(const fsm::FsmTable& m) {
    for (unsigned k = 0; k < kAccessKindCount; ++k) {
        std::optional<fsm::StateId> target;
        for (unsigned l = 0; l < fsm::kLabelSlots; ++l) {
            if (!m.alphabet().test(l) || (l >> 4) != k) continue;
            const auto dst = m.next(m.init(), l);
            if (target && *target != dst)
                return {"init-uniform", false, "INIT row depends on relation or sync for kind " +
                                                   std::string(1, kind_letter(static_cast<AccessKind>(k)))};
            target = dst;
        }
    }
    return {"init-uniform", true, ""};
}

CheckResult check_isomorphism(const fsm::FsmTable& m, const fsm::FsmTable& reference, const std::string& name) {
    const auto& a = reference.alphabet();
    if ((m.alphabet() & a) != a) return {name, true, "not applicable: alphabet does not cover the reference labels"};
    const auto reduced = fsm::minimize(fsm::restrict_machine(m, a));
    const bool ok = fsm::isomorphic(reduced, reference);
    return {name, ok,
            std::to_string(reduced.state_count()) + " states after restriction and minimization, reference has " +
                std::to_string(reference.state_count())};
}

CheckResult check_cosimulation(const fsm::FsmTable& m, const StructuralOptions& o) {
    const auto small = fsm::minimize(m);
    // A machine over the whole feasible alphabet is also run against the
    // unminimized history semantics it was generated from.
    const bool with_history = m.alphabet() == fsm::feasible_alphabet();
    std::vector<unsigned> labels;
    for (unsigned l = 0; l < fsm::kLabelSlots; ++l)
        if (m.alphabet().test(l)) labels.push_back(l);
    Rng rng(o.seed);
    for (std::uint64_t i = 0; i < o.cosim_strings; ++i) {
        const auto len = 1 + rng.below(std::max(1u, o.max_length));
        fsm::StateId a = m.init(), b = small.init();
        fsm::history::AbstractHistory h;
        for (std::uint64_t j = 0; j < len; ++j) {
            const unsigned l = labels[rng.below(labels.size())];
            a = m.next(a, l);
            b = small.next(b, l);
            const bool race = a == m.race();
            bool diverged = race != (b == small.race());
            if (with_history) {
                h = fsm::history::step(h, fsm::decode_label(l));
                diverged |= race != h.race;
            }
            if (diverged)
                return {"minimize-cosim", false,
                        "string " + std::to_string(i) + " diverges at position " + std::to_string(j)};
        }
    }
    return {"minimize-cosim", true,
            std::to_string(o.cosim_strings) + " strings, " + std::to_string(m.state_count()) + " -> " +
                std::to_string(small.state_count()) + " states" + (with_history ? ", checked against the history semantics" : "")};
}

} // namespace

StructuralReport structural_checks(const fsm::FsmTable& machine, const StructuralOptions& options) {
    StructuralReport r;
    r.checks.push_back(check_totality(machine));
    r.checks.push_back(check_absorbing(machine));
    r.checks.push_back(check_init_uniform(machine));
    r.checks.push_back(check_isomorphism(machine, fsm::reference_machine_fig1(), "iso-no-barrier"));
    r.checks.push_back(check_isomorphism(machine, fsm::reference_machine_fig4(), "iso-block-barrier"));
    r.checks.push_back(check_cosimulation(machine, options));
    return r;
}

} // namespace hirace::verify
