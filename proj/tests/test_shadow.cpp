// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include "hirace/rng.hpp"
#include "hirace/shadow.hpp"

#include <doctest.h>

#include <map>
#include <mutex>
#include <thread>

using namespace hirace;

namespace {

const litmus::GridConfig kGrid{2, 2, 2};

fsm::StateId state(const fsm::FsmTable& m, const char* name) {
    const auto s = m.find(name);
    REQUIRE(s.has_value());
    return *s;
}

struct Commit {
    ShadowWord old_word;
    ShadowWord new_word;
    AccessKind kind;
    ThreadId tid;
};

/// True when the commits chain into one path starting at the all-zero word
/// and ending at `final_word` (Hierholzer over the multigraph).
bool chains(const std::vector<Commit>& commits, ShadowWord final_word) {
    std::map<ShadowWord, std::vector<ShadowWord>> out;
    std::map<ShadowWord, int> balance;
    for (const auto& c : commits) {
        out[c.old_word].push_back(c.new_word);
        ++balance[c.old_word];
        --balance[c.new_word];
    }
    for (const auto& [w, b] : balance) {
        const int want = commits.empty() ? 0 : (w == 0 && final_word != 0) ? 1 : (w == final_word && final_word != 0) ? -1 : 0;
        if (b != want) return false;
    }
    std::vector<ShadowWord> stack{0}, path;
    while (!stack.empty()) {
        auto& edges = out[stack.back()];
        if (edges.empty()) {
            path.push_back(stack.back());
            stack.pop_back();
        } else {
            stack.push_back(edges.back());
            edges.pop_back();
        }
    }
    return path.size() == commits.size() + 1 && path.front() == final_word;
}

} // namespace

TEST_SUITE("shadow") {

TEST_CASE("pack and unpack") {
    const ShadowLayout l;
    CHECK(l.state_bits == 5);
    CHECK(l.tid_bits == 27);
    CHECK(l.bc_bits == 16);
    CHECK(l.wc_bits == 16);
    CHECK(pack_shadow(l, {0, 0, 0, 0}) == 0);
    const ShadowFields f{1, 3, 1, 0};
    CHECK(unpack_shadow(l, pack_shadow(l, f)) == f);
    CHECK(pack_shadow(l, {1, 0, 0, 0}) == (1ull << 59));
    CHECK(pack_shadow(l, {0, 1, 0, 0}) == (1ull << 32));
    CHECK(pack_shadow(l, {0, 0, 1, 0}) == (1ull << 16));
    CHECK(pack_shadow(l, {0, 0, 0, 1}) == 1);
    CHECK_THROWS_AS(pack_shadow(l, {0, 1u << 27, 0, 0}), FieldOverflow);
    CHECK_NOTHROW(pack_shadow(l, {31, (1u << 27) - 1, 65535, 65535}));
    CHECK_THROWS_AS(pack_shadow(l, {32, 0, 0, 0}), FieldOverflow);
    CHECK_THROWS_AS(pack_shadow(l, {0, 0, 65536, 0}), FieldOverflow);
    CHECK_THROWS_AS(pack_shadow(l, {0, 0, 0, 65536}), FieldOverflow);
}

TEST_CASE("round trip over small layouts and random default words") {
    for (const ShadowLayout l : {ShadowLayout{2, 30, 2, 30}, ShadowLayout{3, 29, 3, 29}, ShadowLayout{1, 32, 1, 30}}) {
        const std::uint32_t tids[] = {0, 1, static_cast<std::uint32_t>(l.max_tid())};
        const std::uint32_t wcs[] = {0, 1, static_cast<std::uint32_t>(l.max_wc())};
        for (std::uint64_t s = 0; s <= l.max_state(); ++s)
            for (std::uint64_t bc = 0; bc <= l.max_bc(); ++bc)
                for (auto t : tids)
                    for (auto wc : wcs) {
                        const ShadowFields f{static_cast<fsm::StateId>(s), t, static_cast<std::uint32_t>(bc), wc};
                        CHECK(unpack_shadow(l, pack_shadow(l, f)) == f);
                    }
    }
    const ShadowLayout l;
    Rng rng(5);
    for (int i = 0; i < 20000; ++i) {
        const ShadowFields f{static_cast<fsm::StateId>(rng.below(32)), static_cast<ThreadId>(rng.below(1u << 27)),
                             static_cast<std::uint32_t>(rng.below(65536)), static_cast<std::uint32_t>(rng.below(65536))};
        CHECK(unpack_shadow(l, pack_shadow(l, f)) == f);
    }
}

TEST_CASE("layouts from flags") {
    CHECK(ShadowLayout::from_flags({}, {}, {}, {}) == ShadowLayout{});
    CHECK(ShadowLayout::from_flags({}, {}, 2, {}) == ShadowLayout{5, 32, 2, 25});
    CHECK(ShadowLayout::from_flags({}, {}, 20, {}) == ShadowLayout{5, 23, 20, 16});
    CHECK(ShadowLayout::from_flags(6, {}, {}, {}) == ShadowLayout{6, 26, 16, 16});
    CHECK(ShadowLayout::from_flags({}, 10, {}, {}) == ShadowLayout{5, 10, 17, 32});
    CHECK(ShadowLayout::from_flags(4, 20, 20, 20) == ShadowLayout{4, 20, 20, 20});
    CHECK_THROWS_AS(ShadowLayout::from_flags(4, 20, 20, 10), LayoutError);
    CHECK_THROWS_AS(ShadowLayout::from_flags(9, {}, {}, {}), LayoutError);
    CHECK_THROWS_AS((ShadowLayout{5, 27, 16, 15}.validate()), LayoutError);
}

TEST_CASE("thread relations on a 2x2x2 grid") {
    CHECK(compare_tids(3, 3, kGrid) == ThreadRelation::Self);
    CHECK(compare_tids(3, 4, kGrid) == ThreadRelation::Global);
    CHECK(compare_tids(3, 2, kGrid) == ThreadRelation::Warp);
    CHECK(compare_tids(3, 0, kGrid) == ThreadRelation::Block);
    CHECK(compare_tids(7, 4, kGrid) == ThreadRelation::Block);
    CHECK_THROWS_AS(compare_tids(3, 8, kGrid), Error);
}

TEST_CASE("synchronization status") {
    CHECK(check_sync(ThreadRelation::Block, 1, 0, 0, 0) == SyncStatus::Bs);
    CHECK(check_sync(ThreadRelation::Global, 7, 0, 0, 0) == SyncStatus::Us);
    CHECK(check_sync(ThreadRelation::Warp, 0, 0, 1, 0) == SyncStatus::Ws);
    CHECK(check_sync(ThreadRelation::Self, 0, 0, 1, 0) == SyncStatus::Ws);
    CHECK(check_sync(ThreadRelation::Warp, 1, 0, 1, 0) == SyncStatus::Bs);
    CHECK(check_sync(ThreadRelation::Block, 0, 0, 3, 0) == SyncStatus::Us);
    CHECK(check_sync(ThreadRelation::Warp, 2, 2, 5, 5) == SyncStatus::Us);
    CHECK_THROWS_AS(check_sync(ThreadRelation::Block, 0, 1, 0, 0), ModelViolation);
    CHECK_THROWS_AS(check_sync(ThreadRelation::Warp, 1, 1, 0, 1), ModelViolation);
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const auto r = [&] { return static_cast<std::uint32_t>(rng.below(100)); };
        CHECK(check_sync(ThreadRelation::Global, r(), r(), r(), r()) == SyncStatus::Us);
    }
}

TEST_CASE("shadow updates walk the machine") {
    for (const auto& m : {fsm::reference_machine_fig1(), *test::generated_machine()}) {
        const ShadowLayout l;
        ShadowTable table(1);
        auto u = update_shadow(table, 0, AccessKind::Read, 3, 0, 0, m, kGrid, l);
        CHECK(u.step.after.state == state(m, "READ"));
        CHECK(u.step.after.tid == 3);
        CHECK(unpack_shadow(l, table.load(0)).state == state(m, "READ"));

        u = update_shadow(table, 0, AccessKind::Read, 4, 0, 0, m, kGrid, l);
        CHECK(u.step.after.state == state(m, "GREAD"));
        CHECK(u.step.label.rel == ThreadRelation::Global);

        u = update_shadow(table, 0, AccessKind::Write, 4, 0, 0, m, kGrid, l);
        CHECK(u.step.after.state == m.race());
        CHECK(u.step.entered_race);

        u = update_shadow(table, 0, AccessKind::Read, 0, 0, 0, m, kGrid, l);
        CHECK(u.step.after.state == m.race());
        CHECK_FALSE(u.step.entered_race);

        ShadowTable t2(1);
        update_shadow(t2, 0, AccessKind::Read, 3, 0, 0, m, kGrid, l);
        u = update_shadow(t2, 0, AccessKind::Write, 3, 0, 0, m, kGrid, l);
        CHECK(u.step.after.state == state(m, "WRITE"));
        CHECK(u.step.label.rel == ThreadRelation::Self);
    }
}

TEST_CASE("race is absorbing at runtime") {
    const auto& m = *test::generated_machine();
    const ShadowLayout l;
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        ShadowTable table(1);
        bool raced = false;
        for (int i = 0; i < 30; ++i) {
            const auto kind = static_cast<AccessKind>(rng.below(3));
            const auto u = update_shadow(table, 0, kind, static_cast<ThreadId>(rng.below(8)), 0, 0, m, kGrid, l);
            if (raced) CHECK(u.step.after.state == m.race());
            raced |= u.step.after.state == m.race();
        }
    }
}

TEST_CASE("unknown transitions surface as model violations") {
    const auto fig1 = fsm::reference_machine_fig1();
    ShadowTable table(1);
    update_shadow(table, 0, AccessKind::Read, 0, 0, 0, fig1, kGrid, {});
    CHECK_THROWS_AS(update_shadow(table, 0, AccessKind::Atomic, 1, 0, 0, fig1, kGrid, {}), ModelViolation);
}

TEST_CASE("barrier clocks") {
    std::uint32_t bc = 0;
    CHECK(on_barrier(bc, 16));
    CHECK(bc == 1);
    std::uint32_t wc = 65535;
    CHECK_FALSE(on_barrier(wc, 16));
    CHECK(wc == 65535);
    std::uint32_t small = 2;
    CHECK(on_barrier(small, 2));
    CHECK(small == 3);
    CHECK_FALSE(on_barrier(small, 2));
    CHECK(small == 3);

    const auto m = litmus::materialize_threads(litmus::parse_program(
        "config blocks=1 warps=1 lanes=2\nbegin\nsyncwarp\nsyncthreads\nend\n"));
    ExecutionState st(m);
    st.step(0);
    st.step(1);
    CHECK(st.threads()[0].wc == 1);
    CHECK(st.threads()[0].bc == 0);
    st.step(0);
    st.step(1);
    CHECK(st.threads()[1].bc == 1);
    CHECK(st.threads()[1].wc == 1);
}

TEST_CASE("metadata is one 8-byte word per address") {
    CHECK(sizeof(ShadowWord) == 8);
    CHECK(ShadowTable::bytes_per_address() == 8);
    CHECK(ShadowTable(100).metadata_bytes() == 800);
}

TEST_CASE("a failed compare-and-swap retries from the fresh word") {
    const auto& m = *test::generated_machine();
    const ShadowLayout l;
    ShadowTable table(1);
    update_shadow(table, 0, AccessKind::Read, 3, 0, 0, m, kGrid, l);
    unsigned calls = 0;
    const CasHook hook = [&](Address addr, unsigned attempt) {
        ++calls;
        // Another thread commits a read from a different block first.
        if (attempt == 0) update_shadow(table, addr, AccessKind::Read, 4, 0, 0, m, kGrid, l);
    };
    const auto u = update_shadow(table, 0, AccessKind::Write, 3, 0, 0, m, kGrid, l, hook);
    CHECK(u.retries == 1);
    CHECK(calls == 2);
    CHECK(u.step.before.state == state(m, "GREAD"));
    CHECK(u.step.after.state == m.race());

    // Same accesses applied sequentially in commit order.
    ShadowTable seq(1);
    update_shadow(seq, 0, AccessKind::Read, 3, 0, 0, m, kGrid, l);
    update_shadow(seq, 0, AccessKind::Read, 4, 0, 0, m, kGrid, l);
    update_shadow(seq, 0, AccessKind::Write, 3, 0, 0, m, kGrid, l);
    CHECK(seq.load(0) == table.load(0));
}

TEST_CASE("concurrent updates are linearizable") {
    const auto& m = *test::generated_machine();
    const ShadowLayout l;
    constexpr Address kAddrs = 3;
    for (int round = 0; round < 20; ++round) {
        ShadowTable table(kAddrs);
        std::mutex mu;
        std::vector<std::vector<Commit>> commits(kAddrs);
        std::vector<std::thread> workers;
        for (ThreadId t = 0; t < 8; ++t) {
            workers.emplace_back([&, t] {
                Rng rng(round * 100 + t);
                std::vector<std::pair<Address, Commit>> mine;
                for (int i = 0; i < 200; ++i) {
                    const Address a = rng.below(kAddrs);
                    const auto kind = rng.chance(0.8) ? AccessKind::Read : static_cast<AccessKind>(1 + rng.below(2));
                    const auto u = update_shadow(table, a, kind, t, 0, 0, m, kGrid, l);
                    mine.push_back({a, {u.old_word, u.new_word, kind, t}});
                }
                std::lock_guard lock(mu);
                for (const auto& [a, c] : mine) commits[a].push_back(c);
            });
        }
        for (auto& w : workers) w.join();
        for (Address a = 0; a < kAddrs; ++a) {
            for (const auto& c : commits[a]) {
                const auto step = shadow_transition(l, m, kGrid, c.old_word, c.kind, c.tid, 0, 0);
                CHECK(pack_shadow(l, step.after) == c.new_word);
            }
            CHECK(chains(commits[a], table.load(a)));
        }
    }
}

} // TEST_SUITE
