// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include "hirace/rng.hpp"
#include "hirace/verify.hpp"

#include <doctest.h>

#include <map>
#include <set>

using namespace hirace;
using namespace hirace::verify;

namespace {

// Small barrier-only family used for fault injection.
FamilyConfig small_family() {
    FamilyConfig f;
    f.max_blocks = 2;
    f.max_warps = 1;
    f.max_lanes = 2;
    f.kinds = {AccessKind::Read, AccessKind::Write};
    f.sync_warp = false;
    return f;
}

fsm::FsmTable reroute(const fsm::FsmTable& m, const char* from, AccessKind kind, const char* to) {
    auto out = m;
    for (unsigned l = 0; l < fsm::kLabelSlots; ++l)
        if (m.alphabet().test(l) && fsm::decode_label(l).kind == kind) out = out.with_transition(*m.find(from), l, *m.find(to));
    return out;
}

std::string key_of(const std::string& text, bool kind_symmetry = false) {
    return canonical_key(litmus::materialize_threads(litmus::parse_program(text)), kind_symmetry);
}

} // namespace

TEST_SUITE("verify") {

TEST_CASE("family size estimate") {
    // One grid per (blocks, warps, lanes) in {1,2}^3. Menu: 2 barriers plus
    // 3 kinds x 5 indices x 5 guards. Bodies hold 0 to 3 statements.
    const std::uint64_t menu = 2 + 3 * 5 * 5;
    const std::uint64_t bodies = 1 + menu + menu * menu + menu * menu * menu;
    CHECK(family_estimate(FamilyConfig{}) == 8 * bodies);
    CHECK(family_estimate(FamilyConfig{}) == 3700320);
}

TEST_CASE("canonical keys collapse symmetric programs") {
    const std::string head = "config blocks=1 warps=1 lanes=2\narray data global 2\nbegin\n";
    CHECK(key_of(head + "write data[0]\nend\n") == key_of(head + "write data[1]\nend\n"));
    CHECK(key_of(head + "if lane == 0 then\nwrite data[0]\nendif\nend\n") ==
          key_of(head + "if lane == 1 then\nwrite data[0]\nendif\nend\n"));
    CHECK(key_of(head + "write data[0]\nend\n") != key_of(head + "if lane == 0 then\nwrite data[0]\nendif\nend\n"));
    CHECK(key_of(head + "read data[0]\nend\n") != key_of(head + "atomic data[0]\nend\n"));
    CHECK(key_of(head + "read data[0]\nend\n", true) == key_of(head + "atomic data[0]\nend\n", true));
    const std::string warps = "config blocks=1 warps=2 lanes=1\narray data global 2\nbegin\n";
    CHECK(key_of(warps + "if wid == 0 then\nread data[0]\nendif\nwrite data[1]\nend\n") ==
          key_of(warps + "if wid == 1 then\nread data[1]\nendif\nwrite data[0]\nend\n"));
}

TEST_CASE("deduplication keeps one program per key") {
    FamilyConfig f;
    f.max_blocks = 1;
    f.max_warps = 1;
    f.max_events = 2;
    std::set<std::string> keys;
    std::uint64_t visited = 0;
    const auto raw = for_each_family_program(f, [&](const litmus::KernelProgram& p) {
        ++visited;
        keys.insert(canonical_key(litmus::materialize_threads(p), false));
    });
    CHECK(raw == family_estimate(f));
    CHECK(visited == keys.size());
    CHECK(visited < raw);
}

TEST_CASE("schedule counts match enumeration") {
    for (std::uint64_t seed = 1; seed <= 150; ++seed) {
        litmus::GenConfig g;
        g.seed = seed;
        g.max_instrs = 3;
        const auto m = litmus::materialize_threads(litmus::generate_random_program(g));
        const auto n = for_each_schedule(m, 200000, [](const std::vector<ThreadId>&) { return true; });
        if (n.truncated) continue;
        CHECK(count_schedules(m) == n.count);
    }
    CHECK(to_string(count_schedules(test::materialize("neighbour_update.hl"))) == "20");
    CHECK(to_string(u128{0}) == "0");
}

TEST_CASE("schedule search") {
    const auto machine = test::generated_machine();
    const auto rw = test::materialize("read_write.hl", "1x1x2");
    const auto racy = find_schedule(rw, *machine, true);
    REQUIRE(racy.has_value());
    CHECK(test::run_fsm(rw, *racy).verdict == Verdict::Racy);
    CHECK_FALSE(find_schedule(rw, *machine, false).has_value());

    const auto bs = test::materialize("barrier_shift.hl", "1x1x4");
    CHECK_FALSE(find_schedule(bs, *machine, true).has_value());
    REQUIRE(find_schedule(bs, *machine, false).has_value());

    // A machine that forgets the reader on a foreign write: the verdict now
    // depends on the order and both outcomes must be found.
    const auto broken = std::make_shared<const fsm::FsmTable>(reroute(*machine, "GREAD", AccessKind::Write, "WRITE"));
    const auto m = litmus::materialize_threads(litmus::parse_program(
        "config blocks=2 warps=1 lanes=1\narray data global 1\nbegin\nread data[0]\nif bid == 1 then\nwrite data[0]\nendif\nend\n"));
    const auto yes = find_schedule(m, *broken, true);
    const auto no = find_schedule(m, *broken, false);
    REQUIRE(yes.has_value());
    REQUIRE(no.has_value());
    CHECK(test::run_fsm(m, Schedule::explicit_picks(*yes), broken).verdict == Verdict::Racy);
    CHECK(test::run_fsm(m, Schedule::explicit_picks(*no), broken).verdict == Verdict::RaceFree);
}

TEST_CASE("per-address exploration agrees with running every schedule") {
    const auto machine = test::generated_machine();
    for (std::uint64_t seed = 1; seed <= 120; ++seed) {
        litmus::GenConfig g;
        g.seed = seed;
        g.max_instrs = 3;
        g.block_shared = seed % 2 == 0;
        const auto m = litmus::materialize_threads(litmus::generate_random_program(g));
        std::map<Address, std::pair<bool, bool>> seen; // addr -> (raced somewhere, clean somewhere)
        for (Address a = 0; a < m.addresses.size(); ++a) seen[a] = {false, false};
        const auto n = for_each_schedule(m, 20000, [&](const std::vector<ThreadId>& s) {
            const auto r = test::run_fsm(m, s);
            std::set<Address> hit;
            for (const auto& rep : r.reports) hit.insert(rep.addr);
            for (auto& [a, v] : seen) (hit.count(a) ? v.first : v.second) = true;
            return true;
        });
        if (n.truncated) continue;
        for (const auto& o : explore_addresses(m, *machine)) {
            CHECK(o.can_race == seen[o.addr].first);
            CHECK(o.can_clean == seen[o.addr].second);
        }
    }
}

TEST_CASE("explorer and literal modes agree") {
    FamilyConfig f;
    f.max_blocks = 1;
    f.max_warps = 2;
    f.max_lanes = 2;
    f.max_events = 2;
    const auto machine = test::generated_machine();
    const auto a = differential_verify(f, *machine);
    f.literal_schedules = true;
    const auto b = differential_verify(f, *machine);
    CHECK(a.pass());
    CHECK(b.pass());
    CHECK(a.programs == b.programs);
    CHECK(a.racy_programs == b.racy_programs);
    CHECK(a.instances == b.instances);

    // Both modes catch the same faulty programs.
    auto g = small_family();
    g.max_lanes = 1;
    g.max_events = 2;
    const auto broken = reroute(*machine, "GREAD", AccessKind::Write, "WRITE");
    const auto bad = reroute(*machine, "READ", AccessKind::Write, "READ");
    for (const auto* m : {&broken, &bad}) {
        const auto x = differential_verify(g, *m);
        g.literal_schedules = true;
        const auto y = differential_verify(g, *m);
        g.literal_schedules = false;
        CHECK(x.complete_viol == y.complete_viol);
        CHECK(x.sound_viol == y.sound_viol);
        CHECK(x.sched_dep == y.sched_dep);
    }
}

TEST_CASE("the generated machine passes a multi-warp family") {
    FamilyConfig f;
    f.max_blocks = 1;
    f.max_events = 2;
    const auto r = differential_verify(f, *test::generated_machine());
    MESSAGE(r.summary_line());
    CHECK(r.pass());
    CHECK(r.racy_programs > 0);
    CHECK(r.summary_line() == "checked=" + to_string(r.instances) + " sound_viol=0 complete_viol=0 sched_dep=0");
}

TEST_CASE("single-thread family has no racy program") {
    FamilyConfig f;
    f.max_blocks = 1;
    f.max_warps = 1;
    f.max_lanes = 1;
    const auto r = differential_verify(f, *test::generated_machine());
    CHECK(r.pass());
    CHECK(r.programs > 0);
    CHECK(r.racy_programs == 0);
}

TEST_CASE("an injected completeness fault is caught with a replayable witness") {
    const auto machine = std::make_shared<const fsm::FsmTable>(
        reroute(*test::generated_machine(), "GREAD", AccessKind::Write, "WRITE"));
    const auto r = differential_verify(small_family(), *machine);
    CHECK_FALSE(r.pass());
    CHECK(r.complete_viol > 0);
    CHECK(r.sched_dep > 0);
    REQUIRE_FALSE(r.witnesses.empty());
    bool replayed = false;
    for (const auto& w : r.witnesses) {
        if (w.kind != "completeness") continue;
        const auto m = litmus::materialize_threads(litmus::parse_program(w.program));
        CHECK(test::run_fsm(m, Schedule::explicit_picks(w.schedule), machine).verdict == Verdict::RaceFree);
        CHECK(oracle::vclock_check(m, Schedule::explicit_picks(w.schedule)).verdict == Verdict::Racy);
        replayed = true;
    }
    CHECK(replayed);
}

TEST_CASE("an injected soundness fault is caught") {
    const auto base = test::generated_machine();
    const auto machine = std::make_shared<const fsm::FsmTable>(base->with_transition(
        *base->find("READ"), fsm::label_index(AccessKind::Read, SyncStatus::Us, ThreadRelation::Global), base->race()));
    const auto r = differential_verify(small_family(), *machine);
    CHECK(r.sound_viol > 0);
    bool replayed = false;
    for (const auto& w : r.witnesses) {
        if (w.kind != "soundness") continue;
        const auto m = litmus::materialize_threads(litmus::parse_program(w.program));
        CHECK(test::run_fsm(m, Schedule::explicit_picks(w.schedule), machine).verdict == Verdict::Racy);
        CHECK(oracle::static_hb_races(m).empty() == (w.oracle == Verdict::RaceFree));
        replayed = true;
    }
    CHECK(replayed);
}

TEST_CASE("verification is deterministic across worker counts") {
    const auto machine = reroute(*test::generated_machine(), "GREAD", AccessKind::Write, "WRITE");
    auto f = small_family();
    f.workers = 1;
    const auto a = differential_verify(f, machine);
    f.workers = 3;
    const auto b = differential_verify(f, machine);
    CHECK(a.summary_line() == b.summary_line());
    CHECK(a.instances == b.instances);
    REQUIRE(a.witnesses.size() == b.witnesses.size());
    for (std::size_t i = 0; i < a.witnesses.size(); ++i) {
        CHECK(a.witnesses[i].program == b.witnesses[i].program);
        CHECK(a.witnesses[i].schedule == b.witnesses[i].schedule);
    }
}

TEST_CASE("random modes are reproducible and pass") {
    FamilyConfig f;
    f.programs = ProgramMode::SeededRandom;
    f.schedules = ScheduleMode::Random;
    f.random_programs = 300;
    f.random_schedules = 4;
    f.seed = 7;
    const auto machine = test::generated_machine();
    const auto a = differential_verify(f, *machine);
    const auto b = differential_verify(f, *machine);
    CHECK(a.pass());
    CHECK(a.programs == 300);
    CHECK(a.instances == 1200);
    CHECK(a.summary_line() == b.summary_line());
    CHECK(a.racy_programs == b.racy_programs);
}

TEST_CASE("budget cuts the run short and fails it") {
    FamilyConfig f;
    f.budget = 100;
    const auto r = differential_verify(f, *test::generated_machine());
    CHECK(r.partial);
    CHECK_FALSE(r.pass());
    CHECK(r.raw_programs <= 100);
}

TEST_CASE("two-thread projection") {
    const auto m = test::materialize("read_write.hl", "1x1x4");
    const auto pair = racy_projection(m);
    REQUIRE(pair.has_value());
    CHECK(*pair == std::pair<ThreadId, ThreadId>{0, 1});
    const auto projected = m.project({0, 1});
    CHECK(oracle::vclock_check(projected, Schedule::explicit_picks({})).verdict == Verdict::Racy);
    CHECK_FALSE(racy_projection(test::materialize("barrier_shift.hl", "1x1x4")).has_value());

    FamilyConfig f;
    f.max_blocks = 1;
    f.max_events = 2;
    const auto r = two_thread_projection_check(f);
    CHECK(r.counterexamples == 0);
    CHECK(r.racy > 0);
    CHECK(r.programs > r.racy);
}

TEST_CASE("structural checks") {
    StructuralOptions opt;
    opt.cosim_strings = 20000;
    const auto fig1 = fsm::reference_machine_fig1();
    const auto r1 = structural_checks(fig1, opt);
    for (const auto& c : r1.checks) CHECK_MESSAGE(c.pass, c.name, ": ", c.detail);
    CHECK(r1.pass());

    const auto leak = fig1.with_transition(fig1.race(), fsm::label_index(AccessKind::Read, SyncStatus::Us, ThreadRelation::Self),
                                           *fig1.find("READ"));
    const auto r2 = structural_checks(leak, opt);
    CHECK_FALSE(r2.pass());
    REQUIRE(r2.find("race-absorbing") != nullptr);
    CHECK_FALSE(r2.find("race-absorbing")->pass);

    const auto r3 = structural_checks(*test::generated_machine(), opt);
    for (const auto& c : r3.checks) CHECK_MESSAGE(c.pass, c.name, ": ", c.detail);
    CHECK(r3.pass());
    CHECK(r3.find("iso-no-barrier") != nullptr);
    CHECK(r3.find("iso-block-barrier") != nullptr);

    const auto fig4 = fsm::reference_machine_fig4();
    const auto twisted = fig4.with_transition(*fig4.find("BREAD"), fsm::label_index(AccessKind::Write, SyncStatus::Bs, ThreadRelation::Block),
                                              fig4.race());
    CHECK_FALSE(structural_checks(twisted, opt).find("iso-block-barrier")->pass);
}

} // TEST_SUITE
