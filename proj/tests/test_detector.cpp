// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include "hirace/compare.hpp"

#include <doctest.h>

using namespace hirace;

namespace {

RunResult run(const std::string& spec, const litmus::MaterializedProgram& m, const Schedule& s, bool report_all = false) {
    auto ctx = test::context_for(m);
    ctx.report_all = report_all;
    auto d = make_detector(spec, ctx);
    return run_schedule(m, s, *d);
}

} // namespace

TEST_SUITE("detector") {

TEST_CASE("factory") {
    const auto m = test::materialize("read_write.hl");
    const auto ctx = test::context_for(m);
    CHECK(make_detector("fsm", ctx)->name() == "fsm");
    CHECK(make_detector("vclock", ctx)->name() == "vclock");
    CHECK(make_detector("none", ctx)->name() == "none");
    CHECK(make_detector("finite", ctx)->name() == "finite:1");
    CHECK(make_detector("finite:3", ctx)->name() == "finite:3");
    CHECK_THROWS_AS(make_detector("finite:0", ctx), DetectorSpecError);
    CHECK_THROWS_AS(make_detector("finite:x", ctx), DetectorSpecError);
    CHECK_THROWS_AS(make_detector("tsan", ctx), DetectorSpecError);
    auto no_machine = ctx;
    no_machine.machine = nullptr;
    CHECK(make_detector("fsm", no_machine)->name() == "fsm");
    CHECK_THROWS_AS(FsmDetector{no_machine}, DetectorSpecError);
}

TEST_CASE("fresh detectors see an empty stream as race-free") {
    const auto m = litmus::materialize_threads(
        litmus::parse_program("config blocks=1 warps=1 lanes=4\narray d global 1\nbegin\nsyncthreads\nend\n"));
    for (const char* spec : {"fsm", "vclock", "finite:1", "none"}) {
        const auto r = run(spec, m, Schedule::random_seed(1));
        CHECK(r.verdict == Verdict::RaceFree);
        CHECK(r.reports.empty());
    }
}

TEST_CASE("identical streams give identical reports") {
    const auto m = test::materialize("barrier_shift.hl", "2x1x4");
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto a = run("fsm", m, Schedule::random_seed(seed));
        const auto b = run("fsm", m, Schedule::random_seed(seed));
        CHECK(a.reports == b.reports);
        REQUIRE(a.verdict == Verdict::Racy);
        // Replaying the recorded schedule reproduces the printed reports.
        const auto c = run("fsm", m, Schedule::explicit_picks(a.schedule));
        std::string x, y;
        for (const auto& r : a.reports) x += format_report(r, &m.addresses) + "\n";
        for (const auto& r : c.reports) y += format_report(r, &m.addresses) + "\n";
        CHECK(x == y);
    }
}

TEST_CASE("eviction order: fsm keeps the race, one reader slot loses it") {
    const auto m = test::materialize("neighbour_update.hl");
    const auto s = Schedule::explicit_picks({1, 0, 0, 0});
    CHECK(run("fsm", m, s).verdict == Verdict::Racy);
    CHECK(run("finite:1", m, s).verdict == Verdict::RaceFree);
}

TEST_CASE("report line format") {
    const auto m = test::materialize("read_write.hl", "1x1x2");
    const auto r = run("fsm", m, Schedule::explicit_picks({0, 0, 1}));
    REQUIRE(r.reports.size() == 1);
    CHECK(format_report(r.reports[0], &m.addresses) ==
          "RACE addr=data[0] detector=fsm cur=1/R@0 prev_state=WRITE prev_tid=0 bc=0 wc=0");
    CHECK(format_report(r.reports[0]) ==
          "RACE addr=0 detector=fsm cur=1/R@0 prev_state=WRITE prev_tid=0 bc=0 wc=0");
    const auto v = run("vclock", m, Schedule::explicit_picks({0, 0, 1}));
    REQUIRE(v.reports.size() == 1);
    CHECK(format_report(v.reports[0], &m.addresses) ==
          "RACE addr=data[0] detector=vclock cur=1/R@0 prev_state=W prev_tid=0 bc=0 wc=0");
}

TEST_CASE("one report per address unless every racing access is requested") {
    const auto m = test::materialize("read_write.hl", "1x2x2");
    const auto once = run("fsm", m, Schedule::explicit_picks({}));
    CHECK(once.reports.size() == 1);
    const auto all = run("fsm", m, Schedule::explicit_picks({}), true);
    CHECK(all.reports.size() == 6);
    const auto vall = run("vclock", m, Schedule::explicit_picks({}), true);
    CHECK(vall.reports.size() == 6);
}

TEST_CASE("fsm metadata is exactly one word per address") {
    const auto m = test::materialize("barrier_shift.hl", "2x2x2");
    FsmDetector d(test::context_for(m));
    run_schedule(m, Schedule::random_seed(4), d);
    CHECK(d.finalize().metadata_bytes == 8 * m.addresses.size());
}

TEST_CASE("fsm rejects layouts that cannot hold the machine or the grid") {
    const auto m = test::materialize("read_write.hl", "2x2x2");
    auto ctx = test::context_for(m);
    ctx.layout = ShadowLayout{4, 28, 16, 16};
    CHECK_THROWS_AS(FsmDetector{ctx}, LayoutError);
    ctx.layout = ShadowLayout{5, 2, 25, 32};
    CHECK_THROWS_AS(FsmDetector{ctx}, LayoutError);
    ctx.layout = ShadowLayout{5, 3, 24, 32};
    CHECK_NOTHROW(FsmDetector{ctx});
}

TEST_CASE("comparing detectors on one execution") {
    const auto rw = test::materialize("barrier_shift.hl", "1x1x4");
    const auto s = Schedule::explicit_picks(random_schedule(rw, 2));
    const ReplayBundle bundle{program_hash(test::load_litmus("barrier_shift.hl", "1x1x4")), s.picks};
    const std::vector<RunResult> clean{run("fsm", rw, s), run("vclock", rw, s), run("finite:1", rw, s)};
    CHECK(compare_runs(clean, bundle).empty());

    const auto nb = test::materialize("neighbour_update.hl");
    const auto ev = Schedule::explicit_picks({1, 0, 0, 0});
    const ReplayBundle nb_bundle{program_hash(test::load_litmus("neighbour_update.hl")), run("fsm", nb, ev).schedule};
    const auto summary = compare_runs({run("fsm", nb, ev), run("finite:1", nb, ev)}, nb_bundle);
    REQUIRE(summary.rows.size() == 1);
    CHECK(summary.rows[0].tag == "eviction-omission");
    CHECK(summary.rows[0].detector == "finite:1");
    CHECK(summary.rows[0].missing == std::vector<Address>{1});

    auto fake = run("vclock", nb, ev);
    fake.reports.clear();
    fake.verdict = Verdict::RaceFree;
    try {
        compare_runs({run("fsm", nb, ev), fake}, nb_bundle);
        FAIL("expected DetectorDivergence");
    } catch (const DetectorDivergence& e) {
        CHECK(e.bundle().schedule == nb_bundle.schedule);
        CHECK(std::string(e.what()).find("schedule=\"1 0 0 0 1 1\"") != std::string::npos);
    }

    const auto other = run("vclock", nb, Schedule::explicit_picks({0}));
    CHECK_THROWS_AS(compare_runs({run("fsm", nb, ev), other}, nb_bundle), Error);
}

TEST_CASE("program hash tracks the printed program") {
    const auto a = test::load_litmus("read_write.hl");
    auto b = a;
    CHECK(program_hash(a) == program_hash(b));
    b.grid.lanes_per_warp = 3;
    CHECK(program_hash(a) != program_hash(b));
}

} // TEST_SUITE
