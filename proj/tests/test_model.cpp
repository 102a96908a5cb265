// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include "hirace/rng.hpp"

#include <doctest.h>

#include <set>

using namespace hirace;
using litmus::EventKind;

namespace {

/// Records what the runner hands to a detector.
class Recorder final : public Detector {
public:
    std::string name() const override { return "recorder"; }
    std::optional<RaceReport> on_access(const AccessInfo& a) override {
        accesses.push_back(a);
        return std::nullopt;
    }
    void on_barrier(Scope scope, std::span<const ThreadId> participants) override {
        barriers.emplace_back(scope, std::vector<ThreadId>(participants.begin(), participants.end()));
    }
    DetectorStats finalize() const override { return {}; }

    std::vector<AccessInfo> accesses;
    std::vector<std::pair<Scope, std::vector<ThreadId>>> barriers;
};

litmus::MaterializedProgram parse(const std::string& text) {
    return litmus::materialize_threads(litmus::parse_program(text));
}

std::uint64_t factorial(unsigned n) { return n <= 1 ? 1 : n * factorial(n - 1); }

} // namespace

TEST_SUITE("model") {

TEST_CASE("read-write race under an interleaved schedule") {
    const auto m = test::materialize("read_write.hl", "1x1x2");
    const auto r = test::run_fsm(m, {0, 1, 0, 1});
    CHECK(r.verdict == Verdict::Racy);
    REQUIRE(r.reports.size() == 1);
    CHECK(r.reports[0].addr == 0);
    CHECK(r.schedule == std::vector<ThreadId>{0, 1, 0, 1});
    CHECK(r.stats.events == 4);
}

TEST_CASE("single thread never races") {
    for (const char* name : {"read_write.hl", "barrier_shift.hl", "neighbour_update.hl"}) {
        const auto m = test::materialize(name, "1x1x1");
        for (const char* det : {"fsm", "vclock", "finite:1"}) {
            auto d = make_detector(det, test::context_for(m));
            CHECK(run_schedule(m, Schedule::random_seed(3), *d).verdict == Verdict::RaceFree);
        }
    }
}

TEST_CASE("divergent barrier deadlocks") {
    const auto m = parse("config blocks=1 warps=1 lanes=2\nbegin\nif lane == 0 then\nsyncthreads\nendif\nend\n");
    NullDetector none;
    try {
        run_schedule(m, Schedule::explicit_picks({}), none);
        FAIL("expected Deadlock");
    } catch (const Deadlock& e) {
        CHECK(e.waiting() == std::vector<ThreadId>{0});
    }
    CHECK_THROWS_AS(oracle::check_barrier_uniformity(m), Deadlock);
}

TEST_CASE("picking a thread that cannot run is an invalid schedule") {
    const auto m = test::materialize("barrier_shift.hl", "1x1x2");
    NullDetector none;
    CHECK_THROWS_AS(run_schedule(m, Schedule::explicit_picks({0, 0, 0}), none), InvalidSchedule);
    CHECK_THROWS_AS(run_schedule(m, Schedule::explicit_picks({7}), none), InvalidSchedule);
    const auto rw = test::materialize("read_write.hl", "1x1x2");
    CHECK_THROWS_AS(run_schedule(rw, Schedule::explicit_picks({0, 0, 0}), none), InvalidSchedule);
}

TEST_CASE("a schedule prefix is completed lowest gtid first") {
    const auto m = test::materialize("read_write.hl", "1x1x2");
    NullDetector none;
    CHECK(run_schedule(m, Schedule::explicit_picks({1}), none).schedule == std::vector<ThreadId>{1, 0, 0, 1});
    CHECK(run_schedule(m, Schedule::explicit_picks({}), none).schedule == std::vector<ThreadId>{0, 0, 1, 1});
}

TEST_CASE("schedule enumeration counts") {
    const auto one = parse("config blocks=1 warps=1 lanes=2\narray d global 2\nbegin\nread d[lane]\nend\n");
    CHECK(enumerate_schedules(one).schedules.size() == 2);
    const auto two = parse("config blocks=1 warps=1 lanes=2\narray d global 2\nbegin\nread d[lane]\nwrite d[lane]\nend\n");
    const auto s = enumerate_schedules(two);
    CHECK(s.schedules.size() == 6);
    CHECK_FALSE(s.truncated);
    CHECK(std::set<std::vector<ThreadId>>(s.schedules.begin(), s.schedules.end()).size() == 6);
    const auto capped = enumerate_schedules(two, 4);
    CHECK(capped.schedules.size() == 4);
    CHECK(capped.truncated);
}

TEST_CASE("barrier holds back enumeration") {
    const auto m = test::materialize("barrier_shift.hl", "1x1x2");
    const auto s = enumerate_schedules(m);
    REQUIRE_FALSE(s.schedules.empty());
    for (const auto& sched : s.schedules) {
        // Each thread's first pick is its read; both reads precede everything else.
        std::vector<unsigned> seen(2, 0);
        unsigned reads_done = 0;
        for (ThreadId t : sched) {
            const auto pos = seen[t]++;
            if (pos == 0) ++reads_done;
            else if (pos >= 2) CHECK(reads_done == 2);
        }
    }
}

TEST_CASE("barrier-free enumeration matches the multinomial count") {
    Rng rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        const unsigned threads = 2 + rng.below(3);
        litmus::MaterializedProgram m;
        m.grid = {1, 1, threads};
        m.addresses = litmus::AddressSpace({{"d", litmus::ArrayScope::Global, 2}}, 1);
        m.present.assign(threads, true);
        m.threads.resize(threads);
        unsigned total = 0;
        std::uint64_t denominator = 1;
        for (auto& t : m.threads) {
            const unsigned n = rng.below(4);
            if (total + n > 8) break;
            for (unsigned i = 0; i < n; ++i) t.push_back({EventKind::Read, static_cast<Address>(rng.below(2)), i});
            total += n;
            denominator *= factorial(n);
        }
        const auto s = enumerate_schedules(m);
        CHECK(s.schedules.size() == factorial(total) / denominator);
        CHECK(std::set<std::vector<ThreadId>>(s.schedules.begin(), s.schedules.end()).size() == s.schedules.size());
    }
}

TEST_CASE("random schedules") {
    const auto m = test::materialize("read_write.hl", "1x1x2");
    CHECK(random_schedule(m, 42) == random_schedule(m, 42));
    const auto single = test::materialize("read_write.hl", "1x1x1");
    CHECK(random_schedule(single, 5) == std::vector<ThreadId>{0, 0});
    std::set<ThreadId> first;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) first.insert(random_schedule(m, seed).front());
    CHECK(first == std::set<ThreadId>{0, 1});
    NullDetector none;
    CHECK(run_schedule(m, Schedule::random_seed(9), none).schedule == random_schedule(m, 9));
}

TEST_CASE("runs replay identically") {
    const auto m = test::materialize("barrier_shift.hl", "2x1x4");
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto a = test::run_fsm(m, Schedule::random_seed(seed));
        const auto b = test::run_fsm(m, Schedule::explicit_picks(a.schedule));
        CHECK(a.reports == b.reports);
        CHECK(a.schedule == b.schedule);
    }
}

TEST_CASE("the detector sees each thread's events in program order with barrier counts") {
    const auto m = parse(R"(config blocks=2 warps=2 lanes=2
array d global 4
begin
  read d[lane]
  syncwarp
  write d[wid]
  syncthreads
  atomic d[bid]
  syncwarp
  syncthreads
  read d[3]
end
)");
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Recorder rec;
        const auto r = run_schedule(m, Schedule::random_seed(seed), rec);
        std::vector<std::vector<AccessInfo>> per_thread(8);
        for (const auto& a : rec.accesses) per_thread[a.tid].push_back(a);
        for (ThreadId t = 0; t < 8; ++t) {
            std::uint32_t bc = 0, wc = 0;
            std::size_t k = 0;
            for (const auto& e : m.threads[t]) {
                if (e.kind == EventKind::SyncThreads) ++bc;
                else if (e.kind == EventKind::SyncWarp) ++wc;
                else {
                    REQUIRE(k < per_thread[t].size());
                    CHECK(per_thread[t][k].addr == e.addr);
                    CHECK(per_thread[t][k].kind == e.access_kind());
                    CHECK(per_thread[t][k].instr == e.instr);
                    CHECK(per_thread[t][k].bc == bc);
                    CHECK(per_thread[t][k].wc == wc);
                    ++k;
                }
            }
            CHECK(k == per_thread[t].size());
        }
        // 2 blocks x 2 block barriers, 4 warps x 2 warp barriers
        CHECK(r.stats.barriers == 12);
        for (const auto& [scope, who] : rec.barriers) CHECK(who.size() == (scope == Scope::Block ? 4u : 2u));
    }
}

TEST_CASE("absent threads neither run nor hold barriers") {
    const auto m = test::materialize("barrier_shift.hl", "1x1x4").project({1, 2});
    NullDetector none;
    const auto r = run_schedule(m, Schedule::explicit_picks({}), none);
    for (ThreadId t : r.schedule) CHECK((t == 1 || t == 2));
    CHECK(r.stats.events == 6);
}

TEST_CASE("clock overflow disables detection but keeps earlier reports") {
    const auto m = test::materialize("overflow.hl");
    const auto layout = ShadowLayout::from_flags({}, {}, 2, {});
    CHECK(layout.bc_bits == 2);
    const auto r = test::run_fsm(m, Schedule::explicit_picks({}), test::generated_machine(), layout);
    CHECK(r.clock_overflow);
    CHECK(r.detection_disabled);
    REQUIRE(r.reports.size() == 1);
    CHECK(r.reports[0].addr == 0);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0] == "block clock overflow (bc-bits=2); race detection disabled after 1 report(s)");

    // Three barriers fit a 2-bit clock; the later race is then found too.
    auto p = test::load_litmus("overflow.hl");
    p.body.erase(p.body.begin() + 1);
    const auto three = test::run_fsm(litmus::materialize_threads(p), Schedule::explicit_picks({}),
                                     test::generated_machine(), layout);
    CHECK_FALSE(three.clock_overflow);
    CHECK(three.reports.size() == 2);
}

TEST_CASE("schedule text round-trips") {
    const std::vector<ThreadId> s{3, 0, 12, 1};
    CHECK(format_schedule(s) == "3 0 12 1");
    CHECK(parse_schedule(" 3 0\n12\t1 ") == s);
    CHECK(parse_schedule("") .empty());
    CHECK_THROWS_AS(parse_schedule("1 x"), Error);
}

} // TEST_SUITE
