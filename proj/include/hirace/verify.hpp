// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hirace/fsm.hpp"
#include "hirace/litmus.hpp"
#include "hirace/model.hpp"
#include "hirace/shadow.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hirace::verify {

/// Schedule counts overflow 64 bits quickly.
__extension__ typedef unsigned __int128 u128;

enum class ProgramMode : std::uint8_t { Exhaustive, SeededRandom };
enum class ScheduleMode : std::uint8_t { Exhaustive, Random };

/// Bounded program family.
///
/// Exhaustive programs: every grid within the bounds and every body of at
/// most `max_events` top-level statements drawn from a menu of barriers and
/// accesses. An access picks a kind, an index from {0, 1, lane, wid, bid}
/// (kept below `max_addrs`) and a guard from {none, lane==0, wid==0, bid==0,
/// gtid==0}. Each statement yields at most one event per thread. Programs
/// are deduplicated by their materialized form up to address renaming,
/// automorphisms of the block/warp/lane hierarchy and, when `kind_symmetry`
/// is set, swapping R and A.
struct FamilyConfig {
    std::uint32_t max_blocks = 2;
    std::uint32_t max_warps = 2;
    std::uint32_t max_lanes = 2;
    std::uint32_t max_events = 3; // top-level statements
    std::uint32_t max_addrs = 2;
    std::vector<AccessKind> kinds{AccessKind::Read, AccessKind::Write, AccessKind::Atomic};
    bool sync_threads = true;
    bool sync_warp = true;
    bool kind_symmetry = false;

    ProgramMode programs = ProgramMode::Exhaustive;
    ScheduleMode schedules = ScheduleMode::Exhaustive;
    std::uint64_t random_programs = 1000;
    std::uint64_t random_schedules = 8;
    std::uint64_t seed = 1;

    /// Exhaustive schedules by running every interleaving one by one with
    /// the fsm and vclock detectors instead of exploring orders per address.
    /// Only practical for tiny families; used to cross-check the explorer.
    bool literal_schedules = false;
    std::uint64_t literal_limit = 200000; // schedules per program

    /// Upper bound on raw (pre-deduplication) programs.
    std::uint64_t budget = 50'000'000;
    unsigned workers = 1;
    ShadowLayout layout;
};

struct Witness {
    std::string kind; // soundness, completeness, schedule-dependence, oracle
    std::string program;
    std::vector<ThreadId> schedule;
    Verdict fsm = Verdict::RaceFree;
    Verdict oracle = Verdict::RaceFree;
    std::string detail;
};

struct VerifyReport {
    std::uint64_t raw_programs = 0;
    std::uint64_t programs = 0;       // after deduplication
    std::uint64_t racy_programs = 0;  // by the oracle
    u128 instances = 0;  // program x schedule pairs covered
    std::uint64_t sound_viol = 0;     // programs where fsm reports a race the oracle does not
    std::uint64_t complete_viol = 0;  // programs where some schedule misses an oracle race
    std::uint64_t sched_dep = 0;      // programs whose fsm verdict varies across schedules
    std::uint64_t oracle_disagree = 0; // vclock vs static analysis (literal/random modes)
    std::uint64_t estimate = 0;       // raw program count the bounds imply
    bool partial = false;             // budget cut the run short
    std::vector<Witness> witnesses;   // first few failures

    bool pass() const { return !partial && sound_viol == 0 && complete_viol == 0 && sched_dep == 0 && oracle_disagree == 0; }
    /// `checked=<instances> sound_viol=<n> complete_viol=<n> sched_dep=<n>`
    std::string summary_line() const;
};

std::string to_string(u128 v);

/// Raw number of programs the exhaustive family enumerates.
std::uint64_t family_estimate(const FamilyConfig& family);

/// Calls `visit` once per deduplicated family program (exhaustive mode) or
/// per generated program (seeded-random mode). Returns the raw count.
std::uint64_t for_each_family_program(const FamilyConfig& family,
                                      const std::function<void(const litmus::KernelProgram&)>& visit);

/// Canonical key of a materialized program under the family symmetries.
std::string canonical_key(const litmus::MaterializedProgram& program, bool kind_symmetry);

/// Outcome of exploring every order of the accesses to one address.
struct AddressOutcome {
    Address addr = 0;
    bool can_race = false;  // some order drives the shadow word into RACE
    bool can_clean = false; // some complete order never does
    std::uint64_t states = 0;
};

std::vector<AddressOutcome> explore_addresses(const litmus::MaterializedProgram& program, const fsm::FsmTable& machine,
                                              const ShadowLayout& layout = {});

/// Number of complete schedules (saturates at 2^128 - 1).
u128 count_schedules(const litmus::MaterializedProgram& program);

/// A complete schedule on which the fsm detector does (want_race) or does
/// not report a race, if one exists.
std::optional<std::vector<ThreadId>> find_schedule(const litmus::MaterializedProgram& program,
                                                   const fsm::FsmTable& machine, bool want_race,
                                                   const ShadowLayout& layout = {});

VerifyReport differential_verify(const FamilyConfig& family, const fsm::FsmTable& machine);

struct ProjectionReport {
    std::uint64_t programs = 0;
    std::uint64_t racy = 0;
    std::uint64_t counterexamples = 0;
    std::vector<std::string> witnesses;
};

/// For one program: a pair of threads whose two-thread projection is racy,
/// or nullopt. Race-free programs return {} and count as passing.
std::optional<std::pair<ThreadId, ThreadId>> racy_projection(const litmus::MaterializedProgram& program);

ProjectionReport two_thread_projection_check(const FamilyConfig& family);

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct StructuralReport {
    std::vector<CheckResult> checks;
    bool pass() const;
    const CheckResult* find(std::string_view name) const;
};

struct StructuralOptions {
    std::uint64_t cosim_strings = 100000;
    unsigned max_length = 48;
    std::uint64_t seed = 1;
};

/// Totality, absorbing RACE, uniform INIT row, isomorphism of the minimized
/// restrictions with both reference machines (when the alphabet covers
/// theirs) and minimization co-simulation on random label strings.
StructuralReport structural_checks(const fsm::FsmTable& machine, const StructuralOptions& options = {});

} // namespace hirace::verify
