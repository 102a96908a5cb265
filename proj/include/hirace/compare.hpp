// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hirace/litmus.hpp"
#include "hirace/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hirace {

/// Enough to rerun one execution: a hash of the printed program plus the
/// schedule.
struct ReplayBundle {
    std::uint64_t program_hash = 0;
    std::vector<ThreadId> schedule;

    std::string describe() const;
};

/// FNV-1a over the pretty-printed program.
std::uint64_t program_hash(const litmus::KernelProgram& program);

struct DivergenceRow {
    std::string detector;
    Verdict verdict = Verdict::RaceFree;
    std::string reference;
    Verdict reference_verdict = Verdict::RaceFree;
    std::vector<Address> missing; // racy for the reference only
    std::vector<Address> extra;   // racy for this detector only
    std::string tag;              // eviction-omission, verdict-mismatch, address-mismatch
};

struct ComparisonSummary {
    std::vector<DivergenceRow> rows;
    bool empty() const { return rows.empty(); }
};

/// Results disagree with the reference in a way that means a bug.
class DetectorDivergence : public Error {
public:
    DetectorDivergence(const std::string& what, ReplayBundle bundle);
    const ReplayBundle& bundle() const { return bundle_; }

private:
    ReplayBundle bundle_;
};

/// The fsm result (else vclock) is the reference. Any fsm/vclock
/// disagreement throws DetectorDivergence. Results from different
/// executions throw Error.
ComparisonSummary compare_runs(const std::vector<RunResult>& results, const ReplayBundle& bundle);

} // namespace hirace
