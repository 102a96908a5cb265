// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "hirace/compare.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace hirace {

std::string ReplayBundle::describe() const {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(program_hash));
    return std::string("program=") + hash + " schedule=\"" + format_schedule(schedule) + "\"";
}

std::uint64_t program_hash(const litmus::KernelProgram& program) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : litmus::to_string(program)) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

DetectorDivergence::DetectorDivergence(const std::string& what, ReplayBundle bundle)
    : Error(what + " [" + bundle.describe() + "]"), bundle_(std::move(bundle)) {}

namespace {

std::set<Address> racy_addresses(const RunResult& r) {
    std::set<Address> out;
    for (const auto& rep : r.reports) out.insert(rep.addr);
    return out;
}

bool is_pair(const std::string& a, const std::string& b, const char* x, const char* y) {
    return (a == x && b == y) || (a == y && b == x);
}

} // namespace

ComparisonSummary compare_runs(const std::vector<RunResult>& results, const ReplayBundle& bundle) {
    ComparisonSummary summary;
    if (results.empty()) return summary;
    for (const auto& r : results)
        if (r.schedule != results.front().schedule)
            throw Error("cannot compare runs of different executions (" + r.detector + " vs " +
                        results.front().detector + ")");

    auto ref = std::find_if(results.begin(), results.end(), [](const RunResult& r) { return r.detector == "fsm"; });
    if (ref == results.end())
        ref = std::find_if(results.begin(), results.end(), [](const RunResult& r) { return r.detector == "vclock"; });
    if (ref == results.end()) ref = results.begin();
    const auto ref_addrs = racy_addresses(*ref);

    for (const auto& r : results) {
        if (&r == &*ref) continue;
        const auto addrs = racy_addresses(r);
        if (addrs == ref_addrs && r.verdict == ref->verdict) continue;
        if (is_pair(r.detector, ref->detector, "fsm", "vclock"))
            throw DetectorDivergence(ref->detector + " says " + verdict_name(ref->verdict) + " but " + r.detector +
                                         " says " + verdict_name(r.verdict),
                                     bundle);
        DivergenceRow row;
        row.detector = r.detector;
        row.verdict = r.verdict;
        row.reference = ref->detector;
        row.reference_verdict = ref->verdict;
        std::set_difference(ref_addrs.begin(), ref_addrs.end(), addrs.begin(), addrs.end(),
                            std::back_inserter(row.missing));
        std::set_difference(addrs.begin(), addrs.end(), ref_addrs.begin(), ref_addrs.end(),
                            std::back_inserter(row.extra));
        if (r.detector.rfind("finite", 0) == 0 && row.extra.empty() && !row.missing.empty())
            row.tag = "eviction-omission";
        else if (r.verdict != ref->verdict)
            row.tag = "verdict-mismatch";
        else
            row.tag = "address-mismatch";
        summary.rows.push_back(std::move(row));
    }
    return summary;
}

} // namespace hirace
