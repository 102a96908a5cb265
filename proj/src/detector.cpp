// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "hirace/detector.hpp"
#include "hirace/oracle.hpp"

#include <charconv>

namespace hirace {

std::string format_report(const RaceReport& r, const litmus::AddressSpace* names) {
    const std::string addr = names ? names->name(r.addr) : std::to_string(r.addr);
    return "RACE addr=" + addr + " detector=" + r.detector + " cur=" + std::to_string(r.tid) + "/" +
           kind_letter(r.kind) + "@" + std::to_string(r.instr) + " prev_state=" + r.prev_state +
           " prev_tid=" + std::to_string(r.prev_tid) + " bc=" + std::to_string(r.prev_bc) +
           " wc=" + std::to_string(r.prev_wc);
}

FsmDetector::FsmDetector(const DetectorContext& ctx)
    : machine_(ctx.machine), grid_(ctx.grid), layout_(ctx.layout), table_(ctx.addresses),
      report_all_(ctx.report_all) {
    if (!machine_) throw DetectorSpecError("fsm detector needs a machine");
    layout_.validate();
    if (machine_->state_count() - 1 > layout_.max_state())
        throw LayoutError("machine has " + std::to_string(machine_->state_count()) + " states but the state field has " +
                          std::to_string(layout_.state_bits) + " bits");
    if (grid_.total_threads() - 1 > layout_.max_tid())
        throw LayoutError("grid has " + std::to_string(grid_.total_threads()) + " threads but the tid field has " +
                          std::to_string(layout_.tid_bits) + " bits");
}

std::optional<RaceReport> FsmDetector::on_access(const AccessInfo& a) {
    const ShadowUpdate u = update_shadow(table_, a.addr, a.kind, a.tid, a.bc, a.wc, *machine_, grid_, layout_, hook_);
    retries_ += u.retries;
    const bool racy = report_all_ ? u.step.after.state == machine_->race() : u.step.entered_race;
    if (!racy) return std::nullopt;
    return RaceReport{"fsm",
                      a.addr,
                      a.tid,
                      a.kind,
                      a.instr,
                      machine_->name(u.step.before.state),
                      u.step.before.tid,
                      u.step.before.bc,
                      u.step.before.wc};
}

DetectorStats FsmDetector::finalize() const { return {table_.metadata_bytes(), retries_}; }

namespace {

std::shared_ptr<const fsm::FsmTable> generated_machine() {
    static const auto machine = std::make_shared<const fsm::FsmTable>(fsm::generate_full_machine());
    return machine;
}

} // namespace

std::unique_ptr<Detector> make_detector(std::string_view spec, const DetectorContext& ctx) {
    if (spec == "fsm") {
        DetectorContext c = ctx;
        if (!c.machine) c.machine = generated_machine();
        return std::make_unique<FsmDetector>(c);
    }
    if (spec == "vclock") return std::make_unique<oracle::VectorClockDetector>(ctx);
    if (spec == "none") return std::make_unique<NullDetector>();
    if (spec == "finite") return std::make_unique<oracle::FiniteHistoryDetector>(ctx, 1);
    if (spec.rfind("finite:", 0) == 0) {
        const std::string_view k_text = spec.substr(7);
        unsigned k = 0;
        auto [p, ec] = std::from_chars(k_text.data(), k_text.data() + k_text.size(), k);
        if (ec != std::errc() || p != k_text.data() + k_text.size() || k == 0)
            throw DetectorSpecError("finite history needs a positive slot count, got '" + std::string(k_text) + "'");
        return std::make_unique<oracle::FiniteHistoryDetector>(ctx, k);
    }
    throw DetectorSpecError("unknown detector '" + std::string(spec) + "' (expected fsm, vclock, finite:K or none)");
}

} // namespace hirace
