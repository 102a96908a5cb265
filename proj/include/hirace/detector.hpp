// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hirace/fsm.hpp"
#include "hirace/litmus.hpp"
#include "hirace/shadow.hpp"
#include "hirace/types.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace hirace {

/// One memory event as seen by a detector.
struct AccessInfo {
    Address addr = 0;
    AccessKind kind = AccessKind::Read;
    ThreadId tid = 0;
    std::uint32_t bc = 0;
    std::uint32_t wc = 0;
    std::uint32_t instr = 0;
};

struct RaceReport {
    std::string detector;
    Address addr = 0;
    ThreadId tid = 0;
    AccessKind kind = AccessKind::Read;
    std::uint32_t instr = 0;
    // Stored snapshot: shadow state name for fsm, kind letter of the
    // conflicting prior access for the oracles.
    std::string prev_state;
    ThreadId prev_tid = 0;
    std::uint32_t prev_bc = 0;
    std::uint32_t prev_wc = 0;

    friend bool operator==(const RaceReport&, const RaceReport&) = default;
};

/// `RACE addr=<a> detector=<d> cur=<tid>/<kind>@<instr> prev_state=<name> prev_tid=<t> bc=<b> wc=<w>`
std::string format_report(const RaceReport& report, const litmus::AddressSpace* names = nullptr);

struct DetectorStats {
    std::size_t metadata_bytes = 0;
    std::uint64_t cas_retries = 0;
};

class Detector {
public:
    virtual ~Detector() = default;

    virtual std::string name() const = 0;
    /// Called exactly once per executed memory event.
    virtual std::optional<RaceReport> on_access(const AccessInfo& access) = 0;
    /// Called after a barrier completes and the participants' clocks moved.
    virtual void on_barrier(Scope scope, std::span<const ThreadId> participants) {
        (void)scope;
        (void)participants;
    }
    virtual DetectorStats finalize() const = 0;
};

struct DetectorContext {
    litmus::GridConfig grid;
    std::size_t addresses = 0;
    std::shared_ptr<const fsm::FsmTable> machine; // fsm only
    ShadowLayout layout;
    bool report_all = false;
};

class DetectorSpecError : public Error {
public:
    using Error::Error;
};

/// Detector backed by the shadow table and a transition table.
class FsmDetector final : public Detector {
public:
    explicit FsmDetector(const DetectorContext& ctx);

    std::string name() const override { return "fsm"; }
    std::optional<RaceReport> on_access(const AccessInfo& access) override;
    DetectorStats finalize() const override;

    const ShadowTable& table() const { return table_; }
    /// Interference injected between compute and compare-and-swap.
    void set_cas_hook(CasHook hook) { hook_ = std::move(hook); }

private:
    std::shared_ptr<const fsm::FsmTable> machine_;
    litmus::GridConfig grid_;
    ShadowLayout layout_;
    ShadowTable table_;
    bool report_all_;
    CasHook hook_;
    std::uint64_t retries_ = 0;
};

/// Accepts every event and never reports; used as the throughput baseline.
class NullDetector final : public Detector {
public:
    std::string name() const override { return "none"; }
    std::optional<RaceReport> on_access(const AccessInfo&) override { return std::nullopt; }
    DetectorStats finalize() const override { return {}; }
};

/// `fsm`, `vclock`, `finite:K` or `none`. The fsm detector falls back to the
/// generated machine when the context carries none.
std::unique_ptr<Detector> make_detector(std::string_view spec, const DetectorContext& ctx);

} // namespace hirace
