// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hirace/detector.hpp"
#include "hirace/fsm.hpp"
#include "hirace/litmus.hpp"
#include "hirace/model.hpp"
#include "hirace/oracle.hpp"

#include <fstream>
#include <memory>
#include <sstream>
#include <string>

namespace hirace::test {

inline std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("missing test input " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string litmus_path(const std::string& name) { return std::string(HIRACE_LITMUS_DIR) + "/" + name; }

inline litmus::KernelProgram load_litmus(const std::string& name, const std::string& grid = "") {
    auto p = litmus::parse_program(read_text(litmus_path(name)));
    if (!grid.empty()) p.grid = litmus::parse_grid(grid);
    return p;
}

inline litmus::MaterializedProgram materialize(const std::string& name, const std::string& grid = "") {
    return litmus::materialize_threads(load_litmus(name, grid));
}

inline std::shared_ptr<const fsm::FsmTable> generated_machine() {
    static const auto m = std::make_shared<const fsm::FsmTable>(fsm::generate_full_machine());
    return m;
}

inline DetectorContext context_for(const litmus::MaterializedProgram& m,
                                   std::shared_ptr<const fsm::FsmTable> machine = generated_machine(),
                                   const ShadowLayout& layout = {}) {
    DetectorContext ctx;
    ctx.grid = m.grid;
    ctx.addresses = m.addresses.size();
    ctx.machine = std::move(machine);
    ctx.layout = layout;
    return ctx;
}

inline RunResult run_fsm(const litmus::MaterializedProgram& m, const Schedule& s,
                         std::shared_ptr<const fsm::FsmTable> machine = generated_machine(),
                         const ShadowLayout& layout = {}) {
    FsmDetector det(context_for(m, std::move(machine), layout));
    return run_schedule(m, s, det, {layout});
}

inline RunResult run_fsm(const litmus::MaterializedProgram& m, const std::vector<ThreadId>& picks) {
    return run_fsm(m, Schedule::explicit_picks(picks));
}

} // namespace hirace::test
