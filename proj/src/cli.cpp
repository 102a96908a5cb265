// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "hirace/cli.hpp"
#include "hirace/compare.hpp"
#include "hirace/detector.hpp"
#include "hirace/fsm.hpp"
#include "hirace/litmus.hpp"
#include "hirace/model.hpp"
#include "hirace/oracle.hpp"
#include "hirace/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>

namespace hirace::cli {

namespace {

namespace fs = std::filesystem;

struct WidthFlags {
    CLI::Option* opts[4] = {};
    unsigned values[4] = {};

    void add(CLI::App& app) {
        const char* names[4] = {"--state-bits", "--tid-bits", "--bc-bits", "--wc-bits"};
        for (int i = 0; i < 4; ++i) opts[i] = app.add_option(names[i], values[i], "shadow field width")->group("Shadow");
    }

    ShadowLayout layout() const {
        auto get = [&](int i) { return opts[i]->count() ? std::optional<unsigned>(values[i]) : std::nullopt; };
        return ShadowLayout::from_flags(get(0), get(1), get(2), get(3));
    }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

litmus::KernelProgram load_program(const std::string& path, const std::string& grid) {
    litmus::KernelProgram p;
    try {
        p = litmus::parse_program(read_file(path));
    } catch (const litmus::ParseError& e) {
        throw Error(path + ":" + e.what());
    }
    if (!grid.empty()) p.grid = litmus::parse_grid(grid);
    litmus::validate(p);
    return p;
}

fsm::FsmTable pick_machine(const std::string& name, const std::string& table) {
    if (!table.empty()) return fsm::import_table(table);
    if (name == "generated") return fsm::generate_full_machine();
    if (name == "fig1") return fsm::reference_machine_fig1();
    if (name == "fig4") return fsm::reference_machine_fig4();
    throw Error("unknown machine '" + name + "' (expected generated, fig1 or fig4)");
}

// ---------------------------------------------------------------------------

struct CheckFlags {
    std::string file;
    std::string detector = "fsm";
    std::uint64_t schedules = 64;
    bool exhaustive = false;
    std::uint64_t limit = 1'000'000;
    std::uint64_t seed = 1;
    std::string schedule_file;
    bool report_all = false;
    std::string grid;
    std::string machine = "generated";
    std::string table;
    WidthFlags widths;
};

struct Found {
    std::size_t schedule_index;
    RaceReport report;
};

int cmd_check(const CheckFlags& f, std::ostream& out, std::ostream& err) {
    const auto program = load_program(f.file, f.grid);
    const auto m = litmus::materialize_threads(program);
    DetectorContext ctx;
    ctx.grid = m.grid;
    ctx.addresses = m.addresses.size();
    ctx.layout = f.widths.layout();
    ctx.report_all = f.report_all;
    ctx.machine = std::make_shared<const fsm::FsmTable>(pick_machine(f.machine, f.table));
    make_detector(f.detector, ctx); // reject bad specs before any run

    std::vector<Found> found;
    std::optional<std::vector<ThreadId>> first_racy;
    std::size_t runs = 0;
    bool overflow = false;
    std::vector<std::string> warnings;

    auto run = [&](const Schedule& s) {
        auto det = make_detector(f.detector, ctx);
        const RunResult r = run_schedule(m, s, *det, {ctx.layout});
        for (const auto& rep : r.reports) found.push_back({runs, rep});
        if (r.verdict == Verdict::Racy && !first_racy) first_racy = r.schedule;
        ++runs;
        if (r.clock_overflow) {
            overflow = true;
            warnings = r.warnings;
        }
        return !overflow;
    };

    if (!f.schedule_file.empty()) {
        run(Schedule::explicit_picks(parse_schedule(read_file(f.schedule_file))));
    } else if (f.exhaustive) {
        const auto e = for_each_schedule(m, f.limit, [&](const std::vector<ThreadId>& s) {
            return run(Schedule::explicit_picks(s));
        });
        if (e.truncated) err << "warning: schedule enumeration stopped after " << f.limit << " schedules\n";
    } else {
        for (std::uint64_t i = 0; i < f.schedules && run(Schedule::random_seed(f.seed + i)); ++i) {
        }
    }

    std::stable_sort(found.begin(), found.end(), [](const Found& a, const Found& b) {
        return a.report.addr != b.report.addr ? a.report.addr < b.report.addr : a.schedule_index < b.schedule_index;
    });
    std::size_t racy_addrs = 0;
    for (std::size_t i = 0; i < found.size(); ++i) {
        const bool first = i == 0 || found[i].report.addr != found[i - 1].report.addr;
        racy_addrs += first;
        if (first || f.report_all) out << format_report(found[i].report, &m.addresses) << "\n";
    }
    if (overflow) {
        for (const auto& w : warnings) err << "warning: " << w << "\n";
        err << "error: shadow clock overflow; results after the overflow are not checked\n";
        return kExitError;
    }
    if (found.empty()) {
        out << "verdict: RaceFree detector=" << f.detector << " schedules=" << runs << "\n";
        return kExitClean;
    }
    out << "verdict: Racy detector=" << f.detector << " racy_addresses=" << racy_addrs << " schedules=" << runs << "\n";
    out << "replay: " << ReplayBundle{program_hash(program), *first_racy}.describe() << "\n";
    return kExitRace;
}

// ---------------------------------------------------------------------------

struct VerifyFlags {
    verify::FamilyConfig family;
    std::string kinds = "RWA";
    std::string barriers = "both";
    std::string programs = "exhaustive";
    std::string schedules = "exhaustive";
    std::string witness_dir = "verify-witnesses";
    std::string machine = "generated";
    std::string table;
    bool projection = false;
    WidthFlags widths;
};

std::pair<bool, std::uint64_t> parse_mode(const std::string& text, const char* what) {
    if (text == "exhaustive") return {true, 0};
    if (text.rfind("random:", 0) == 0) {
        try {
            return {false, std::stoull(text.substr(7))};
        } catch (const std::exception&) {
        }
    }
    throw Error(std::string("bad ") + what + " mode '" + text + "' (expected exhaustive or random:N)");
}

std::string describe_family(const verify::FamilyConfig& f) {
    std::ostringstream s;
    s << "family: grids<=" << f.max_blocks << "x" << f.max_warps << "x" << f.max_lanes
      << " statements<=" << f.max_events << " addrs<=" << f.max_addrs << " kinds=";
    for (auto k : f.kinds) s << kind_letter(k);
    s << " barriers=" << (f.sync_threads ? "syncthreads" : "") << (f.sync_threads && f.sync_warp ? "," : "")
      << (f.sync_warp ? "syncwarp" : "") << " programs="
      << (f.programs == verify::ProgramMode::Exhaustive ? "exhaustive" : "random:" + std::to_string(f.random_programs))
      << " schedules="
      << (f.schedules == verify::ScheduleMode::Exhaustive ? (f.literal_schedules ? "exhaustive(literal)" : "exhaustive")
                                                          : "random:" + std::to_string(f.random_schedules))
      << " kind_symmetry=" << (f.kind_symmetry ? "on" : "off");
    return s.str();
}

void write_witnesses(const verify::VerifyReport& r, const std::string& dir, std::ostream& err) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < r.witnesses.size(); ++i) {
        const auto& w = r.witnesses[i];
        std::ostringstream name;
        name << std::setw(3) << std::setfill('0') << i << "-" << w.kind;
        const fs::path base = fs::path(dir) / name.str();
        std::ofstream hl(base.string() + ".hl");
        hl << "# " << w.kind << ": " << w.detail << "\n# fsm=" << verdict_name(w.fsm)
           << " oracle=" << verdict_name(w.oracle) << "\n"
           << w.program;
        std::ofstream sched(base.string() + ".sched");
        sched << format_schedule(w.schedule) << "\n";
        err << "witness: " << base.string() << ".hl\n";
    }
}

int cmd_verify(VerifyFlags f, std::ostream& out, std::ostream& err) {
    auto& fam = f.family;
    fam.kinds.clear();
    for (char c : f.kinds) {
        if (c == 'R') fam.kinds.push_back(AccessKind::Read);
        else if (c == 'W') fam.kinds.push_back(AccessKind::Write);
        else if (c == 'A') fam.kinds.push_back(AccessKind::Atomic);
        else throw Error(std::string("unknown access kind '") + c + "' in --kinds");
    }
    if (f.barriers == "both") fam.sync_threads = fam.sync_warp = true;
    else if (f.barriers == "syncthreads") fam.sync_threads = true, fam.sync_warp = false;
    else if (f.barriers == "syncwarp") fam.sync_threads = false, fam.sync_warp = true;
    else if (f.barriers == "none") fam.sync_threads = fam.sync_warp = false;
    else throw Error("bad --barriers '" + f.barriers + "' (expected both, syncthreads, syncwarp or none)");
    const auto [all_programs, n_programs] = parse_mode(f.programs, "program");
    fam.programs = all_programs ? verify::ProgramMode::Exhaustive : verify::ProgramMode::SeededRandom;
    fam.random_programs = n_programs;
    const auto [all_schedules, n_schedules] = parse_mode(f.schedules, "schedule");
    fam.schedules = all_schedules ? verify::ScheduleMode::Exhaustive : verify::ScheduleMode::Random;
    fam.random_schedules = n_schedules;
    fam.layout = f.widths.layout();
    const auto machine = pick_machine(f.machine, f.table);

    out << describe_family(fam) << "\n";
    if (fam.programs == verify::ProgramMode::Exhaustive) {
        const auto estimate = verify::family_estimate(fam);
        out << "estimate: raw_programs=" << estimate << " budget=" << fam.budget << "\n";
        if (estimate > fam.budget) err << "warning: estimate exceeds the budget; the report will be partial\n";
    }
    const auto r = verify::differential_verify(fam, machine);
    out << "programs: raw=" << r.raw_programs << " unique=" << r.programs << " racy=" << r.racy_programs
        << " oracle_disagree=" << r.oracle_disagree << (r.partial ? " partial=1" : "") << "\n";
    out << r.summary_line() << "\n";
    if (!r.witnesses.empty()) write_witnesses(r, f.witness_dir, err);
    bool ok = r.pass();
    if (f.projection) {
        const auto p = verify::two_thread_projection_check(fam);
        out << "projection: racy=" << p.racy << " counterexamples=" << p.counterexamples << "\n";
        for (const auto& w : p.witnesses) err << "projection counterexample:\n" << w;
        ok = ok && p.counterexamples == 0;
    }
    if (r.partial) return kExitError;
    return ok ? kExitClean : kExitRace;
}

// ---------------------------------------------------------------------------

struct GenFlags {
    litmus::GenConfig config;
    bool no_atomics = false;
    std::uint64_t count = 1;
    std::string out;
};

int cmd_gen(GenFlags f, std::ostream& out) {
    f.config.atomics = !f.no_atomics;
    const std::uint64_t base = f.config.seed;
    if (f.count > 1 && !f.out.empty()) fs::create_directories(f.out);
    for (std::uint64_t i = 0; i < f.count; ++i) {
        f.config.seed = base + i;
        const std::string text =
            "# generated with seed " + std::to_string(f.config.seed) + "\n" +
            litmus::to_string(litmus::generate_random_program(f.config));
        if (f.out.empty()) {
            out << text;
        } else {
            const fs::path path =
                f.count > 1 ? fs::path(f.out) / ("gen-" + std::to_string(f.config.seed) + ".hl") : fs::path(f.out);
            std::ofstream file(path);
            if (!file) throw Error("cannot write " + path.string());
            file << text;
        }
    }
    return kExitClean;
}

// ---------------------------------------------------------------------------

int cmd_fsm_export(const std::string& path, const std::string& machine_name, std::ostream& out) {
    fsm::GenerationStats stats;
    const auto m = machine_name == "generated" ? fsm::generate_full_machine({}, &stats) : pick_machine(machine_name, "");
    fsm::export_table(m, path);
    out << "wrote " << path << ": states=" << m.state_count() << " labels=" << m.alphabet().count();
    if (machine_name == "generated") out << " closure_states=" << stats.closure_states;
    out << "\n";
    return kExitClean;
}

int cmd_fsm_check(const fsm::FsmTable& m, std::uint64_t cosim, std::ostream& out) {
    verify::StructuralOptions o;
    o.cosim_strings = cosim;
    const auto r = verify::structural_checks(m, o);
    for (const auto& c : r.checks)
        out << (c.pass ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << "\n";
    return r.pass() ? kExitClean : kExitRace;
}

// ---------------------------------------------------------------------------

struct BenchFlags {
    std::string file;
    std::uint64_t synthetic = 0;
    unsigned repetitions = 5;
    std::string detectors = "none,fsm,vclock";
    std::string grid;
    WidthFlags widths;
};

/// Race-free program of roughly `events` events: each thread touches only
/// its own element, with a block barrier every eight statements.
litmus::KernelProgram synthetic_program(std::uint64_t events) {
    litmus::KernelProgram p;
    p.grid = {1, 4, 32};
    p.arrays.push_back({"data", litmus::ArrayScope::Global, p.grid.total_threads()});
    const std::uint64_t statements = (events + p.grid.total_threads() - 1) / p.grid.total_threads();
    for (std::uint64_t i = 0; i < statements; ++i) {
        if (i % 8 == 7) p.body.push_back(litmus::Instruction::sync_threads());
        else
            p.body.push_back(litmus::Instruction::access(i % 2 ? AccessKind::Write : AccessKind::Read, "data",
                                                         litmus::Expr::var("gtid")));
    }
    return p;
}

int cmd_bench(const BenchFlags& f, std::ostream& out) {
    if (f.file.empty() == (f.synthetic == 0)) throw Error("bench needs either a program file or --synthetic N");
    if (f.repetitions == 0) throw Error("--repetitions must be positive");
    const auto program = f.synthetic ? synthetic_program(f.synthetic) : load_program(f.file, f.grid);
    const auto m = litmus::materialize_threads(program);
    DetectorContext ctx;
    ctx.grid = m.grid;
    ctx.addresses = m.addresses.size();
    ctx.layout = f.widths.layout();

    std::vector<std::string> specs;
    std::stringstream list(f.detectors);
    for (std::string s; std::getline(list, s, ',');)
        if (!s.empty()) specs.push_back(s);
    for (const auto& s : specs) make_detector(s, ctx);

    out << std::left << std::setw(10) << "detector" << std::right << std::setw(10) << "events" << std::setw(6) << "reps"
        << std::setw(12) << "median_ms" << std::setw(14) << "Mevents/s" << std::setw(12) << "meta_bytes" << "\n";
    for (const auto& spec : specs) {
        std::vector<double> seconds;
        std::uint64_t events = 0, bytes = 0;
        for (unsigned i = 0; i < f.repetitions; ++i) {
            auto det = make_detector(spec, ctx);
            const auto t0 = std::chrono::steady_clock::now();
            const auto r = run_schedule(m, Schedule::explicit_picks({}), *det, {ctx.layout});
            seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            events = r.stats.events;
            bytes = det->finalize().metadata_bytes;
        }
        std::sort(seconds.begin(), seconds.end());
        const double median = seconds.size() % 2 ? seconds[seconds.size() / 2]
                                                 : (seconds[seconds.size() / 2 - 1] + seconds[seconds.size() / 2]) / 2;
        out << std::left << std::setw(10) << spec << std::right << std::setw(10) << events << std::setw(6)
            << f.repetitions << std::setw(12) << std::fixed << std::setprecision(3) << median * 1e3 << std::setw(14)
            << std::setprecision(2) << (median > 0 ? events / median / 1e6 : 0.0) << std::setw(12) << bytes
            << (f.repetitions == 1 ? "  noisy" : "") << "\n";
        out.unsetf(std::ios::floatfield);
    }
    return kExitClean;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app("GPU data race detection on a simulated thread hierarchy", "hirace");
    app.require_subcommand(1);

    CheckFlags check;
    auto* c = app.add_subcommand("check", "run a detector over schedules of a litmus program");
    c->add_option("file", check.file, "litmus program")->required();
    c->add_option("--detector", check.detector, "fsm, vclock, finite:K or none");
    auto* n_opt = c->add_option("--schedules", check.schedules, "number of random schedules");
    auto* ex_opt = c->add_flag("--exhaustive", check.exhaustive, "every schedule");
    c->add_option("--limit", check.limit, "stop exhaustive enumeration after this many schedules");
    c->add_option("--seed", check.seed, "seed of the first random schedule");
    c->add_option("--schedule-file", check.schedule_file, "replay one explicit schedule")->excludes(ex_opt)->excludes(n_opt);
    c->add_flag("--report-all", check.report_all, "print every report, not one per address");
    c->add_option("--grid", check.grid, "BxWxL, overrides the program");
    c->add_option("--machine", check.machine, "generated, fig1 or fig4");
    c->add_option("--table", check.table, "machine table file");
    check.widths.add(*c);
    n_opt->excludes(ex_opt);

    VerifyFlags ver;
    auto* v = app.add_subcommand("verify", "differential verification of the fsm detector over a program family");
    v->add_option("--max-blocks", ver.family.max_blocks);
    v->add_option("--max-warps", ver.family.max_warps);
    v->add_option("--max-lanes", ver.family.max_lanes);
    v->add_option("--max-statements", ver.family.max_events, "top-level statements per program");
    v->add_option("--max-addrs", ver.family.max_addrs);
    v->add_option("--kinds", ver.kinds, "subset of RWA");
    v->add_option("--barriers", ver.barriers, "both, syncthreads, syncwarp or none");
    v->add_option("--programs", ver.programs, "exhaustive or random:N");
    v->add_option("--schedules", ver.schedules, "exhaustive or random:N");
    v->add_flag("--literal", ver.family.literal_schedules, "run every interleaving literally (tiny families)");
    v->add_flag("--kind-symmetry", ver.family.kind_symmetry, "also identify programs that differ by swapping R and A");
    v->add_option("--seed", ver.family.seed);
    v->add_option("--budget", ver.family.budget, "maximum raw programs");
    v->add_option("--workers", ver.family.workers);
    v->add_option("--machine", ver.machine, "generated, fig1 or fig4");
    v->add_option("--table", ver.table, "machine table file");
    v->add_option("--witness-dir", ver.witness_dir);
    v->add_flag("--projection", ver.projection, "also check the two-thread projection property");
    ver.widths.add(*v);

    GenFlags gen;
    auto* g = app.add_subcommand("gen", "generate random litmus programs");
    g->add_option("--max-blocks", gen.config.max_blocks);
    g->add_option("--max-warps", gen.config.max_warps);
    g->add_option("--max-lanes", gen.config.max_lanes);
    g->add_option("--max-instrs", gen.config.max_instrs);
    g->add_option("--max-addrs", gen.config.max_addrs);
    g->add_option("--barrier-density", gen.config.barrier_density);
    g->add_option("--if-density", gen.config.if_density);
    g->add_flag("--no-atomics", gen.no_atomics);
    g->add_flag("--block-shared", gen.config.block_shared);
    g->add_option("--seed", gen.config.seed);
    g->add_option("--count", gen.count);
    g->add_option("--out", gen.out, "file, or directory when --count > 1");

    std::string fsm_machine = "generated", fsm_table, export_path;
    std::uint64_t cosim = 100000;
    auto* f = app.add_subcommand("fsm", "inspect the detector state machine");
    f->require_subcommand(1);
    auto* fe = f->add_subcommand("export", "write the transition table");
    fe->add_option("path", export_path)->required();
    fe->add_option("--machine", fsm_machine, "generated, fig1 or fig4");
    auto* fd = f->add_subcommand("dump", "print the machine with readable labels");
    fd->add_option("--machine", fsm_machine);
    fd->add_option("--table", fsm_table);
    auto* fc = f->add_subcommand("check", "structural checks");
    fc->add_option("--machine", fsm_machine);
    fc->add_option("--table", fsm_table);
    fc->add_option("--cosim", cosim, "random label strings for the minimization check");

    BenchFlags bench;
    auto* b = app.add_subcommand("bench", "simulator throughput with and without detectors");
    b->add_option("file", bench.file);
    b->add_option("--synthetic", bench.synthetic, "use a generated race-free program of about N events");
    b->add_option("--repetitions", bench.repetitions);
    b->add_option("--detectors", bench.detectors, "comma-separated detector specs");
    b->add_option("--grid", bench.grid);
    bench.widths.add(*b);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitClean : kExitError;
    }

    try {
        if (*c) return cmd_check(check, out, err);
        if (*v) return cmd_verify(ver, out, err);
        if (*g) return cmd_gen(gen, out);
        if (*fe) return cmd_fsm_export(export_path, fsm_machine, out);
        if (*fd) {
            out << fsm::dump(pick_machine(fsm_machine, fsm_table));
            return kExitClean;
        }
        if (*fc) return cmd_fsm_check(pick_machine(fsm_machine, fsm_table), cosim, out);
        if (*b) return cmd_bench(bench, out);
    } catch (const Deadlock& e) {
        err << "error: deadlock: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

} // namespace hirace::cli
