// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hirace/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hirace::litmus {

struct GridConfig {
    std::uint32_t blocks = 1;
    std::uint32_t warps_per_block = 1;
    std::uint32_t lanes_per_warp = 1;

    std::uint32_t threads_per_block() const { return warps_per_block * lanes_per_warp; }
    std::uint32_t total_threads() const { return blocks * threads_per_block(); }
    bool valid() const { return blocks >= 1 && warps_per_block >= 1 && lanes_per_warp >= 1; }

    friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

/// Parses `BxWxL`, e.g. "2x1x4".
GridConfig parse_grid(std::string_view text);
std::string to_string(const GridConfig& grid);

struct ThreadCoord {
    std::uint32_t block = 0;
    std::uint32_t warp = 0;
    std::uint32_t lane = 0;
    ThreadId gtid = 0;

    std::uint32_t ltid(const GridConfig& g) const { return warp * g.lanes_per_warp + lane; }
    friend bool operator==(const ThreadCoord&, const ThreadCoord&) = default;
};

ThreadCoord coord_of(const GridConfig& grid, ThreadId gtid);
ThreadId gtid_of(const GridConfig& grid, std::uint32_t block, std::uint32_t warp, std::uint32_t lane);

enum class ArrayScope : std::uint8_t { Global, BlockShared };

struct ArrayDecl {
    std::string name;
    ArrayScope scope = ArrayScope::Global;
    std::uint32_t length = 1;

    friend bool operator==(const ArrayDecl&, const ArrayDecl&) = default;
};

/// Integer expression over thread coordinates and parameters.
struct Expr {
    enum class Op : std::uint8_t { Literal, Var, Neg, Add, Sub, Mul, Div, Lt, Gt, Le, Ge, Eq, Ne };

    Op op = Op::Literal;
    std::int64_t value = 0; // Literal
    std::string name;       // Var: builtin or parameter
    std::vector<Expr> args; // Neg: 1, binary: 2

    static Expr literal(std::int64_t v);
    static Expr var(std::string name);
    static Expr neg(Expr e);
    static Expr binary(Op op, Expr lhs, Expr rhs);

    friend bool operator==(const Expr&, const Expr&) = default;
};

inline constexpr std::string_view kBuiltins[] = {"gtid", "bid", "wid", "lane", "ltid"};
bool is_builtin(std::string_view name);

struct Instruction {
    enum class Kind : std::uint8_t { Read, Write, Atomic, SyncThreads, SyncWarp, If };

    Kind kind = Kind::SyncThreads;
    std::string array; // Read/Write/Atomic
    Expr index;        // Read/Write/Atomic
    Expr cond;         // If
    std::vector<Instruction> then_body;
    std::vector<Instruction> else_body;

    static Instruction access(AccessKind kind, std::string array, Expr index);
    static Instruction sync_threads();
    static Instruction sync_warp();
    static Instruction if_then(Expr cond, std::vector<Instruction> then_body, std::vector<Instruction> else_body = {});

    bool is_access() const { return kind == Kind::Read || kind == Kind::Write || kind == Kind::Atomic; }
    AccessKind access_kind() const;

    friend bool operator==(const Instruction&, const Instruction&) = default;
};

using Params = std::map<std::string, std::int64_t, std::less<>>;

struct KernelProgram {
    GridConfig grid;
    Params params;
    std::vector<ArrayDecl> arrays;
    std::vector<Instruction> body;

    const ArrayDecl* find_array(std::string_view name) const;
    friend bool operator==(const KernelProgram&, const KernelProgram&) = default;
};

class ParseError : public Error {
public:
    ParseError(unsigned line, unsigned column, const std::string& what);
    unsigned line() const { return line_; }
    unsigned column() const { return column_; }

private:
    unsigned line_;
    unsigned column_;
};

/// Structural problem in a program (unknown identifier, bad grid, ...).
class ProgramError : public Error {
public:
    using Error::Error;
};

class EvalError : public Error {
public:
    using Error::Error;
};

/// Out-of-bounds index or evaluation failure for one thread.
class MaterializeError : public Error {
public:
    MaterializeError(ThreadId gtid, std::uint32_t instr, const std::string& what);
    ThreadId gtid() const { return gtid_; }
    std::uint32_t instr() const { return instr_; }

private:
    ThreadId gtid_;
    std::uint32_t instr_;
};

KernelProgram parse_program(std::string_view text);
std::string to_string(const KernelProgram& program);
std::string to_string(const Expr& expr);

/// Throws ProgramError when a reference does not resolve.
void validate(const KernelProgram& program);

/// Comparisons yield 0/1; division truncates toward zero.
std::int64_t eval_expr(const Expr& expr, const ThreadCoord& coord, const GridConfig& grid, const Params& params);

/// Flat address space: globals first, then one instance of each
/// block-shared array per block.
class AddressSpace {
public:
    AddressSpace() = default;
    AddressSpace(const std::vector<ArrayDecl>& arrays, std::uint32_t blocks);

    std::uint32_t size() const { return size_; }
    /// Throws EvalError if the index is outside the array.
    Address resolve(std::string_view array, std::uint32_t block, std::int64_t index) const;
    /// `name[i]` for globals, `name.b<k>[i]` for block-shared instances.
    std::string name(Address addr) const;

private:
    struct Entry {
        ArrayDecl decl;
        Address base = 0;
    };
    std::vector<Entry> arrays_;
    std::uint32_t blocks_ = 1;
    std::uint32_t size_ = 0;
};

enum class EventKind : std::uint8_t { Read, Write, Atomic, SyncThreads, SyncWarp };

struct Event {
    EventKind kind = EventKind::Read;
    Address addr = 0;        // memory events only
    std::uint32_t instr = 0; // pre-order statement index in the body

    bool is_access() const { return kind == EventKind::Read || kind == EventKind::Write || kind == EventKind::Atomic; }
    AccessKind access_kind() const { return static_cast<AccessKind>(kind); }
    friend bool operator==(const Event&, const Event&) = default;
};

char event_letter(EventKind kind);

/// Per-thread event streams. Threads not marked present take no part in the
/// execution (used for projections); absent threads also never hold up a
/// barrier.
struct MaterializedProgram {
    GridConfig grid;
    AddressSpace addresses;
    std::vector<std::vector<Event>> threads;
    std::vector<bool> present;

    std::size_t total_events() const;
    /// Copy keeping only the listed threads.
    MaterializedProgram project(const std::vector<ThreadId>& keep) const;
};

MaterializedProgram materialize_threads(const KernelProgram& program);

struct GenConfig {
    std::uint32_t max_blocks = 2;
    std::uint32_t max_warps = 2;
    std::uint32_t max_lanes = 2;
    std::uint32_t max_instrs = 4;
    std::uint32_t max_addrs = 2;
    double barrier_density = 0.25;
    double if_density = 0.2;
    bool atomics = true;
    bool block_shared = false; // add a second, block-shared array
    std::uint64_t seed = 1;
};

/// Deterministic for a fixed config. Barriers are only emitted at top level.
KernelProgram generate_random_program(const GenConfig& config);

} // namespace hirace::litmus
