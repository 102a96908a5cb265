// Copyright 2026 The hirace-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "hirace/litmus.hpp"
#include "hirace/rng.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

namespace hirace::litmus {

GridConfig parse_grid(std::string_view text) {
    GridConfig g;
    std::uint32_t dims[3] = {0, 0, 0};
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (int i = 0; i < 3; ++i) {
        auto [next, ec] = std::from_chars(p, end, dims[i]);
        if (ec != std::errc() || next == p) throw ProgramError("grid must look like BxWxL, got '" + std::string(text) + "'");
        p = next;
        if (i < 2) {
            if (p == end || (*p != 'x' && *p != 'X')) throw ProgramError("grid must look like BxWxL, got '" + std::string(text) + "'");
            ++p;
        }
    }
    if (p != end) throw ProgramError("trailing characters in grid '" + std::string(text) + "'");
    g = {dims[0], dims[1], dims[2]};
    if (!g.valid()) throw ProgramError("grid dimensions must be positive");
    return g;
}

std::string to_string(const GridConfig& g) {
    return std::to_string(g.blocks) + "x" + std::to_string(g.warps_per_block) + "x" + std::to_string(g.lanes_per_warp);
}

ThreadCoord coord_of(const GridConfig& g, ThreadId gtid) {
    if (gtid >= g.total_threads()) throw Error("gtid " + std::to_string(gtid) + " outside grid " + to_string(g));
    ThreadCoord c;
    c.gtid = gtid;
    c.lane = gtid % g.lanes_per_warp;
    c.warp = (gtid / g.lanes_per_warp) % g.warps_per_block;
    c.block = gtid / g.threads_per_block();
    return c;
}

ThreadId gtid_of(const GridConfig& g, std::uint32_t block, std::uint32_t warp, std::uint32_t lane) {
    return (block * g.warps_per_block + warp) * g.lanes_per_warp + lane;
}

// ---------------------------------------------------------------------------
// AST helpers

Expr Expr::literal(std::int64_t v) {
    Expr e;
    e.op = Op::Literal;
    e.value = v;
    return e;
}

Expr Expr::var(std::string name) {
    Expr e;
    e.op = Op::Var;
    e.name = std::move(name);
    return e;
}

Expr Expr::neg(Expr inner) {
    Expr e;
    e.op = Op::Neg;
    e.args.push_back(std::move(inner));
    return e;
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
    Expr e;
    e.op = op;
    e.args.push_back(std::move(lhs));
    e.args.push_back(std::move(rhs));
    return e;
}

bool is_builtin(std::string_view name) {
    return std::find(std::begin(kBuiltins), std::end(kBuiltins), name) != std::end(kBuiltins);
}

Instruction Instruction::access(AccessKind kind, std::string array, Expr index) {
    Instruction i;
    i.kind = kind == AccessKind::Read ? Kind::Read : kind == AccessKind::Write ? Kind::Write : Kind::Atomic;
    i.array = std::move(array);
    i.index = std::move(index);
    return i;
}

Instruction Instruction::sync_threads() {
    Instruction i;
    i.kind = Kind::SyncThreads;
    return i;
}

Instruction Instruction::sync_warp() {
    Instruction i;
    i.kind = Kind::SyncWarp;
    return i;
}

Instruction Instruction::if_then(Expr cond, std::vector<Instruction> then_body, std::vector<Instruction> else_body) {
    Instruction i;
    i.kind = Kind::If;
    i.cond = std::move(cond);
    i.then_body = std::move(then_body);
    i.else_body = std::move(else_body);
    return i;
}

AccessKind Instruction::access_kind() const {
    switch (kind) {
    case Kind::Read: return AccessKind::Read;
    case Kind::Write: return AccessKind::Write;
    case Kind::Atomic: return AccessKind::Atomic;
    default: throw Error("instruction is not a memory access");
    }
}

const ArrayDecl* KernelProgram::find_array(std::string_view name) const {
    for (const auto& a : arrays)
        if (a.name == name) return &a;
    return nullptr;
}

ParseError::ParseError(unsigned line, unsigned column, const std::string& what)
    : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + what), line_(line), column_(column) {}

MaterializeError::MaterializeError(ThreadId gtid, std::uint32_t instr, const std::string& what)
    : Error("thread " + std::to_string(gtid) + ", instruction " + std::to_string(instr) + ": " + what), gtid_(gtid),
      instr_(instr) {}

// ---------------------------------------------------------------------------
// Lexer / parser

namespace {

enum class Tok { Ident, Int, Sym, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    std::int64_t value = 0;
    unsigned line = 0;
    unsigned col = 0;
};

std::vector<Token> lex_line(std::string_view line, unsigned line_no) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        const char c = line[i];
        if (c == '#') break;
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        Token t;
        t.line = line_no;
        t.col = static_cast<unsigned>(i + 1);
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < line.size() && (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_')) ++j;
            t.kind = Tok::Ident;
            t.text = std::string(line.substr(i, j - i));
            i = j;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
            t.kind = Tok::Int;
            t.text = std::string(line.substr(i, j - i));
            auto [p, ec] = std::from_chars(line.data() + i, line.data() + j, t.value);
            if (ec != std::errc()) throw ParseError(line_no, t.col, "integer literal out of range");
            i = j;
        } else {
            static const char* two[] = {"<=", ">=", "==", "!="};
            t.kind = Tok::Sym;
            for (const char* s : two)
                if (line.substr(i, 2) == s) t.text = s;
            if (t.text.empty()) {
                if (std::string_view("[]()+-*/<>=").find(c) == std::string_view::npos)
                    throw ParseError(line_no, t.col, std::string("unexpected character '") + c + "'");
                t.text = std::string(1, c);
            }
            i += t.text.size();
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Tok::End;
    end.line = line_no;
    end.col = static_cast<unsigned>(line.size() + 1);
    out.push_back(end);
    return out;
}

class LineParser {
public:
    LineParser(std::vector<Token> toks, const Params& params) : toks_(std::move(toks)), params_(params) {}

    const Token& peek() const { return toks_[pos_]; }
    Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    bool at_end() const { return peek().kind == Tok::End; }

    [[noreturn]] void fail(const Token& t, const std::string& what) const { throw ParseError(t.line, t.col, what); }
    [[noreturn]] void unresolved(const Token& t, const std::string& what) const {
        throw ProgramError(std::to_string(t.line) + ":" + std::to_string(t.col) + ": " + what);
    }

    bool accept_sym(std::string_view s) {
        if (peek().kind == Tok::Sym && peek().text == s) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect_sym(std::string_view s) {
        if (!accept_sym(s)) fail(peek(), "expected '" + std::string(s) + "'");
    }

    bool accept_word(std::string_view w) {
        if (peek().kind == Tok::Ident && peek().text == w) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect_word(std::string_view w) {
        if (!accept_word(w)) fail(peek(), "expected '" + std::string(w) + "'");
    }

    Token expect_ident() {
        if (peek().kind != Tok::Ident) fail(peek(), "expected identifier");
        return take();
    }

    std::int64_t expect_int() {
        const bool negative = accept_sym("-");
        if (peek().kind != Tok::Int) fail(peek(), "expected integer");
        const std::int64_t v = take().value;
        return negative ? -v : v;
    }

    void expect_end() {
        if (!at_end()) fail(peek(), "unexpected '" + peek().text + "'");
    }

    Expr expr() {
        Expr lhs = additive();
        static const std::pair<const char*, Expr::Op> cmps[] = {{"<", Expr::Op::Lt},  {">", Expr::Op::Gt},
                                                                {"<=", Expr::Op::Le}, {">=", Expr::Op::Ge},
                                                                {"==", Expr::Op::Eq}, {"!=", Expr::Op::Ne}};
        for (const auto& [sym, op] : cmps) {
            if (accept_sym(sym)) {
                Expr rhs = additive();
                return Expr::binary(op, std::move(lhs), std::move(rhs));
            }
        }
        return lhs;
    }

private:
    Expr additive() {
        Expr e = multiplicative();
        for (;;) {
            if (accept_sym("+")) e = Expr::binary(Expr::Op::Add, std::move(e), multiplicative());
            else if (accept_sym("-")) e = Expr::binary(Expr::Op::Sub, std::move(e), multiplicative());
            else return e;
        }
    }

    Expr multiplicative() {
        Expr e = unary();
        for (;;) {
            if (accept_sym("*")) e = Expr::binary(Expr::Op::Mul, std::move(e), unary());
            else if (accept_sym("/")) e = Expr::binary(Expr::Op::Div, std::move(e), unary());
            else return e;
        }
    }

    Expr unary() {
        if (accept_sym("-")) {
            if (peek().kind == Tok::Int) return Expr::literal(-take().value);
            return Expr::neg(unary());
        }
        return primary();
    }

    Expr primary() {
        const Token& t = peek();
        if (t.kind == Tok::Int) return Expr::literal(take().value);
        if (t.kind == Tok::Ident) {
            if (!is_builtin(t.text) && !params_.count(t.text)) unresolved(t, "unknown identifier '" + t.text + "'");
            return Expr::var(take().text);
        }
        if (accept_sym("(")) {
            Expr e = expr();
            expect_sym(")");
            return e;
        }
        fail(t, t.kind == Tok::End ? "expected expression" : "unexpected '" + t.text + "'");
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    const Params& params_;
};

bool is_keyword(std::string_view w) {
    static const std::set<std::string_view> kw = {"config", "param", "array",  "begin",       "end",
                                                  "read",   "write", "atomic", "syncthreads", "syncwarp",
                                                  "if",     "then",  "else",   "endif",       "global",
                                                  "block"};
    return kw.count(w) > 0;
}

} // namespace

KernelProgram parse_program(std::string_view text) {
    KernelProgram prog;
    bool have_config = false;
    bool in_body = false;
    bool done = false;

    struct Frame {
        std::vector<Instruction>* body;
        Instruction* node; // enclosing If, null at top level
        bool in_else;
        Token opener;
    };
    std::vector<Frame> stack;

    unsigned line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view raw = text.substr(pos, nl - pos);
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        pos = nl + 1;
        ++line_no;

        LineParser p(lex_line(raw, line_no), prog.params);
        if (p.at_end()) continue;
        const Token head = p.peek();
        if (head.kind != Tok::Ident) p.fail(head, "expected a keyword");
        if (done) p.fail(head, "content after 'end'");

        if (!in_body) {
            p.take();
            if (head.text == "config") {
                if (have_config) p.fail(head, "duplicate config line");
                std::optional<std::int64_t> dims[3];
                static const char* keys[] = {"blocks", "warps", "lanes"};
                while (!p.at_end()) {
                    const Token key = p.expect_ident();
                    p.expect_sym("=");
                    const Token num_tok = p.peek();
                    const std::int64_t v = p.expect_int();
                    int which = -1;
                    for (int k = 0; k < 3; ++k)
                        if (key.text == keys[k]) which = k;
                    if (which < 0) p.fail(key, "unknown config key '" + key.text + "'");
                    if (dims[which]) p.fail(key, "duplicate config key '" + key.text + "'");
                    if (v <= 0) p.fail(num_tok, "grid dimension must be positive");
                    if (v > std::numeric_limits<std::uint16_t>::max()) p.fail(num_tok, "grid dimension too large");
                    dims[which] = v;
                }
                for (int k = 0; k < 3; ++k)
                    if (!dims[k]) p.fail(head, std::string("config is missing ") + keys[k]);
                prog.grid = {static_cast<std::uint32_t>(*dims[0]), static_cast<std::uint32_t>(*dims[1]),
                             static_cast<std::uint32_t>(*dims[2])};
                if (static_cast<std::uint64_t>(prog.grid.total_threads()) >= (1ull << 24))
                    p.fail(head, "grid has too many threads");
                have_config = true;
            } else if (head.text == "param") {
                const Token name = p.expect_ident();
                p.expect_sym("=");
                const std::int64_t v = p.expect_int();
                p.expect_end();
                if (is_builtin(name.text) || is_keyword(name.text)) p.fail(name, "reserved name '" + name.text + "'");
                if (prog.params.count(name.text) || prog.find_array(name.text))
                    p.unresolved(name, "duplicate name '" + name.text + "'");
                prog.params[name.text] = v;
            } else if (head.text == "array") {
                const Token name = p.expect_ident();
                ArrayDecl decl;
                decl.name = name.text;
                if (p.accept_word("global")) decl.scope = ArrayScope::Global;
                else if (p.accept_word("block")) decl.scope = ArrayScope::BlockShared;
                else p.fail(p.peek(), "expected 'global' or 'block'");
                const Token len_tok = p.peek();
                const std::int64_t len = p.expect_int();
                p.expect_end();
                if (len <= 0 || len > (1 << 24)) p.fail(len_tok, "array length must be in [1, 2^24]");
                decl.length = static_cast<std::uint32_t>(len);
                if (is_builtin(name.text) || is_keyword(name.text)) p.fail(name, "reserved name '" + name.text + "'");
                if (prog.params.count(name.text) || prog.find_array(name.text))
                    p.unresolved(name, "duplicate name '" + name.text + "'");
                prog.arrays.push_back(std::move(decl));
            } else if (head.text == "begin") {
                p.expect_end();
                if (!have_config) p.fail(head, "missing config line before 'begin'");
                in_body = true;
                stack.push_back({&prog.body, nullptr, false, head});
            } else {
                p.fail(head, "unexpected '" + head.text + "' outside the body");
            }
            continue;
        }

        p.take();
        Frame& top = stack.back();
        const std::string& w = head.text;
        if (w == "read" || w == "write" || w == "atomic") {
            const Token arr = p.expect_ident();
            if (!prog.find_array(arr.text)) p.unresolved(arr, "unknown array '" + arr.text + "'");
            p.expect_sym("[");
            Expr idx = p.expr();
            p.expect_sym("]");
            p.expect_end();
            const AccessKind k = w == "read" ? AccessKind::Read : w == "write" ? AccessKind::Write : AccessKind::Atomic;
            top.body->push_back(Instruction::access(k, arr.text, std::move(idx)));
        } else if (w == "syncthreads" || w == "syncwarp") {
            p.expect_end();
            top.body->push_back(w == "syncthreads" ? Instruction::sync_threads() : Instruction::sync_warp());
        } else if (w == "if") {
            Expr cond = p.expr();
            p.expect_word("then");
            p.expect_end();
            top.body->push_back(Instruction::if_then(std::move(cond), {}));
            Instruction* node = &top.body->back();
            stack.push_back({&node->then_body, node, false, head});
        } else if (w == "else") {
            p.expect_end();
            if (!top.node) p.fail(head, "'else' without 'if'");
            if (top.in_else) p.fail(head, "duplicate 'else'");
            top.body = &top.node->else_body;
            top.in_else = true;
        } else if (w == "endif") {
            p.expect_end();
            if (!top.node) p.fail(head, "'endif' without 'if'");
            stack.pop_back();
        } else if (w == "end") {
            p.expect_end();
            if (top.node) p.fail(top.opener, "'if' without 'endif'");
            stack.pop_back();
            in_body = false;
            done = true;
        } else {
            p.fail(head, "unknown statement '" + w + "'");
        }
    }
    if (!have_config) throw ParseError(line_no, 1, "missing config line");
    if (in_body) {
        const Token& t = stack.back().opener;
        throw ParseError(t.line, t.col, stack.back().node ? "'if' without 'endif'" : "'begin' without 'end'");
    }
    if (!done) throw ParseError(line_no, 1, "missing 'begin' ... 'end' body");
    validate(prog);
    return prog;
}

// ---------------------------------------------------------------------------
// Printer

namespace {

int precedence(const Expr& e) {
    switch (e.op) {
    case Expr::Op::Literal:
    case Expr::Op::Var: return 5;
    case Expr::Op::Neg: return 4;
    case Expr::Op::Mul:
    case Expr::Op::Div: return 3;
    case Expr::Op::Add:
    case Expr::Op::Sub: return 2;
    default: return 1;
    }
}

const char* op_symbol(Expr::Op op) {
    switch (op) {
    case Expr::Op::Add: return "+";
    case Expr::Op::Sub: return "-";
    case Expr::Op::Mul: return "*";
    case Expr::Op::Div: return "/";
    case Expr::Op::Lt: return "<";
    case Expr::Op::Gt: return ">";
    case Expr::Op::Le: return "<=";
    case Expr::Op::Ge: return ">=";
    case Expr::Op::Eq: return "==";
    case Expr::Op::Ne: return "!=";
    default: return "?";
    }
}

void print_expr(std::ostream& os, const Expr& e) {
    auto child = [&os](const Expr& c, bool parens) {
        if (parens) os << '(';
        print_expr(os, c);
        if (parens) os << ')';
    };
    switch (e.op) {
    case Expr::Op::Literal: os << e.value; return;
    case Expr::Op::Var: os << e.name; return;
    case Expr::Op::Neg: {
        const Expr& c = e.args[0];
        os << '-';
        // -(3) stays a negation; "-3" would read back as a literal.
        child(c, (c.op == Expr::Op::Literal && c.value >= 0) || precedence(c) < 4);
        return;
    }
    default: {
        const int p = precedence(e);
        child(e.args[0], precedence(e.args[0]) < p || (p == 1 && precedence(e.args[0]) == 1));
        os << ' ' << op_symbol(e.op) << ' ';
        child(e.args[1], precedence(e.args[1]) <= p);
    }
    }
}

void print_body(std::ostream& os, const std::vector<Instruction>& body, int depth) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    for (const auto& i : body) {
        switch (i.kind) {
        case Instruction::Kind::Read:
        case Instruction::Kind::Write:
        case Instruction::Kind::Atomic:
            os << pad
               << (i.kind == Instruction::Kind::Read    ? "read "
                   : i.kind == Instruction::Kind::Write ? "write "
                                                        : "atomic ")
               << i.array << '[';
            print_expr(os, i.index);
            os << "]\n";
            break;
        case Instruction::Kind::SyncThreads: os << pad << "syncthreads\n"; break;
        case Instruction::Kind::SyncWarp: os << pad << "syncwarp\n"; break;
        case Instruction::Kind::If:
            os << pad << "if ";
            print_expr(os, i.cond);
            os << " then\n";
            print_body(os, i.then_body, depth + 1);
            if (!i.else_body.empty()) {
                os << pad << "else\n";
                print_body(os, i.else_body, depth + 1);
            }
            os << pad << "endif\n";
            break;
        }
    }
}

} // namespace

std::string to_string(const Expr& expr) {
    std::ostringstream os;
    print_expr(os, expr);
    return os.str();
}

std::string to_string(const KernelProgram& prog) {
    std::ostringstream os;
    os << "config blocks=" << prog.grid.blocks << " warps=" << prog.grid.warps_per_block
       << " lanes=" << prog.grid.lanes_per_warp << '\n';
    for (const auto& [name, v] : prog.params) os << "param " << name << '=' << v << '\n';
    for (const auto& a : prog.arrays)
        os << "array " << a.name << (a.scope == ArrayScope::Global ? " global " : " block ") << a.length << '\n';
    os << "begin\n";
    print_body(os, prog.body, 1);
    os << "end\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Validation and evaluation

namespace {

void validate_expr(const Expr& e, const KernelProgram& prog) {
    if (e.op == Expr::Op::Var && !is_builtin(e.name) && !prog.params.count(e.name))
        throw ProgramError("unknown identifier '" + e.name + "'");
    const std::size_t arity = e.op == Expr::Op::Literal || e.op == Expr::Op::Var ? 0 : e.op == Expr::Op::Neg ? 1 : 2;
    if (e.args.size() != arity) throw ProgramError("malformed expression");
    for (const auto& a : e.args) validate_expr(a, prog);
}

void validate_body(const std::vector<Instruction>& body, const KernelProgram& prog) {
    for (const auto& i : body) {
        if (i.is_access()) {
            if (!prog.find_array(i.array)) throw ProgramError("unknown array '" + i.array + "'");
            validate_expr(i.index, prog);
        } else if (i.kind == Instruction::Kind::If) {
            validate_expr(i.cond, prog);
            validate_body(i.then_body, prog);
            validate_body(i.else_body, prog);
        }
    }
}

} // namespace

void validate(const KernelProgram& prog) {
    if (!prog.grid.valid()) throw ProgramError("grid dimensions must be positive");
    std::set<std::string> names;
    for (const auto& [n, v] : prog.params) {
        if (is_builtin(n)) throw ProgramError("parameter shadows builtin '" + n + "'");
        names.insert(n);
    }
    for (const auto& a : prog.arrays) {
        if (a.length == 0) throw ProgramError("array '" + a.name + "' has zero length");
        if (!names.insert(a.name).second) throw ProgramError("duplicate name '" + a.name + "'");
    }
    validate_body(prog.body, prog);
}

std::int64_t eval_expr(const Expr& e, const ThreadCoord& c, const GridConfig& g, const Params& params) {
    switch (e.op) {
    case Expr::Op::Literal: return e.value;
    case Expr::Op::Var:
        if (e.name == "gtid") return c.gtid;
        if (e.name == "bid") return c.block;
        if (e.name == "wid") return c.warp;
        if (e.name == "lane") return c.lane;
        if (e.name == "ltid") return c.ltid(g);
        if (auto it = params.find(e.name); it != params.end()) return it->second;
        throw EvalError("unknown identifier '" + e.name + "'");
    case Expr::Op::Neg: return -eval_expr(e.args[0], c, g, params);
    default: break;
    }
    const std::int64_t a = eval_expr(e.args[0], c, g, params);
    const std::int64_t b = eval_expr(e.args[1], c, g, params);
    switch (e.op) {
    case Expr::Op::Add: return a + b;
    case Expr::Op::Sub: return a - b;
    case Expr::Op::Mul: return a * b;
    case Expr::Op::Div:
        if (b == 0) throw EvalError("division by zero in '" + to_string(e) + "'");
        return a / b;
    case Expr::Op::Lt: return a < b;
    case Expr::Op::Gt: return a > b;
    case Expr::Op::Le: return a <= b;
    case Expr::Op::Ge: return a >= b;
    case Expr::Op::Eq: return a == b;
    case Expr::Op::Ne: return a != b;
    default: throw EvalError("malformed expression");
    }
}

// ---------------------------------------------------------------------------
// Address space and materialization

AddressSpace::AddressSpace(const std::vector<ArrayDecl>& arrays, std::uint32_t blocks) : blocks_(blocks) {
    std::uint64_t next = 0;
    for (const auto& a : arrays) {
        if (a.scope == ArrayScope::Global) {
            arrays_.push_back({a, static_cast<Address>(next)});
            next += a.length;
        }
    }
    for (const auto& a : arrays) {
        if (a.scope == ArrayScope::BlockShared) {
            arrays_.push_back({a, static_cast<Address>(next)});
            next += static_cast<std::uint64_t>(a.length) * blocks;
        }
    }
    if (next > std::numeric_limits<Address>::max()) throw ProgramError("address space too large");
    size_ = static_cast<std::uint32_t>(next);
}

Address AddressSpace::resolve(std::string_view array, std::uint32_t block, std::int64_t index) const {
    for (const auto& e : arrays_) {
        if (e.decl.name != array) continue;
        if (index < 0 || index >= static_cast<std::int64_t>(e.decl.length))
            throw EvalError("index " + std::to_string(index) + " out of bounds for " + e.decl.name + "[" +
                            std::to_string(e.decl.length) + "]");
        const Address inst = e.decl.scope == ArrayScope::BlockShared ? block * e.decl.length : 0;
        return e.base + inst + static_cast<Address>(index);
    }
    throw EvalError("unknown array '" + std::string(array) + "'");
}

std::string AddressSpace::name(Address addr) const {
    for (const auto& e : arrays_) {
        const std::uint64_t span =
            e.decl.scope == ArrayScope::BlockShared ? static_cast<std::uint64_t>(e.decl.length) * blocks_ : e.decl.length;
        if (addr < e.base || addr >= e.base + span) continue;
        const Address off = addr - e.base;
        if (e.decl.scope == ArrayScope::Global) return e.decl.name + "[" + std::to_string(off) + "]";
        return e.decl.name + ".b" + std::to_string(off / e.decl.length) + "[" + std::to_string(off % e.decl.length) +
               "]";
    }
    return "@" + std::to_string(addr);
}

char event_letter(EventKind kind) {
    switch (kind) {
    case EventKind::Read: return 'R';
    case EventKind::Write: return 'W';
    case EventKind::Atomic: return 'A';
    case EventKind::SyncThreads: return 'B';
    case EventKind::SyncWarp: return 'V';
    }
    return '?';
}

std::size_t MaterializedProgram::total_events() const {
    std::size_t n = 0;
    for (std::size_t t = 0; t < threads.size(); ++t)
        if (present[t]) n += threads[t].size();
    return n;
}

MaterializedProgram MaterializedProgram::project(const std::vector<ThreadId>& keep) const {
    MaterializedProgram out = *this;
    std::fill(out.present.begin(), out.present.end(), false);
    for (ThreadId t : keep) out.present.at(t) = present.at(t);
    for (std::size_t t = 0; t < out.threads.size(); ++t)
        if (!out.present[t]) out.threads[t].clear();
    return out;
}

namespace {

std::uint32_t count_statements(const std::vector<Instruction>& body) {
    std::uint32_t n = 0;
    for (const auto& s : body) n += 1 + count_statements(s.then_body) + count_statements(s.else_body);
    return n;
}

void flatten(const std::vector<Instruction>& body, const KernelProgram& prog, const ThreadCoord& c,
             const AddressSpace& space, std::uint32_t& counter, std::vector<Event>& out) {
    for (const auto& i : body) {
        const std::uint32_t idx = counter++;
        try {
            switch (i.kind) {
            case Instruction::Kind::Read:
            case Instruction::Kind::Write:
            case Instruction::Kind::Atomic: {
                const std::int64_t index = eval_expr(i.index, c, prog.grid, prog.params);
                const Address a = space.resolve(i.array, c.block, index);
                out.push_back({static_cast<EventKind>(i.access_kind()), a, idx});
                break;
            }
            case Instruction::Kind::SyncThreads: out.push_back({EventKind::SyncThreads, 0, idx}); break;
            case Instruction::Kind::SyncWarp: out.push_back({EventKind::SyncWarp, 0, idx}); break;
            case Instruction::Kind::If: {
                const bool taken = eval_expr(i.cond, c, prog.grid, prog.params) != 0;
                // Both branches keep their numbering whichever one runs.
                const std::uint32_t then_start = counter;
                const std::uint32_t else_start = then_start + count_statements(i.then_body);
                const std::uint32_t after = else_start + count_statements(i.else_body);
                std::uint32_t branch = taken ? then_start : else_start;
                flatten(taken ? i.then_body : i.else_body, prog, c, space, branch, out);
                counter = after;
                break;
            }
            }
        } catch (const EvalError& e) {
            throw MaterializeError(c.gtid, idx, e.what());
        }
    }
}

} // namespace

MaterializedProgram materialize_threads(const KernelProgram& prog) {
    validate(prog);
    MaterializedProgram m;
    m.grid = prog.grid;
    m.addresses = AddressSpace(prog.arrays, prog.grid.blocks);
    const std::uint32_t n = prog.grid.total_threads();
    m.threads.resize(n);
    m.present.assign(n, true);
    for (ThreadId t = 0; t < n; ++t) {
        std::uint32_t counter = 0;
        flatten(prog.body, prog, coord_of(prog.grid, t), m.addresses, counter, m.threads[t]);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Random generation

namespace {

struct ThreadVar {
    const char* name;
    std::uint32_t range;
};

std::vector<ThreadVar> thread_vars(const GridConfig& g) {
    return {{"lane", g.lanes_per_warp},
            {"wid", g.warps_per_block},
            {"bid", g.blocks},
            {"ltid", g.threads_per_block()},
            {"gtid", g.total_threads()}};
}

// An index expression guaranteed to land in [0, len).
Expr random_index(Rng& rng, const GridConfig& g, std::uint32_t len) {
    const auto vars = thread_vars(g);
    const std::uint64_t pick = rng.below(4);
    if (pick == 0 || len == 1) return Expr::literal(static_cast<std::int64_t>(rng.below(len)));
    const ThreadVar v = vars[rng.below(vars.size())];
    if (v.range <= len) {
        if (pick == 1 && v.range > 1) {
            // (range - 1) - v, reversing the mapping
            return Expr::binary(Expr::Op::Sub, Expr::literal(v.range - 1), Expr::var(v.name));
        }
        return Expr::var(v.name);
    }
    // v mod len, spelled with truncating division
    const auto L = static_cast<std::int64_t>(len);
    return Expr::binary(Expr::Op::Sub, Expr::var(v.name),
                        Expr::binary(Expr::Op::Mul, Expr::binary(Expr::Op::Div, Expr::var(v.name), Expr::literal(L)),
                                     Expr::literal(L)));
}

Expr random_cond(Rng& rng, const GridConfig& g) {
    const auto vars = thread_vars(g);
    const ThreadVar v = vars[rng.below(vars.size())];
    static const Expr::Op ops[] = {Expr::Op::Eq, Expr::Op::Ne, Expr::Op::Lt, Expr::Op::Gt};
    const Expr::Op op = ops[rng.below(4)];
    return Expr::binary(op, Expr::var(v.name), Expr::literal(static_cast<std::int64_t>(rng.below(v.range))));
}

Instruction random_access(Rng& rng, const GridConfig& g, const GenConfig& cfg, const std::vector<ArrayDecl>& arrays) {
    const ArrayDecl& a = arrays[rng.below(arrays.size())];
    const std::uint64_t k = rng.below(cfg.atomics ? 3 : 2);
    const AccessKind kind = k == 0 ? AccessKind::Read : k == 1 ? AccessKind::Write : AccessKind::Atomic;
    return Instruction::access(kind, a.name, random_index(rng, g, a.length));
}

} // namespace

KernelProgram generate_random_program(const GenConfig& raw) {
    GenConfig cfg = raw;
    cfg.max_blocks = std::max(1u, cfg.max_blocks);
    cfg.max_warps = std::max(1u, cfg.max_warps);
    cfg.max_lanes = std::max(1u, cfg.max_lanes);
    cfg.max_addrs = std::max(1u, cfg.max_addrs);
    cfg.barrier_density = std::clamp(cfg.barrier_density, 0.0, 1.0);
    cfg.if_density = std::clamp(cfg.if_density, 0.0, 1.0);

    Rng rng(cfg.seed);
    KernelProgram prog;
    prog.grid.blocks = static_cast<std::uint32_t>(rng.between(1, cfg.max_blocks));
    prog.grid.warps_per_block = static_cast<std::uint32_t>(rng.between(1, cfg.max_warps));
    prog.grid.lanes_per_warp = static_cast<std::uint32_t>(rng.between(1, cfg.max_lanes));
    if (cfg.block_shared && cfg.max_addrs >= 2) {
        const std::uint32_t shared = cfg.max_addrs / 2;
        prog.arrays.push_back({"x", ArrayScope::Global, cfg.max_addrs - shared});
        prog.arrays.push_back({"s", ArrayScope::BlockShared, shared});
    } else {
        prog.arrays.push_back({"x", ArrayScope::Global, cfg.max_addrs});
    }

    std::uint32_t budget = static_cast<std::uint32_t>(rng.between(0, cfg.max_instrs));
    while (budget > 0) {
        if (rng.chance(cfg.barrier_density)) {
            prog.body.push_back(rng.below(2) ? Instruction::sync_warp() : Instruction::sync_threads());
            --budget;
        } else if (budget >= 2 && rng.chance(cfg.if_density)) {
            --budget;
            const std::uint32_t then_n = static_cast<std::uint32_t>(rng.between(1, std::min<std::uint32_t>(2, budget)));
            budget -= then_n;
            std::vector<Instruction> then_body, else_body;
            for (std::uint32_t i = 0; i < then_n; ++i) then_body.push_back(random_access(rng, prog.grid, cfg, prog.arrays));
            if (budget > 0 && rng.below(2)) {
                --budget;
                else_body.push_back(random_access(rng, prog.grid, cfg, prog.arrays));
            }
            prog.body.push_back(Instruction::if_then(random_cond(rng, prog.grid), std::move(then_body), std::move(else_body)));
        } else {
            prog.body.push_back(random_access(rng, prog.grid, cfg, prog.arrays));
            --budget;
        }
    }
    return prog;
}

} // namespace hirace::litmus
