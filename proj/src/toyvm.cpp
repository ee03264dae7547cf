#include "giw/toyvm.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

namespace giw {

namespace {

// ---------------------------------------------------------------------------
// lexer
// ---------------------------------------------------------------------------

enum class Tok : std::uint8_t { ident, number, op, punct, end };

struct Token {
    Tok kind = Tok::end;
    std::string text;
    int line = 0;
};

std::vector<Token> lex(const std::string& source, std::string& error) {
    std::vector<Token> tokens;
    int line = 1;
    std::size_t i = 0;
    while (i < source.size()) {
        char c = source[i];
        if (c == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '#') { // comment to end of line
            while (i < source.size() && source[i] != '\n')
                ++i;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = i;
            while (i < source.size() &&
                   (std::isalnum(static_cast<unsigned char>(source[i])) || source[i] == '_'))
                ++i;
            tokens.push_back({Tok::ident, source.substr(start, i - start), line});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = i;
            while (i < source.size() && std::isdigit(static_cast<unsigned char>(source[i])))
                ++i;
            tokens.push_back({Tok::number, source.substr(start, i - start), line});
            continue;
        }
        static const char* two_char[] = {"==", "!=", "<=", ">=", "<<", ">>"};
        bool matched = false;
        for (const char* op : two_char) {
            if (source.compare(i, 2, op) == 0) {
                tokens.push_back({Tok::op, op, line});
                i += 2;
                matched = true;
                break;
            }
        }
        if (matched)
            continue;
        if (std::strchr("+-*/%&|^<>", c)) {
            tokens.push_back({Tok::op, std::string(1, c), line});
            ++i;
            continue;
        }
        if (std::strchr("=;(){}[]", c)) {
            tokens.push_back({Tok::punct, std::string(1, c), line});
            ++i;
            continue;
        }
        error = "line " + std::to_string(line) + ": stray character '" + std::string(1, c) + "'";
        return {};
    }
    tokens.push_back({Tok::end, "", line});
    return tokens;
}

// ---------------------------------------------------------------------------
// AST
// ---------------------------------------------------------------------------

struct Expr {
    enum class Kind { number, var, index, binop } kind = Kind::number;
    std::uint64_t value = 0;      // number
    std::string name;             // var / indexed array
    std::string op;               // binop
    std::unique_ptr<Expr> lhs, rhs; // binop operands; lhs doubles as the index
};

struct Stmt {
    enum class Kind { assign, assign_index, if_, while_ } kind = Kind::assign;
    std::string name;
    std::unique_ptr<Expr> index;
    std::unique_ptr<Expr> value; // assignment rhs or condition
    std::vector<Stmt> body;
    std::vector<Stmt> else_body;
};

struct CompileError {
    std::string message;
};

class Parser {
public:
    Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    std::vector<Stmt> parse_program() {
        std::vector<Stmt> stmts;
        while (!at_end())
            stmts.push_back(parse_stmt());
        return stmts;
    }

private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t i = std::min(pos_ + ahead, tokens_.size() - 1);
        return tokens_[i];
    }
    bool at_end() const { return peek().kind == Tok::end; }
    Token take() { return tokens_[std::min(pos_++, tokens_.size() - 1)]; }

    [[noreturn]] void fail(const std::string& what) {
        throw CompileError{"line " + std::to_string(peek().line) + ": " + what};
    }

    void expect_punct(const char* p) {
        if (peek().kind != Tok::punct || peek().text != p)
            fail("expected '" + std::string(p) + "' before '" + peek().text + "'");
        take();
    }

    Stmt parse_stmt() {
        if (peek().kind == Tok::ident && peek().text == "if")
            return parse_if();
        if (peek().kind == Tok::ident && peek().text == "while")
            return parse_while();
        if (peek().kind != Tok::ident)
            fail("expected statement before '" + peek().text + "'");
        Stmt stmt;
        stmt.name = take().text;
        if (peek().kind == Tok::punct && peek().text == "[") {
            take();
            stmt.kind = Stmt::Kind::assign_index;
            stmt.index = parse_expr();
            expect_punct("]");
        } else {
            stmt.kind = Stmt::Kind::assign;
        }
        expect_punct("=");
        stmt.value = parse_expr();
        expect_punct(";");
        return stmt;
    }

    Stmt parse_if() {
        take(); // if
        Stmt stmt;
        stmt.kind = Stmt::Kind::if_;
        expect_punct("(");
        stmt.value = parse_expr();
        expect_punct(")");
        stmt.body = parse_block();
        if (peek().kind == Tok::ident && peek().text == "else") {
            take();
            if (peek().kind == Tok::ident && peek().text == "if")
                stmt.else_body.push_back(parse_if());
            else
                stmt.else_body = parse_block();
        }
        return stmt;
    }

    Stmt parse_while() {
        take(); // while
        Stmt stmt;
        stmt.kind = Stmt::Kind::while_;
        expect_punct("(");
        stmt.value = parse_expr();
        expect_punct(")");
        stmt.body = parse_block();
        return stmt;
    }

    std::vector<Stmt> parse_block() {
        expect_punct("{");
        std::vector<Stmt> stmts;
        while (!(peek().kind == Tok::punct && peek().text == "}")) {
            if (at_end())
                fail("expected '}'");
            stmts.push_back(parse_stmt());
        }
        take();
        return stmts;
    }

    // precedence climbing, lowest first: | ^ & ==/!= rel << >> +- */%
    std::unique_ptr<Expr> parse_expr() { return parse_binary(0); }

    static int level_of(const std::string& op) {
        if (op == "|") return 0;
        if (op == "^") return 1;
        if (op == "&") return 2;
        if (op == "==" || op == "!=") return 3;
        if (op == "<" || op == "<=" || op == ">" || op == ">=") return 4;
        if (op == "<<" || op == ">>") return 5;
        if (op == "+" || op == "-") return 6;
        if (op == "*" || op == "/" || op == "%") return 7;
        return -1;
    }

    std::unique_ptr<Expr> parse_binary(int min_level) {
        std::unique_ptr<Expr> lhs = parse_primary();
        for (;;) {
            if (peek().kind != Tok::op)
                return lhs;
            int level = level_of(peek().text);
            if (level < min_level)
                return lhs;
            std::string op = take().text;
            std::unique_ptr<Expr> rhs = parse_binary(level + 1);
            auto node = std::make_unique<Expr>();
            node->kind = Expr::Kind::binop;
            node->op = std::move(op);
            node->lhs = std::move(lhs);
            node->rhs = std::move(rhs);
            lhs = std::move(node);
        }
    }

    std::unique_ptr<Expr> parse_primary() {
        auto node = std::make_unique<Expr>();
        if (peek().kind == Tok::number) {
            node->kind = Expr::Kind::number;
            node->value = std::strtoull(take().text.c_str(), nullptr, 10);
            return node;
        }
        if (peek().kind == Tok::ident) {
            node->name = take().text;
            if (peek().kind == Tok::punct && peek().text == "[") {
                take();
                node->kind = Expr::Kind::index;
                node->lhs = parse_expr();
                expect_punct("]");
            } else {
                node->kind = Expr::Kind::var;
            }
            return node;
        }
        if (peek().kind == Tok::punct && peek().text == "(") {
            take();
            node = parse_expr();
            expect_punct(")");
            return node;
        }
        fail("expected expression before '" + peek().text + "'");
    }
};

// ---------------------------------------------------------------------------
// name resolution + emission
// ---------------------------------------------------------------------------

void collect_assigned(const std::vector<Stmt>& stmts, std::set<std::string>& assigned) {
    for (const Stmt& stmt : stmts) {
        if (stmt.kind == Stmt::Kind::assign)
            assigned.insert(stmt.name);
        collect_assigned(stmt.body, assigned);
        collect_assigned(stmt.else_body, assigned);
    }
}

class Emitter {
public:
    Emitter(const ToyHostSpec& host, const std::set<std::string>& assigned) {
        for (std::size_t i = 0; i < host.arrays.size(); ++i)
            arrays_[host.arrays[i]] = static_cast<std::int32_t>(i);
        module_.array_names = host.arrays;
        for (const std::string& name : host.scalars) {
            std::int32_t reg = var_reg(name);
            module_.scalar_regs.emplace_back(name, reg);
            declared_.insert(name);
        }
        for (const std::string& name : assigned)
            declared_.insert(name);
    }

    ToyModule emit_program(const std::vector<Stmt>& stmts) {
        emit_stmts(stmts);
        emit(ToyOp::halt, 0, 0, 0);
        module_.reg_count = next_reg_;
        return std::move(module_);
    }

private:
    ToyModule module_;
    std::map<std::string, std::int32_t> arrays_;
    std::map<std::string, std::int32_t> vars_;
    std::set<std::string> declared_;
    std::int32_t next_reg_ = 0;

    std::int32_t var_reg(const std::string& name) {
        auto it = vars_.find(name);
        if (it != vars_.end())
            return it->second;
        std::int32_t reg = next_reg_++;
        vars_[name] = reg;
        return reg;
    }

    std::int32_t temp() { return next_reg_++; }

    std::size_t emit(ToyOp op, std::int32_t dst, std::int32_t a, std::int32_t b,
                     std::uint64_t imm = 0) {
        module_.code.push_back({op, dst, a, b, imm});
        return module_.code.size() - 1;
    }

    std::int32_t array_id(const std::string& name) {
        auto it = arrays_.find(name);
        if (it == arrays_.end())
            throw CompileError{"'" + name + "' was not declared in this scope"};
        return it->second;
    }

    static ToyOp binop_code(const std::string& op) {
        if (op == "+") return ToyOp::add;
        if (op == "-") return ToyOp::sub;
        if (op == "*") return ToyOp::mul;
        if (op == "/") return ToyOp::divi;
        if (op == "%") return ToyOp::mod;
        if (op == "&") return ToyOp::band;
        if (op == "|") return ToyOp::bor;
        if (op == "^") return ToyOp::bxor;
        if (op == "<<") return ToyOp::shl;
        if (op == ">>") return ToyOp::shr;
        if (op == "==") return ToyOp::cmpeq;
        if (op == "!=") return ToyOp::cmpne;
        if (op == "<") return ToyOp::cmplt;
        if (op == "<=") return ToyOp::cmple;
        if (op == ">") return ToyOp::cmpgt;
        if (op == ">=") return ToyOp::cmpge;
        throw CompileError{"unknown operator " + op};
    }

    std::int32_t emit_expr(const Expr& expr) {
        switch (expr.kind) {
        case Expr::Kind::number: {
            std::int32_t dst = temp();
            emit(ToyOp::loadk, dst, 0, 0, expr.value);
            return dst;
        }
        case Expr::Kind::var: {
            if (arrays_.count(expr.name))
                throw CompileError{"cannot convert '" + expr.name + "' to a value"};
            if (!declared_.count(expr.name))
                throw CompileError{"'" + expr.name + "' was not declared in this scope"};
            return var_reg(expr.name);
        }
        case Expr::Kind::index: {
            std::int32_t arr = array_id(expr.name);
            std::int32_t idx = emit_expr(*expr.lhs);
            std::int32_t dst = temp();
            emit(ToyOp::loadidx, dst, arr, idx);
            return dst;
        }
        case Expr::Kind::binop: {
            std::int32_t a = emit_expr(*expr.lhs);
            std::int32_t b = emit_expr(*expr.rhs);
            std::int32_t dst = temp();
            emit(binop_code(expr.op), dst, a, b);
            return dst;
        }
        }
        throw CompileError{"bad expression"};
    }

    void emit_stmts(const std::vector<Stmt>& stmts) {
        for (const Stmt& stmt : stmts)
            emit_stmt(stmt);
    }

    void emit_stmt(const Stmt& stmt) {
        switch (stmt.kind) {
        case Stmt::Kind::assign: {
            std::int32_t value = emit_expr(*stmt.value);
            emit(ToyOp::mov, var_reg(stmt.name), value, 0);
            return;
        }
        case Stmt::Kind::assign_index: {
            std::int32_t arr = array_id(stmt.name);
            std::int32_t idx = emit_expr(*stmt.index);
            std::int32_t value = emit_expr(*stmt.value);
            emit(ToyOp::storeidx, arr, idx, value);
            return;
        }
        case Stmt::Kind::if_: {
            std::int32_t cond = emit_expr(*stmt.value);
            std::size_t skip = emit(ToyOp::jz, 0, cond, 0);
            emit_stmts(stmt.body);
            if (stmt.else_body.empty()) {
                module_.code[skip].b = static_cast<std::int32_t>(module_.code.size());
            } else {
                std::size_t over = emit(ToyOp::jmp, 0, 0, 0);
                module_.code[skip].b = static_cast<std::int32_t>(module_.code.size());
                emit_stmts(stmt.else_body);
                module_.code[over].a = static_cast<std::int32_t>(module_.code.size());
            }
            return;
        }
        case Stmt::Kind::while_: {
            std::size_t top = module_.code.size();
            std::int32_t cond = emit_expr(*stmt.value);
            std::size_t exit = emit(ToyOp::jz, 0, cond, 0);
            emit_stmts(stmt.body);
            emit(ToyOp::jmp, 0, static_cast<std::int32_t>(top), 0);
            module_.code[exit].b = static_cast<std::int32_t>(module_.code.size());
            return;
        }
        }
    }
};

// ---------------------------------------------------------------------------
// optimizer: constant folding/propagation, copy propagation, dead stores
// ---------------------------------------------------------------------------

bool writes_reg(const ToyInstr& in) {
    switch (in.op) {
    case ToyOp::storeidx:
    case ToyOp::jz:
    case ToyOp::jmp:
    case ToyOp::halt:
        return false;
    default:
        return true;
    }
}

bool pure(const ToyInstr& in) {
    // loads are treated as pure for elimination purposes
    return writes_reg(in);
}

void reads_of(const ToyInstr& in, std::int32_t out[2]) {
    out[0] = out[1] = -1;
    switch (in.op) {
    case ToyOp::loadk:
    case ToyOp::jmp:
    case ToyOp::halt:
        return;
    case ToyOp::mov:
        out[0] = in.a;
        return;
    case ToyOp::loadidx:
        out[0] = in.b;
        return;
    case ToyOp::storeidx:
        out[0] = in.a;
        out[1] = in.b;
        return;
    case ToyOp::jz:
        out[0] = in.a;
        return;
    default:
        out[0] = in.a;
        out[1] = in.b;
        return;
    }
}

bool is_jump_target(const std::vector<ToyInstr>& code, std::size_t index) {
    for (const ToyInstr& in : code) {
        if (in.op == ToyOp::jz && static_cast<std::size_t>(in.b) == index)
            return true;
        if (in.op == ToyOp::jmp && static_cast<std::size_t>(in.a) == index)
            return true;
    }
    return false;
}

// rewrite jump targets after removing one instruction
void drop_instr(std::vector<ToyInstr>& code, std::size_t index) {
    code.erase(code.begin() + static_cast<long>(index));
    for (ToyInstr& in : code) {
        if (in.op == ToyOp::jz && static_cast<std::size_t>(in.b) > index)
            --in.b;
        if (in.op == ToyOp::jmp && static_cast<std::size_t>(in.a) > index)
            --in.a;
    }
}

bool fold_pass(ToyModule& module) {
    bool changed = false;
    std::map<std::int32_t, std::uint64_t> known;
    std::map<std::int32_t, std::int32_t> copies;

    auto invalidate = [&](std::int32_t reg) {
        known.erase(reg);
        copies.erase(reg);
        for (auto it = copies.begin(); it != copies.end();)
            it = it->second == reg ? copies.erase(it) : std::next(it);
    };

    for (std::size_t i = 0; i < module.code.size(); ++i) {
        if (is_jump_target(module.code, i)) {
            known.clear();
            copies.clear();
        }
        ToyInstr& in = module.code[i];

        // copy propagation on operand registers
        auto subst = [&](std::int32_t& reg) {
            auto it = copies.find(reg);
            if (it != copies.end()) {
                reg = it->second;
                changed = true;
            }
        };
        switch (in.op) {
        case ToyOp::loadk:
        case ToyOp::jmp:
        case ToyOp::halt:
            break;
        case ToyOp::mov:
        case ToyOp::jz:
            subst(in.a);
            break;
        case ToyOp::loadidx:
            subst(in.b);
            break;
        case ToyOp::storeidx:
            subst(in.a);
            subst(in.b);
            break;
        default:
            subst(in.a);
            subst(in.b);
            break;
        }

        // algebraic folds on binary ops with known operands
        auto known_a = [&]() -> std::optional<std::uint64_t> {
            auto it = known.find(in.a);
            return it == known.end() ? std::nullopt : std::optional(it->second);
        };
        auto known_b = [&]() -> std::optional<std::uint64_t> {
            auto it = known.find(in.b);
            return it == known.end() ? std::nullopt : std::optional(it->second);
        };
        auto to_loadk = [&](std::uint64_t value) {
            in = {ToyOp::loadk, in.dst, 0, 0, value};
            changed = true;
        };
        auto to_mov = [&](std::int32_t src) {
            in = {ToyOp::mov, in.dst, src, 0, 0};
            changed = true;
        };

        switch (in.op) {
        case ToyOp::add: {
            auto a = known_a(), b = known_b();
            if (a && b) to_loadk(*a + *b);
            else if (a && *a == 0) to_mov(in.b);
            else if (b && *b == 0) to_mov(in.a);
            break;
        }
        case ToyOp::sub: {
            auto a = known_a(), b = known_b();
            if (a && b) to_loadk(*a - *b);
            else if (b && *b == 0) to_mov(in.a);
            break;
        }
        case ToyOp::mul: {
            auto a = known_a(), b = known_b();
            if (a && b) to_loadk(*a * *b);
            else if ((a && *a == 0) || (b && *b == 0)) to_loadk(0);
            else if (a && *a == 1) to_mov(in.b);
            else if (b && *b == 1) to_mov(in.a);
            break;
        }
        case ToyOp::divi: {
            auto a = known_a(), b = known_b();
            if (a && b && *b != 0) to_loadk(*a / *b);
            else if (b && *b == 1) to_mov(in.a);
            break;
        }
        case ToyOp::mod: {
            auto a = known_a(), b = known_b();
            if (a && b && *b != 0) to_loadk(*a % *b);
            else if (b && *b == 1) to_loadk(0);
            break;
        }
        case ToyOp::band: {
            auto a = known_a(), b = known_b();
            if (a && b) to_loadk(*a & *b);
            else if ((a && *a == 0) || (b && *b == 0)) to_loadk(0);
            break;
        }
        case ToyOp::bor: {
            auto a = known_a(), b = known_b();
            if (a && b) to_loadk(*a | *b);
            else if (a && *a == 0) to_mov(in.b);
            else if (b && *b == 0) to_mov(in.a);
            break;
        }
        case ToyOp::bxor: {
            auto a = known_a(), b = known_b();
            if (a && b) to_loadk(*a ^ *b);
            else if (a && *a == 0) to_mov(in.b);
            else if (b && *b == 0) to_mov(in.a);
            break;
        }
        case ToyOp::shl: {
            auto a = known_a(), b = known_b();
            if (a && b) to_loadk(*b >= 64 ? 0 : *a << *b);
            else if (a && *a == 0) to_loadk(0);
            else if (b && *b == 0) to_mov(in.a);
            break;
        }
        case ToyOp::shr: {
            auto a = known_a(), b = known_b();
            if (a && b) to_loadk(*b >= 64 ? 0 : *a >> *b);
            else if (a && *a == 0) to_loadk(0);
            else if (b && *b == 0) to_mov(in.a);
            break;
        }
        case ToyOp::cmpeq:
        case ToyOp::cmpne:
        case ToyOp::cmplt:
        case ToyOp::cmple:
        case ToyOp::cmpgt:
        case ToyOp::cmpge: {
            auto a = known_a(), b = known_b();
            if (a && b) {
                bool r = in.op == ToyOp::cmpeq   ? *a == *b
                         : in.op == ToyOp::cmpne ? *a != *b
                         : in.op == ToyOp::cmplt ? *a < *b
                         : in.op == ToyOp::cmple ? *a <= *b
                         : in.op == ToyOp::cmpgt ? *a > *b
                                                 : *a >= *b;
                to_loadk(r ? 1 : 0);
            }
            break;
        }
        default:
            break;
        }

        // update the tracked state
        if (writes_reg(module.code[i])) {
            const ToyInstr& now = module.code[i];
            const bool src_known = now.op == ToyOp::mov && known.count(now.a);
            const std::uint64_t src_value = src_known ? known.at(now.a) : 0;
            invalidate(now.dst);
            if (now.op == ToyOp::loadk)
                known[now.dst] = now.imm;
            else if (src_known)
                known[now.dst] = src_value;
            else if (now.op == ToyOp::mov && now.a != now.dst)
                copies[now.dst] = now.a;
        }
        if (module.code[i].op == ToyOp::jz || module.code[i].op == ToyOp::jmp) {
            known.clear();
            copies.clear();
        }
    }
    return changed;
}

bool dead_store_pass(ToyModule& module) {
    // drop a pure store whose destination is rewritten before any read within
    // the same basic block, plus self-moves
    for (std::size_t i = 0; i < module.code.size(); ++i) {
        const ToyInstr& in = module.code[i];
        if (!pure(in))
            continue;
        if (in.op == ToyOp::mov && in.a == in.dst) {
            drop_instr(module.code, i);
            return true;
        }
        for (std::size_t j = i + 1; j < module.code.size(); ++j) {
            if (is_jump_target(module.code, j))
                break;
            const ToyInstr& later = module.code[j];
            if (later.op == ToyOp::jz || later.op == ToyOp::jmp || later.op == ToyOp::halt)
                break;
            std::int32_t reads[2];
            reads_of(later, reads);
            if (reads[0] == in.dst || reads[1] == in.dst)
                break;
            if (writes_reg(later) && later.dst == in.dst) {
                drop_instr(module.code, i);
                return true;
            }
        }
    }
    return false;
}

bool never_read_pass(ToyModule& module) {
    std::set<std::int32_t> read;
    for (const ToyInstr& in : module.code) {
        std::int32_t reads[2];
        reads_of(in, reads);
        if (reads[0] >= 0)
            read.insert(reads[0]);
        if (reads[1] >= 0)
            read.insert(reads[1]);
    }
    for (std::size_t i = 0; i < module.code.size(); ++i) {
        const ToyInstr& in = module.code[i];
        if (pure(in) && !read.count(in.dst)) {
            drop_instr(module.code, i);
            return true;
        }
    }
    return false;
}

void optimize_module(ToyModule& module) {
    for (int round = 0; round < 16; ++round) {
        bool changed = fold_pass(module);
        while (dead_store_pass(module))
            changed = true;
        while (never_read_pass(module))
            changed = true;
        if (!changed)
            break;
    }
}

std::uint64_t op_cost(ToyOp op) {
    switch (op) {
    case ToyOp::mul:
    case ToyOp::divi:
    case ToyOp::mod:
    case ToyOp::cmpeq:
    case ToyOp::cmpne:
        return 2;
    case ToyOp::halt:
        return 0;
    default:
        return 1;
    }
}

} // namespace

std::string ToyModule::serialize() const {
    std::ostringstream out;
    out << "toy1 regs=" << reg_count << " arrays=";
    for (const std::string& name : array_names)
        out << name << ';';
    out << " scalars=";
    for (const auto& [name, reg] : scalar_regs)
        out << name << '@' << reg << ';';
    out << '\n';
    for (const ToyInstr& in : code)
        out << static_cast<int>(in.op) << ' ' << in.dst << ' ' << in.a << ' ' << in.b << ' '
            << in.imm << '\n';
    return out.str();
}

ToyCompileResult toy_compile(const std::string& source, const ToyHostSpec& host,
                             bool optimize) {
    ToyCompileResult result;
    std::string lex_error;
    std::vector<Token> tokens = lex(source, lex_error);
    if (!lex_error.empty()) {
        result.error = lex_error;
        return result;
    }
    try {
        Parser parser(std::move(tokens));
        std::vector<Stmt> stmts = parser.parse_program();
        std::set<std::string> assigned;
        collect_assigned(stmts, assigned);
        Emitter emitter(host, assigned);
        result.module = emitter.emit_program(stmts);
    } catch (const CompileError& e) {
        result.error = e.message;
        return result;
    }
    if (optimize)
        optimize_module(result.module);
    result.ok = true;
    return result;
}

const char* toy_fault_name(ToyFault fault) {
    switch (fault) {
    case ToyFault::none: return "none";
    case ToyFault::out_of_bounds: return "out_of_bounds";
    case ToyFault::readonly_write: return "readonly_write";
    case ToyFault::div_by_zero: return "div_by_zero";
    case ToyFault::step_limit: return "step_limit";
    case ToyFault::missing_array: return "missing_array";
    }
    return "unknown";
}

ToyExecResult toy_execute(const ToyModule& module,
                          const std::map<std::string, ToyArrayView>& arrays,
                          const std::map<std::string, std::uint64_t>& scalars,
                          std::uint64_t max_steps) {
    ToyExecResult result;

    std::vector<ToyArrayView> views;
    views.reserve(module.array_names.size());
    for (const std::string& name : module.array_names) {
        auto it = arrays.find(name);
        if (it == arrays.end()) {
            result.fault = ToyFault::missing_array;
            result.detail = name;
            return result;
        }
        views.push_back(it->second);
    }

    std::vector<std::uint64_t> regs(static_cast<std::size_t>(module.reg_count), 0);
    for (const auto& [name, reg] : module.scalar_regs) {
        auto it = scalars.find(name);
        if (it != scalars.end())
            regs[static_cast<std::size_t>(reg)] = it->second;
    }

    const ToyInstr* code = module.code.data();
    const std::size_t code_len = module.code.size();
    std::size_t pc = 0;
    while (pc < code_len) {
        if (++result.steps > max_steps) {
            result.fault = ToyFault::step_limit;
            return result;
        }
        const ToyInstr& in = code[pc];
        result.cost += op_cost(in.op);
        switch (in.op) {
        case ToyOp::loadk: regs[in.dst] = in.imm; break;
        case ToyOp::mov: regs[in.dst] = regs[in.a]; break;
        case ToyOp::add: regs[in.dst] = regs[in.a] + regs[in.b]; break;
        case ToyOp::sub: regs[in.dst] = regs[in.a] - regs[in.b]; break;
        case ToyOp::mul: regs[in.dst] = regs[in.a] * regs[in.b]; break;
        case ToyOp::divi:
            if (regs[in.b] == 0) {
                result.fault = ToyFault::div_by_zero;
                return result;
            }
            regs[in.dst] = regs[in.a] / regs[in.b];
            break;
        case ToyOp::mod:
            if (regs[in.b] == 0) {
                result.fault = ToyFault::div_by_zero;
                return result;
            }
            regs[in.dst] = regs[in.a] % regs[in.b];
            break;
        case ToyOp::band: regs[in.dst] = regs[in.a] & regs[in.b]; break;
        case ToyOp::bor: regs[in.dst] = regs[in.a] | regs[in.b]; break;
        case ToyOp::bxor: regs[in.dst] = regs[in.a] ^ regs[in.b]; break;
        case ToyOp::shl: regs[in.dst] = regs[in.b] >= 64 ? 0 : regs[in.a] << regs[in.b]; break;
        case ToyOp::shr: regs[in.dst] = regs[in.b] >= 64 ? 0 : regs[in.a] >> regs[in.b]; break;
        case ToyOp::cmpeq: regs[in.dst] = regs[in.a] == regs[in.b]; break;
        case ToyOp::cmpne: regs[in.dst] = regs[in.a] != regs[in.b]; break;
        case ToyOp::cmplt: regs[in.dst] = regs[in.a] < regs[in.b]; break;
        case ToyOp::cmple: regs[in.dst] = regs[in.a] <= regs[in.b]; break;
        case ToyOp::cmpgt: regs[in.dst] = regs[in.a] > regs[in.b]; break;
        case ToyOp::cmpge: regs[in.dst] = regs[in.a] >= regs[in.b]; break;
        case ToyOp::loadidx: {
            const ToyArrayView& view = views[in.a];
            std::uint64_t idx = regs[in.b];
            if (idx >= view.len) {
                result.fault = ToyFault::out_of_bounds;
                result.detail = module.array_names[in.a];
                return result;
            }
            regs[in.dst] = view.data[idx];
            break;
        }
        case ToyOp::storeidx: {
            const ToyArrayView& view = views[in.dst];
            if (view.read_only) {
                result.fault = ToyFault::readonly_write;
                result.detail = module.array_names[in.dst];
                return result;
            }
            std::uint64_t idx = regs[in.a];
            if (idx >= view.len) {
                result.fault = ToyFault::out_of_bounds;
                result.detail = module.array_names[in.dst];
                return result;
            }
            view.data[idx] = regs[in.b];
            break;
        }
        case ToyOp::jz:
            if (regs[in.a] == 0) {
                pc = static_cast<std::size_t>(in.b);
                continue;
            }
            break;
        case ToyOp::jmp:
            pc = static_cast<std::size_t>(in.a);
            continue;
        case ToyOp::halt:
            return result;
        }
        ++pc;
    }
    return result;
}

} // namespace giw
