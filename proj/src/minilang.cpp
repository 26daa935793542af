// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0

#include "dynapre/minilang.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <unordered_map>

namespace dynapre::minilang {

ParseError::ParseError(const std::string& msg, int line, int column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + msg),
      line_(line),
      column_(column) {}

std::string_view status_name(Status s) {
    switch (s) {
        case Status::Ok: return "OK";
        case Status::StepLimit: return "STEP_LIMIT";
        case Status::InputExhausted: return "INPUT_EXHAUSTED";
        case Status::DivByZero: return "DIV_BY_ZERO";
    }
    return "OK";
}

Status status_from_name(std::string_view name) {
    if (name == "OK") return Status::Ok;
    if (name == "STEP_LIMIT") return Status::StepLimit;
    if (name == "INPUT_EXHAUSTED") return Status::InputExhausted;
    if (name == "DIV_BY_ZERO") return Status::DivByZero;
    throw std::invalid_argument("unknown status: " + std::string(name));
}

namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { Ident, Number, Punct, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    int line = 1;
    int column = 1;
};

bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::vector<Token> lex(std::string_view src) {
    std::vector<Token> out;
    int line = 1;
    int col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    while (i < src.size()) {
        const char c = src[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            advance(1);
            continue;
        }
        Token t;
        t.line = line;
        t.column = col;
        if (is_ident_start(c)) {
            std::size_t j = i;
            while (j < src.size() && is_ident_char(src[j])) ++j;
            t.kind = Tok::Ident;
            t.text = std::string(src.substr(i, j - i));
            advance(j - i);
        } else if (is_digit(c)) {
            std::size_t j = i;
            while (j < src.size() && is_digit(src[j])) ++j;
            if (j < src.size() && is_ident_start(src[j])) {
                throw ParseError("malformed number", line, col);
            }
            t.kind = Tok::Number;
            t.text = std::string(src.substr(i, j - i));
            advance(j - i);
        } else {
            static constexpr std::string_view kTwo[] = {"<=", ">=", "==", "!="};
            t.kind = Tok::Punct;
            bool matched = false;
            for (auto two : kTwo) {
                if (src.substr(i, 2) == two) {
                    t.text = std::string(two);
                    advance(2);
                    matched = true;
                    break;
                }
            }
            if (!matched) {
                static constexpr std::string_view kOne = "(){};=+-*/%<>";
                if (kOne.find(c) == std::string_view::npos) {
                    throw ParseError(std::string("unexpected character '") + c + "'", line, col);
                }
                t.text = std::string(1, c);
                advance(1);
            }
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.line = line;
    end.column = col;
    out.push_back(end);
    return out;
}

// ---------------------------------------------------------------------------
// Parser

bool is_keyword(const std::string& s) {
    return s == "if" || s == "else" || s == "while" || s == "print" || s == "read";
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    Node program() {
        Node root;
        root.kind = NodeKind::Program;
        while (peek().kind != Tok::End) root.children.push_back(statement());
        return root;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& next() { return toks_[pos_++]; }

    [[noreturn]] void fail(const std::string& msg) const {
        const Token& t = peek();
        const std::string found = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
        throw ParseError(msg + ", found " + found, t.line, t.column);
    }

    bool at_punct(std::string_view p) const { return peek().kind == Tok::Punct && peek().text == p; }
    bool at_word(std::string_view w) const { return peek().kind == Tok::Ident && peek().text == w; }

    void expect_punct(std::string_view p) {
        if (!at_punct(p)) fail("expected '" + std::string(p) + "'");
        ++pos_;
    }
    void expect_word(std::string_view w) {
        if (!at_word(w)) fail("expected '" + std::string(w) + "'");
        ++pos_;
    }

    Node block() {
        expect_punct("{");
        Node b;
        b.kind = NodeKind::Block;
        while (!at_punct("}")) {
            if (peek().kind == Tok::End) fail("expected '}'");
            b.children.push_back(statement());
        }
        ++pos_;
        return b;
    }

    Node statement() {
        if (at_word("if")) {
            ++pos_;
            Node n;
            n.kind = NodeKind::If;
            expect_punct("(");
            n.children.push_back(expression());
            expect_punct(")");
            n.children.push_back(block());
            if (at_word("else")) {
                ++pos_;
                n.children.push_back(block());
            }
            return n;
        }
        if (at_word("while")) {
            ++pos_;
            Node n;
            n.kind = NodeKind::While;
            expect_punct("(");
            n.children.push_back(expression());
            expect_punct(")");
            n.children.push_back(block());
            return n;
        }
        if (at_word("print")) {
            ++pos_;
            Node n;
            n.kind = NodeKind::Print;
            expect_punct("(");
            n.children.push_back(expression());
            expect_punct(")");
            expect_punct(";");
            return n;
        }
        if (peek().kind == Tok::Ident && !is_keyword(peek().text)) {
            Node n;
            n.kind = NodeKind::Assign;
            n.text = next().text;
            expect_punct("=");
            n.children.push_back(expression());
            expect_punct(";");
            return n;
        }
        fail("expected a statement");
    }

    static Node binop(std::string op, Node lhs, Node rhs) {
        Node n;
        n.kind = NodeKind::BinOp;
        n.text = std::move(op);
        n.children.push_back(std::move(lhs));
        n.children.push_back(std::move(rhs));
        return n;
    }

    Node expression() {
        Node lhs = additive();
        while (peek().kind == Tok::Punct &&
               (peek().text == "<" || peek().text == ">" || peek().text == "<=" ||
                peek().text == ">=" || peek().text == "==" || peek().text == "!=")) {
            std::string op = next().text;
            lhs = binop(std::move(op), std::move(lhs), additive());
        }
        return lhs;
    }

    Node additive() {
        Node lhs = multiplicative();
        while (at_punct("+") || at_punct("-")) {
            std::string op = next().text;
            lhs = binop(std::move(op), std::move(lhs), multiplicative());
        }
        return lhs;
    }

    Node multiplicative() {
        Node lhs = unary();
        while (at_punct("*") || at_punct("/") || at_punct("%")) {
            std::string op = next().text;
            lhs = binop(std::move(op), std::move(lhs), unary());
        }
        return lhs;
    }

    Node literal(const Token& t, bool negative) {
        std::uint64_t mag = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), mag);
        const std::uint64_t max_mag =
            negative ? std::uint64_t{1} << 63 : static_cast<std::uint64_t>(INT64_MAX);
        if (ec != std::errc{} || mag > max_mag) {
            throw ParseError("integer literal out of range", t.line, t.column);
        }
        Node n;
        n.kind = NodeKind::IntLit;
        n.value = static_cast<std::int64_t>(negative ? 0 - mag : mag);
        return n;
    }

    Node unary() {
        if (at_punct("-")) {
            ++pos_;
            if (peek().kind == Tok::Number) return literal(next(), true);
            Node zero;
            zero.kind = NodeKind::IntLit;
            return binop("-", std::move(zero), unary());
        }
        return primary();
    }

    Node primary() {
        const Token& t = peek();
        if (t.kind == Tok::Number) {
            ++pos_;
            return literal(t, false);
        }
        if (at_word("read")) {
            ++pos_;
            expect_punct("(");
            expect_punct(")");
            Node n;
            n.kind = NodeKind::Read;
            return n;
        }
        if (t.kind == Tok::Ident && !is_keyword(t.text)) {
            ++pos_;
            Node n;
            n.kind = NodeKind::Var;
            n.text = t.text;
            return n;
        }
        if (at_punct("(")) {
            ++pos_;
            Node inner = expression();
            expect_punct(")");
            return inner;
        }
        fail("expected an expression");
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Compiler to flat instructions

char op_code(const std::string& op) {
    if (op == "<=") return 'l';
    if (op == ">=") return 'g';
    if (op == "==") return 'e';
    if (op == "!=") return 'n';
    return op.empty() ? '?' : op[0];
}

class Compiler {
public:
    std::vector<Instr> code;
    std::unordered_map<std::string, int> slots;
    int next_edge = 0;

    void program(const Node& root) {
        for (const auto& s : root.children) stmt(s);
        code.push_back(Instr{Instr::Halt, 0, 0, 0});
    }

private:
    int slot(const std::string& name) {
        auto [it, inserted] = slots.try_emplace(name, static_cast<int>(slots.size()));
        return it->second;
    }

    void expr(const Node& n) {
        switch (n.kind) {
            case NodeKind::IntLit: code.push_back(Instr{Instr::Push, 0, 0, n.value}); break;
            case NodeKind::Var: code.push_back(Instr{Instr::Load, 0, slot(n.text), 0}); break;
            case NodeKind::Read: code.push_back(Instr{Instr::Read, 0, 0, 0}); break;
            case NodeKind::BinOp:
                expr(n.children.at(0));
                expr(n.children.at(1));
                code.push_back(Instr{Instr::Bin, op_code(n.text), 0, 0});
                break;
            default: throw std::logic_error("statement node in expression position");
        }
    }

    void block(const Node& b) {
        for (const auto& s : b.children) stmt(s);
    }

    void stmt(const Node& n) {
        switch (n.kind) {
            case NodeKind::Assign: {
                expr(n.children.at(0));
                code.push_back(Instr{Instr::Store, 0, slot(n.text), 0});
                break;
            }
            case NodeKind::Print:
                expr(n.children.at(0));
                code.push_back(Instr{Instr::Print, 0, 0, 0});
                break;
            case NodeKind::If: {
                expr(n.children.at(0));
                const int edge = next_edge;
                next_edge += 2;
                const std::size_t br = code.size();
                code.push_back(Instr{Instr::Branch, 0, edge, 0});
                block(n.children.at(1));
                if (n.children.size() == 3) {
                    const std::size_t jmp = code.size();
                    code.push_back(Instr{Instr::Jump, 0, 0, 0});
                    code[br].imm = static_cast<std::int64_t>(code.size());
                    block(n.children.at(2));
                    code[jmp].a = static_cast<std::int32_t>(code.size());
                } else {
                    code[br].imm = static_cast<std::int64_t>(code.size());
                }
                break;
            }
            case NodeKind::While: {
                const auto top = static_cast<std::int32_t>(code.size());
                expr(n.children.at(0));
                const int edge = next_edge;
                next_edge += 2;
                const std::size_t br = code.size();
                code.push_back(Instr{Instr::Branch, 0, edge, 0});
                block(n.children.at(1));
                code.push_back(Instr{Instr::Jump, 0, top, 0});
                code[br].imm = static_cast<std::int64_t>(code.size());
                break;
            }
            case NodeKind::Block: block(n); break;
            default: throw std::logic_error("expression node in statement position");
        }
    }
};

void validate(const Node& n, bool statement_position) {
    auto need = [&](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("malformed AST: ") + what);
    };
    switch (n.kind) {
        case NodeKind::Program:
        case NodeKind::Block:
            for (const auto& c : n.children) validate(c, true);
            return;
        case NodeKind::Assign:
            need(statement_position && n.children.size() == 1 && !n.text.empty(), "assign");
            validate(n.children[0], false);
            return;
        case NodeKind::Print:
            need(statement_position && n.children.size() == 1, "print");
            validate(n.children[0], false);
            return;
        case NodeKind::If:
            need(statement_position && (n.children.size() == 2 || n.children.size() == 3), "if");
            validate(n.children[0], false);
            for (std::size_t i = 1; i < n.children.size(); ++i) {
                need(n.children[i].kind == NodeKind::Block, "if branch must be a block");
                validate(n.children[i], true);
            }
            return;
        case NodeKind::While:
            need(statement_position && n.children.size() == 2 &&
                     n.children[1].kind == NodeKind::Block,
                 "while");
            validate(n.children[0], false);
            validate(n.children[1], true);
            return;
        case NodeKind::BinOp: {
            static const char* kOps[] = {"+", "-", "*", "/", "%", "<", ">", "<=", ">=", "==", "!="};
            need(!statement_position && n.children.size() == 2 &&
                     std::find(std::begin(kOps), std::end(kOps), n.text) != std::end(kOps),
                 "binop");
            validate(n.children[0], false);
            validate(n.children[1], false);
            return;
        }
        case NodeKind::Read:
        case NodeKind::IntLit:
            need(!statement_position && n.children.empty(), "leaf");
            return;
        case NodeKind::Var:
            need(!statement_position && n.children.empty() && !n.text.empty(), "var");
            return;
    }
}

// ---------------------------------------------------------------------------
// Serialization

void append_literal(std::string& out, std::int64_t v) {
    if (v < 0) {
        out += "- ";
        out += std::to_string(0 - static_cast<std::uint64_t>(v));
    } else {
        out += std::to_string(v);
    }
}

void ast_text(const Node& n, std::string& out) {
    switch (n.kind) {
        case NodeKind::Var: out += n.text; return;
        case NodeKind::IntLit: out += "(int " + std::to_string(n.value) + ")"; return;
        case NodeKind::Read: out += "(read)"; return;
        default: break;
    }
    out += '(';
    switch (n.kind) {
        case NodeKind::Program: out += "program"; break;
        case NodeKind::Block: out += "block"; break;
        case NodeKind::Assign: out += "assign " + n.text; break;
        case NodeKind::If: out += "if"; break;
        case NodeKind::While: out += "while"; break;
        case NodeKind::Print: out += "print"; break;
        case NodeKind::BinOp: out += n.text; break;
        default: break;
    }
    for (const auto& c : n.children) {
        out += ' ';
        ast_text(c, out);
    }
    out += ')';
}

void expr_source(const Node& n, std::string& out) {
    switch (n.kind) {
        case NodeKind::IntLit: append_literal(out, n.value); return;
        case NodeKind::Var: out += n.text; return;
        case NodeKind::Read: out += "read ( )"; return;
        case NodeKind::BinOp: {
            for (int side = 0; side < 2; ++side) {
                const Node& c = n.children.at(static_cast<std::size_t>(side));
                const bool wrap = c.kind == NodeKind::BinOp;
                if (side == 1) out += " " + n.text + " ";
                if (wrap) out += "( ";
                expr_source(c, out);
                if (wrap) out += " )";
            }
            return;
        }
        default: throw std::logic_error("statement node in expression position");
    }
}

void indent_to(std::string& out, int depth) { out.append(static_cast<std::size_t>(depth) * 2, ' '); }

void block_source(const Node& b, int depth, std::string& out);

void stmt_source(const Node& n, int depth, std::string& out) {
    indent_to(out, depth);
    switch (n.kind) {
        case NodeKind::Assign:
            out += n.text + " = ";
            expr_source(n.children.at(0), out);
            out += " ;";
            break;
        case NodeKind::Print:
            out += "print ( ";
            expr_source(n.children.at(0), out);
            out += " ) ;";
            break;
        case NodeKind::If:
            out += "if ( ";
            expr_source(n.children.at(0), out);
            out += " ) {";
            block_source(n.children.at(1), depth + 1, out);
            out += '\n';
            indent_to(out, depth);
            out += '}';
            if (n.children.size() == 3) {
                out += " else {";
                block_source(n.children.at(2), depth + 1, out);
                out += '\n';
                indent_to(out, depth);
                out += '}';
            }
            break;
        case NodeKind::While:
            out += "while ( ";
            expr_source(n.children.at(0), out);
            out += " ) {";
            block_source(n.children.at(1), depth + 1, out);
            out += '\n';
            indent_to(out, depth);
            out += '}';
            break;
        default: throw std::logic_error("unexpected statement kind");
    }
}

void block_source(const Node& b, int depth, std::string& out) {
    for (const auto& s : b.children) {
        out += '\n';
        stmt_source(s, depth, out);
    }
}

// Whitespace-separated integer reader over the program input.
class InputCursor {
public:
    explicit InputCursor(std::string_view s) : s_(s) {}

    bool next(std::int64_t& v) {
        while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\n' || s_[i_] == '\r')) ++i_;
        if (i_ >= s_.size()) return false;
        std::size_t j = i_;
        while (j < s_.size() && !(s_[j] == ' ' || s_[j] == '\t' || s_[j] == '\n' || s_[j] == '\r')) ++j;
        const char* first = s_.data() + i_;
        const char* last = s_.data() + j;
        if (first != last && *first == '+') ++first;
        auto [p, ec] = std::from_chars(first, last, v);
        i_ = j;
        // A token that is not a complete in-range integer ends the input.
        if (ec != std::errc{} || p != last) {
            i_ = s_.size();
            return false;
        }
        return true;
    }

private:
    std::string_view s_;
    std::size_t i_ = 0;
};

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

}  // namespace

int count_branches(const Node& ast) {
    int n = (ast.kind == NodeKind::If || ast.kind == NodeKind::While) ? 2 : 0;
    for (const auto& c : ast.children) n += count_branches(c);
    return n;
}

Program make_program(std::string source, Node ast) {
    validate(ast, true);
    Program p;
    Compiler c;
    c.program(ast);
    p.source_ = std::move(source);
    p.ast_ = std::move(ast);
    p.branch_count_ = c.next_edge;
    p.code_ = std::move(c.code);
    p.slot_count_ = static_cast<int>(c.slots.size());
    return p;
}

Program parse(std::string_view source) {
    Parser parser(lex(source));
    Node ast = parser.program();
    return make_program(std::string(source), std::move(ast));
}

Program from_ast(const Node& ast) {
    if (ast.kind != NodeKind::Program) throw std::invalid_argument("root must be a program node");
    return make_program(serialize_source(ast), ast);
}

std::string serialize_ast(const Node& ast) {
    std::string out;
    ast_text(ast, out);
    return out;
}

std::string serialize_ast(const Program& p) { return serialize_ast(p.ast()); }

std::string serialize_source(const Node& ast) {
    std::string out;
    for (const auto& s : ast.children) {
        if (!out.empty()) out += '\n';
        stmt_source(s, 0, out);
    }
    return out;
}

ExecOutcome execute(const Program& p, std::string_view input, std::int64_t step_limit) {
    if (step_limit < 1) throw std::invalid_argument("step_limit must be >= 1");
    ExecOutcome r;
    const auto& code = p.code();
    std::vector<std::int64_t> slots(static_cast<std::size_t>(p.slot_count()), 0);
    std::vector<std::int64_t> stack;
    stack.reserve(16);
    std::vector<std::uint8_t> hit(static_cast<std::size_t>(p.branch_count()), 0);
    InputCursor in(input);
    bool printed = false;
    std::size_t pc = 0;

    auto pop = [&stack]() {
        const std::int64_t v = stack.back();
        stack.pop_back();
        return v;
    };
    auto tick = [&]() {
        if (r.steps >= step_limit) {
            r.status = Status::StepLimit;
            return false;
        }
        ++r.steps;
        return true;
    };

    bool running = true;
    while (running) {
        const Instr& ins = code[pc];
        switch (ins.op) {
            case Instr::Push: stack.push_back(ins.imm); ++pc; break;
            case Instr::Load: stack.push_back(slots[static_cast<std::size_t>(ins.a)]); ++pc; break;
            case Instr::Read: {
                std::int64_t v = 0;
                if (!in.next(v)) {
                    r.status = Status::InputExhausted;
                    running = false;
                    break;
                }
                stack.push_back(v);
                ++pc;
                break;
            }
            case Instr::Store:
                if (!tick()) {
                    running = false;
                    break;
                }
                slots[static_cast<std::size_t>(ins.a)] = pop();
                ++pc;
                break;
            case Instr::Print: {
                if (!tick()) {
                    running = false;
                    break;
                }
                if (printed) r.output += '\n';
                r.output += std::to_string(pop());
                printed = true;
                ++pc;
                break;
            }
            case Instr::Bin: {
                const std::int64_t b = pop();
                const std::int64_t a = pop();
                std::int64_t v = 0;
                switch (ins.bin) {
                    case '+': v = wrap_add(a, b); break;
                    case '-': v = wrap_sub(a, b); break;
                    case '*': v = wrap_mul(a, b); break;
                    case '/':
                    case '%':
                        if (b == 0) {
                            r.status = Status::DivByZero;
                            running = false;
                            break;
                        }
                        if (a == INT64_MIN && b == -1) {
                            v = ins.bin == '/' ? INT64_MIN : 0;
                        } else {
                            v = ins.bin == '/' ? a / b : a % b;
                        }
                        break;
                    case '<': v = a < b; break;
                    case '>': v = a > b; break;
                    case 'l': v = a <= b; break;
                    case 'g': v = a >= b; break;
                    case 'e': v = a == b; break;
                    case 'n': v = a != b; break;
                    default: throw std::logic_error("bad operator code");
                }
                if (!running) break;
                stack.push_back(v);
                ++pc;
                break;
            }
            case Instr::Branch: {
                if (!tick()) {
                    running = false;
                    break;
                }
                const bool taken = pop() != 0;
                hit[static_cast<std::size_t>(ins.a + (taken ? 0 : 1))] = 1;
                pc = taken ? pc + 1 : static_cast<std::size_t>(ins.imm);
                break;
            }
            case Instr::Jump: pc = static_cast<std::size_t>(ins.a); break;
            case Instr::Halt: running = false; break;
        }
    }
    for (std::size_t e = 0; e < hit.size(); ++e) {
        if (hit[e]) r.covered_edges.push_back(static_cast<int>(e));
    }
    return r;
}

}  // namespace dynapre::minilang
