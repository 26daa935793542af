// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0
//
// MiniLang: a deterministic integer toy language with branch-coverage
// instrumentation. Grammar is documented in docs/minilang.md.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dynapre::minilang {

enum class NodeKind { Program, Block, Assign, If, While, Read, Print, BinOp, Var, IntLit };

/// One AST node. `text` holds the operator symbol (BinOp) or identifier
/// (Assign target, Var); `value` holds the literal of an IntLit.
struct Node {
    NodeKind kind = NodeKind::Program;
    std::string text;
    std::int64_t value = 0;
    std::vector<Node> children;

    bool operator==(const Node&) const = default;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, int line, int column);
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

enum class Status { Ok, StepLimit, InputExhausted, DivByZero };

std::string_view status_name(Status s);
// Throws std::invalid_argument on an unknown name.
Status status_from_name(std::string_view name);

struct ExecOutcome {
    Status status = Status::Ok;
    std::string output;               // printed integers joined by '\n'
    std::int64_t steps = 0;
    std::vector<int> covered_edges;   // sorted, unique

    bool operator==(const ExecOutcome&) const = default;
};

inline constexpr std::int64_t kDefaultStepLimit = 100000;

/// Flat instruction form produced at parse time; execution never touches
/// the tree or looks up names.
struct Instr {
    enum Op : std::uint8_t {
        Push, Load, Store, Read, Print, Bin, Branch, Jump, Halt
    };
    Op op = Halt;
    char bin = 0;          // operator code for Bin (see minilang.cpp)
    std::int32_t a = 0;    // slot, jump target, or branch edge base
    std::int64_t imm = 0;  // literal for Push; false-target for Branch
};

/// An immutable parsed program.
class Program {
public:
    const std::string& source() const { return source_; }
    const Node& ast() const { return ast_; }
    // 2 x (number of if tests + number of while tests).
    int branch_count() const { return branch_count_; }
    const std::vector<Instr>& code() const { return code_; }
    int slot_count() const { return slot_count_; }

private:
    friend Program make_program(std::string source, Node ast);
    std::string source_;
    Node ast_;
    int branch_count_ = 0;
    std::vector<Instr> code_;
    int slot_count_ = 0;
};

Program parse(std::string_view source);

// Builds a Program from an already-constructed AST (the source text is
// regenerated with serialize_source).
Program from_ast(const Node& ast);

/// Pre-order parenthesized rendering, e.g. "(program (assign x (int 1)))".
std::string serialize_ast(const Node& ast);
std::string serialize_ast(const Program& p);

/// Canonical source text. Every lexical token is separated by whitespace so
/// that whitespace-level tokenization recovers it exactly.
std::string serialize_source(const Node& ast);

ExecOutcome execute(const Program& p, std::string_view input,
                    std::int64_t step_limit = kDefaultStepLimit);

int count_branches(const Node& ast);

}  // namespace dynapre::minilang
