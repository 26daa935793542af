// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "dynapre/minilang.hpp"
#include "dynapre/rng.hpp"
#include "unit/oracles.hpp"

using namespace dynapre::minilang;

namespace {

const char* kSum = "a = read();\nb = read();\nprint(a + b);";

std::string random_expr(dynapre::Rng& rng, int depth, const std::vector<std::string>& vars) {
    const auto pick = rng.below(depth > 2 ? 2 : 4);
    if (pick == 0) return std::to_string(rng.range(-5, 9));
    if (pick == 1) return vars[rng.below(vars.size())];
    static const char* ops[] = {"+", "-", "*", "/", "%", "<", ">", "<=", ">=", "==", "!="};
    return "(" + random_expr(rng, depth + 1, vars) + " " + ops[rng.below(11)] + " " + random_expr(rng, depth + 1, vars) + ")";
}

std::string random_block(dynapre::Rng& rng, int depth, const std::vector<std::string>& vars) {
    std::string s;
    const auto n = 1 + rng.below(3);
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto kind = rng.below(depth > 1 ? 3 : 5);
        const auto& v = vars[rng.below(vars.size())];
        if (kind == 0) s += v + " = read();\n";
        else if (kind == 1) s += v + " = " + random_expr(rng, 0, vars) + ";\n";
        else if (kind == 2) s += "print(" + random_expr(rng, 0, vars) + ");\n";
        else if (kind == 3) s += "if (" + random_expr(rng, 0, vars) + ") {\n" + random_block(rng, depth + 1, vars) + "} else {\n" + random_block(rng, depth + 1, vars) + "}\n";
        else s += "while (" + random_expr(rng, 0, vars) + ") {\n" + random_block(rng, depth + 1, vars) + "}\n";
    }
    return s;
}

}  // namespace

TEST_CASE("parse builds the expected tree", "[minilang]") {
    const auto p = parse("x = 1 ;");
    REQUIRE(p.branch_count() == 0);
    REQUIRE(serialize_ast(p) == "(program (assign x (int 1)))");
    REQUIRE(serialize_ast(parse("")) == "(program)");
    REQUIRE(serialize_ast(parse("print(read());")) == "(program (print (read)))");
    REQUIRE(parse(kSum).branch_count() == 0);
}

TEST_CASE("malformed input reports a position", "[minilang]") {
    REQUIRE_THROWS_AS(parse("if (x"), ParseError);
    try {
        parse("x = 1;\ny = ;");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        REQUIRE(e.line() == 2);
        REQUIRE(e.column() >= 1);
    }
    REQUIRE_THROWS_AS(parse("x = 1"), ParseError);
    REQUIRE_THROWS_AS(parse("print(1;"), ParseError);
    REQUIRE_THROWS_AS(parse("x = 99999999999999999999;"), ParseError);
}

TEST_CASE("basic executions", "[minilang]") {
    const auto sum = parse(kSum);
    auto r = execute(sum, "2 3");
    REQUIRE(r.status == Status::Ok);
    REQUIRE(r.output == "5");
    REQUIRE(execute(parse("while (1 == 1) { x = 1 ; }"), "", 100000).status == Status::StepLimit);
    REQUIRE(execute(parse("x = read() ;"), "").status == Status::InputExhausted);
    REQUIRE(execute(parse("x = 1 / 0;"), "").status == Status::DivByZero);
    REQUIRE(execute(parse("x = 1 % 0;"), "").status == Status::DivByZero);
}

TEST_CASE("arithmetic wraps at 64 bits", "[minilang]") {
    REQUIRE(execute(parse("print(9223372036854775807 + 1);"), "").output == "-9223372036854775808");
    REQUIRE(execute(parse("x = read(); print(x - 1);"), "-9223372036854775808").output == "9223372036854775807");
    REQUIRE(execute(parse("print(7 / (0 - 2)); print(7 % (0 - 2));"), "").output == "-3\n1");
}

TEST_CASE("branch count and edges per test", "[minilang]") {
    const auto p = parse("x = read(); if (x > 0) { print(1); } else { print(0); } while (x > 0) { x = x - 1; }");
    REQUIRE(p.branch_count() == 4);
    REQUIRE(execute(p, "0").covered_edges == std::vector<int>{1, 3});
    REQUIRE(execute(p, "2").covered_edges == std::vector<int>{0, 2, 3});
}

TEST_CASE("random programs agree with the tree-walking oracle", "[minilang]") {
    dynapre::Rng rng(7);
    const std::vector<std::string> vars = {"a", "b", "c"};
    int compared = 0;
    while (compared < 1000) {
        const auto src = random_block(rng, 0, vars);
        const auto p = parse(src);
        REQUIRE(parse(serialize_source(p.ast())).ast() == p.ast());
        REQUIRE(count_branches(p.ast()) == p.branch_count());
        std::string input;
        for (int k = 0; k < 4; ++k) input += std::to_string(rng.range(-4, 12)) + " ";
        const auto got = execute(p, input, 5000);
        REQUIRE(got == execute(p, input, 5000));
        const auto want = oracle::run(p.ast(), input, 5000);
        INFO(src << "\ninput: " << input);
        REQUIRE(std::string(status_name(got.status)) == want.status);
        REQUIRE(got.output == want.output);
        REQUIRE(got.steps == want.steps);
        REQUIRE(std::set<int>(got.covered_edges.begin(), got.covered_edges.end()) == want.edges);
        for (int e : got.covered_edges) REQUIRE((e >= 0 && e < p.branch_count()));
        if (got.status == Status::Ok) REQUIRE(got.steps <= 5000);
        ++compared;
    }
}

TEST_CASE("status names round trip", "[minilang]") {
    for (auto s : {Status::Ok, Status::StepLimit, Status::InputExhausted, Status::DivByZero}) {
        REQUIRE(status_from_name(status_name(s)) == s);
    }
    REQUIRE_THROWS_AS(status_from_name("CRASH"), std::invalid_argument);
}
