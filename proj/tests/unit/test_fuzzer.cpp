// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <set>

#include "dynapre/fuzzer.hpp"
#include "json.hpp"
#include "unit/oracles.hpp"

using namespace dynapre;
using namespace dynapre::fuzz;

TEST_CASE("mutation operators", "[fuzzer]") {
    REQUIRE(apply_mutation("2 3", Mutation{MutationOp::Append, 0, 7}) == "2 3 7");
    REQUIRE(apply_mutation("", Mutation{MutationOp::Delete, 0, 0}).empty());
    REQUIRE(apply_mutation("5", Mutation{MutationOp::Perturb, 0, 1}) == "6");
    REQUIRE(apply_mutation("1 2 3", Mutation{MutationOp::Negate, 1, 0}) == "1 -2 3");
    REQUIRE(apply_mutation("1 2 3", Mutation{MutationOp::Duplicate, 0, 0}) == "1 1 2 3");
    REQUIRE(apply_mutation("1 2 3", Mutation{MutationOp::Replace, 2, 9}) == "1 2 9");
    REQUIRE(apply_mutation("1 2 3", Mutation{MutationOp::Delete, 1, 0}) == "1 3");
}

TEST_CASE("mutated inputs stay integer tokens", "[fuzzer]") {
    Rng rng(3);
    std::string s = "1 2 3";
    std::set<MutationOp> seen;
    for (int i = 0; i < 2000; ++i) {
        seen.insert(draw_mutation(s, rng).op);
        s = mutate_input(s, rng);
        if (s.size() > 60) s = "4";
        REQUIRE(join_tokens(split_tokens(s)) == s);
    }
    REQUIRE(seen.size() == kMutationOpCount);
}

TEST_CASE("two-way branch is fully covered", "[fuzzer]") {
    const auto p = minilang::parse("x = read(); if (x > 0) { print(1); } else { print(0); }");
    const auto suite = fuzz_program(p, 1000, 0);
    REQUIRE(suite.covered_edges == std::vector<int>{0, 1});
    REQUIRE(replay_verify(p, suite));
}

TEST_CASE("branch-free programs keep the first seed only", "[fuzzer]") {
    const auto p = minilang::parse("a = read();\nb = read();\nprint(a + b);");
    for (int budget : {1, 10, 5000}) REQUIRE(fuzz_program(p, budget, 9).cases.size() == 1);
}

TEST_CASE("fuzzing is deterministic and suites are minimal", "[fuzzer]") {
    for (const auto& sp : oracle::load_fuzz_suite(DYNAPRE_TEST_DATA "/fuzz_suite")) {
        const auto p = minilang::parse(sp.source);
        SeedPool pool;
        const auto a = fuzz_program(p, 2000, 11, {}, &pool);
        const auto b = fuzz_program(p, 2000, 11);
        REQUIRE(a == b);
        REQUIRE(replay_verify(p, a));

        // Union of covered edges and statuses must shrink when any case is removed.
        auto signature = [&](const std::vector<TestCase>& cases, std::size_t skip) {
            std::set<int> sig;
            for (std::size_t i = 0; i < cases.size(); ++i) {
                if (i == skip) continue;
                const auto o = minilang::execute(p, cases[i].input);
                for (int e : o.covered_edges) sig.insert(e);
                sig.insert(-1 - static_cast<int>(o.status));
            }
            return sig;
        };
        const auto full = signature(a.cases, a.cases.size());
        for (std::size_t i = 0; i < a.cases.size(); ++i) REQUIRE(signature(a.cases, i).size() < full.size());

        std::set<std::string> inputs;
        for (const auto& c : a.cases) REQUIRE(inputs.insert(c.input).second);

        // Every pool entry was novel (edge or status) when admitted.
        std::set<int> seen_edges;
        std::set<minilang::Status> seen_status;
        for (const auto& s : pool.seeds) {
            const auto st = minilang::execute(p, s.input).status;
            const bool new_edge = std::any_of(s.covered_edges.begin(), s.covered_edges.end(),
                                              [&](int e) { return !seen_edges.count(e); });
            REQUIRE((new_edge || !seen_status.count(st)));
            seen_edges.insert(s.covered_edges.begin(), s.covered_edges.end());
            seen_status.insert(st);
        }
    }
}

TEST_CASE("replay detects tampering", "[fuzzer]") {
    const auto p = minilang::parse("x = read(); if (x > 0) { print(x); } else { print(0); }");
    auto suite = fuzz_program(p, 500, 1);
    REQUIRE(replay_verify(p, TestSuite{}));
    for (auto& c : suite.cases) {
        if (!c.output.empty()) {
            c.output[0] = c.output[0] == '1' ? '2' : '1';
            break;
        }
    }
    REQUIRE_FALSE(replay_verify(p, suite));
}

TEST_CASE("reachability table matches enumeration", "[fuzzer]") {
    std::ifstream f(DYNAPRE_TEST_DATA "/fuzz_suite/reachability.json");
    const auto j = nlohmann::json::parse(f);
    const auto progs = oracle::load_fuzz_suite(DYNAPRE_TEST_DATA "/fuzz_suite");
    REQUIRE(progs.size() == 10);
    for (const auto& sp : progs) {
        const auto p = minilang::parse(sp.source);
        REQUIRE(p.branch_count() >= 2);
        REQUIRE(p.branch_count() <= 6);
        const auto reach = oracle::reachable_edges(p.ast(), oracle::enumeration_domain(), oracle::kEnumerationMaxLen);
        REQUIRE(j.at("programs").at(sp.name).at("reachable_edges").get<std::vector<int>>() ==
                std::vector<int>(reach.begin(), reach.end()));
    }
}
