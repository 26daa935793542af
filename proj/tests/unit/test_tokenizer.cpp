// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "dynapre/corpus.hpp"
#include "dynapre/tokenizer.hpp"

using namespace dynapre;
using namespace dynapre::tok;

namespace {

std::vector<std::string> names(const std::vector<int>& ids, const Vocab& v) {
    std::vector<std::string> out;
    for (int i : ids) out.push_back(v.token(i));
    return out;
}

}  // namespace

TEST_CASE("special ids are fixed", "[tokenizer]") {
    const Vocab v;
    REQUIRE(v.size() == kNumSpecial);
    REQUIRE(v.id("<BOS>") == 0);
    REQUIRE(v.id("<EOS>") == 1);
    REQUIRE(v.id("<SEP>") == 2);
    REQUIRE(v.id("<MASK>") == 3);
    REQUIRE(v.id("<PAD>") == 4);
    REQUIRE(v.id("<UNK>") == 5);
    REQUIRE(v.id("<ENCODER-ONLY>") == 6);
}

TEST_CASE("splitting rules", "[tokenizer]") {
    REQUIRE(split("x = 1 ;") == std::vector<std::string>{"x", "=", "1", ";"});
    REQUIRE(split("if(a<=b){c=a!=b;}") ==
            std::vector<std::string>{"if", "(", "a", "<=", "b", ")", "{", "c", "=", "a", "!=", "b", ";", "}"});
    REQUIRE(split("print(12345)") == std::vector<std::string>{"print", "(", std::string(kNumToken), ")"});
    REQUIRE(split("999 1000 -5") == std::vector<std::string>{"999", std::string(kNumToken), "-", "5"});
    REQUIRE(split("a<SEP>b") == std::vector<std::string>{"a", "<SEP>", "b"});
    REQUIRE(split("x<y") == std::vector<std::string>{"x", "<", "y"});
}

TEST_CASE("vocab build", "[tokenizer]") {
    const auto v = Vocab::build({"x = 1 ;"});
    for (const auto* t : {"x", "=", "1", ";"}) REQUIRE(v.id(t) >= kNumSpecial);
    REQUIRE(v.size() == kNumSpecial + 4);
    // Frequency first, then lexicographic.
    const auto w = Vocab::build({"b b a c c c"});
    REQUIRE(w.token(kNumSpecial) == "c");
    REQUIRE(w.token(kNumSpecial + 1) == "b");
    REQUIRE(w.token(kNumSpecial + 2) == "a");
    REQUIRE(Vocab::build({"x = 1 ;"}) == v);
    REQUIRE(v.id("zzz") == kUnk);
    REQUIRE(Vocab::from_json(v.to_json()) == v);
    REQUIRE(Vocab::from_json(v.to_json()).hash() == v.hash());
}

TEST_CASE("encode and decode", "[tokenizer]") {
    const auto v = Vocab::build({"x = 1 ;"});
    REQUIRE(decode(v.encode("x   =  1 ;"), v) == "x = 1 ;");
    REQUIRE(decode(v.encode("x = y ;"), v) == "x = <UNK> ;");
    REQUIRE_THROWS_AS(decode({99999}, v), UnknownId);
    REQUIRE_THROWS_AS(v.token(-1), UnknownId);
}

TEST_CASE("assembly layouts", "[tokenizer]") {
    const auto v = Vocab::build({"x = 1 ;"});
    const auto a = assemble(v, "x = 1 ;", "", PrefixMode::BertStyle, 16, 8);
    REQUIRE(names(a.ids, v) == std::vector<std::string>{"<BOS>", "x", "=", "1", ";", "<SEP>", "<EOS>"});
    REQUIRE(a.code_span == std::pair<int, int>{1, 5});
    const auto u = assemble(v, "x = 1 ;", "", PrefixMode::UnixStyle, 16, 8);
    REQUIRE(names(u.ids, v) ==
            std::vector<std::string>{"<BOS>", "<ENCODER-ONLY>", "<SEP>", "x", "=", "1", ";", "<SEP>", "<EOS>"});
    REQUIRE_THROWS_AS(assemble(v, "   ", "", PrefixMode::BertStyle), AssemblyError);
    REQUIRE_THROWS_AS(assemble(v, "x", "", PrefixMode::BertStyle, 20, 16), std::invalid_argument);
}

TEST_CASE("budgets and maskable positions", "[tokenizer]") {
    std::string code, prompt;
    for (int i = 0; i < 500; ++i) code += "x = 1 ; ";
    for (int i = 0; i < 300; ++i) prompt += "Input is: 2 ; Output is: 3 <SEP> ";
    const auto v = Vocab::build({code, prompt});
    const auto a = assemble(v, code, prompt, PrefixMode::BertStyle, 256, 160);
    REQUIRE(a.code_span.second - a.code_span.first == 160);
    REQUIRE(a.length() == 256);
    REQUIRE(a.ids.back() == kEos);
    REQUIRE(a.code_span.second <= a.testcase_span.first);
    for (int i = 0; i < a.length(); ++i) {
        const bool in_span = (i >= a.code_span.first && i < a.code_span.second) ||
                             (i >= a.testcase_span.first && i < a.testcase_span.second);
        REQUIRE(static_cast<bool>(a.maskable[static_cast<std::size_t>(i)]) ==
                (in_span && !is_special(a.ids[static_cast<std::size_t>(i)])));
    }
}

TEST_CASE("round trip over generated programs", "[tokenizer]") {
    const auto recs = corpus::generate_corpus(12, 2, 0, 1, corpus::GenerateOptions{200});
    std::vector<std::string> texts;
    for (const auto& r : recs) texts.push_back(r.source);
    const auto v = Vocab::build(texts);
    for (const auto& r : recs) {
        std::string collapsed;
        for (const auto& t : split(r.source)) collapsed += (collapsed.empty() ? "" : " ") + t;
        REQUIRE(decode(v.encode(r.source), v) == collapsed);
    }
}
