// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Regenerates tests/data/fuzz_suite/reachability.json by exhaustive input
// enumeration. The unit tests recompute it and compare.

#include <iostream>

#include "dynapre/hash.hpp"
#include "dynapre/minilang.hpp"
#include "json.hpp"
#include "unit/oracles.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: gen_reachability <fuzz_suite dir>\n";
        return 1;
    }
    const std::filesystem::path dir = argv[1];
    nlohmann::json table = nlohmann::json::object();
    for (const auto& p : oracle::load_fuzz_suite(dir)) {
        const auto prog = dynapre::minilang::parse(p.source);
        const auto reach = oracle::reachable_edges(prog.ast(), oracle::enumeration_domain(), oracle::kEnumerationMaxLen);
        table[p.name] = {{"branch_count", prog.branch_count()}, {"reachable_edges", std::vector<int>(reach.begin(), reach.end())}};
    }
    nlohmann::json j{{"domain", oracle::enumeration_domain()}, {"max_len", oracle::kEnumerationMaxLen}, {"programs", table}};
    dynapre::write_file_atomic(dir / "reachability.json", j.dump(2) + "\n");
    return 0;
}
