// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0

#include "dynapre/fuzzer.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <set>
#include <stdexcept>

namespace dynapre::fuzz {

using minilang::ExecOutcome;
using minilang::Program;
using minilang::Status;

std::vector<std::int64_t> split_tokens(std::string_view input) {
    std::vector<std::int64_t> out;
    std::size_t i = 0;
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
    while (i < input.size()) {
        while (i < input.size() && is_space(input[i])) ++i;
        if (i >= input.size()) break;
        std::size_t j = i;
        while (j < input.size() && !is_space(input[j])) ++j;
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(input.data() + i, input.data() + j, v);
        if (ec != std::errc{} || p != input.data() + j) {
            throw std::invalid_argument("input token is not an integer: " +
                                        std::string(input.substr(i, j - i)));
        }
        out.push_back(v);
        i = j;
    }
    return out;
}

std::string join_tokens(const std::vector<std::int64_t>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(tokens[i]);
    }
    return out;
}

namespace {

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}

// Interesting values in the spirit of AFL's dictionaries of boundary ints.
constexpr std::array<std::int64_t, 12> kInteresting = {0, 1, -1, 2, 3, 7, 10, 16, 100, 255, 256, 1000};
constexpr std::array<std::int64_t, 4> kDeltas = {1, 2, 16, 256};

std::int64_t draw_value(Rng& rng) {
    switch (rng.below(4)) {
        case 0: return kInteresting[rng.below(kInteresting.size())];
        case 1: return rng.range(-1000, 1000);
        default: return rng.range(-10, 100);
    }
}

}  // namespace

std::string apply_mutation(std::string_view input, const Mutation& m) {
    auto toks = split_tokens(input);
    if (m.op == MutationOp::Append) {
        toks.push_back(m.value);
        return join_tokens(toks);
    }
    if (toks.empty()) return std::string();
    const std::size_t pos = m.position % toks.size();
    switch (m.op) {
        case MutationOp::Delete: toks.erase(toks.begin() + static_cast<std::ptrdiff_t>(pos)); break;
        case MutationOp::Replace: toks[pos] = m.value; break;
        case MutationOp::Duplicate:
            toks.insert(toks.begin() + static_cast<std::ptrdiff_t>(pos), toks[pos]);
            break;
        case MutationOp::Perturb: toks[pos] = wrap_add(toks[pos], m.value); break;
        case MutationOp::Negate:
            toks[pos] = static_cast<std::int64_t>(0 - static_cast<std::uint64_t>(toks[pos]));
            break;
        case MutationOp::Append: break;
    }
    return join_tokens(toks);
}

Mutation draw_mutation(std::string_view input, Rng& rng) {
    Mutation m;
    m.op = static_cast<MutationOp>(rng.below(kMutationOpCount));
    const auto n = split_tokens(input).size();
    m.position = n ? static_cast<std::size_t>(rng.below(n)) : 0;
    switch (m.op) {
        case MutationOp::Append:
        case MutationOp::Replace: m.value = draw_value(rng); break;
        case MutationOp::Perturb: {
            const std::int64_t d = kDeltas[rng.below(kDeltas.size())];
            m.value = rng.below(2) ? d : -d;
            break;
        }
        default: break;
    }
    return m;
}

std::string mutate_input(std::string_view input, Rng& rng) {
    return apply_mutation(input, draw_mutation(input, rng));
}

namespace {

struct Admitted {
    TestCase tc;
    std::vector<int> edges;
};

// Drops cases whose removal leaves the union of edges and statuses intact,
// scanning in admission order. Every case that survives is necessary.
std::vector<Admitted> reduce(std::vector<Admitted> cases) {
    auto union_size = [](const std::vector<Admitted>& cs, std::size_t skip) {
        std::set<int> edges;
        std::set<int> statuses;
        for (std::size_t i = 0; i < cs.size(); ++i) {
            if (i == skip) continue;
            edges.insert(cs[i].edges.begin(), cs[i].edges.end());
            statuses.insert(static_cast<int>(cs[i].tc.status));
        }
        return edges.size() + statuses.size();
    };
    std::size_t i = 0;
    while (i < cases.size()) {
        const auto full = union_size(cases, cases.size());
        if (union_size(cases, i) == full) {
            cases.erase(cases.begin() + static_cast<std::ptrdiff_t>(i));
        } else {
            ++i;
        }
    }
    return cases;
}

}  // namespace

const std::vector<std::string>& seed_inputs() {
    static const std::vector<std::string> seeds = {"", "0", "1 2 3"};
    return seeds;
}

TestSuite fuzz_program(const Program& p, int budget, std::uint64_t rng_seed,
                       const FuzzOptions& opts, SeedPool* pool_out) {
    if (budget < 1) throw std::invalid_argument("budget must be >= 1");
    Rng rng(rng_seed);
    SeedPool pool;
    pool.rng_seed = rng_seed;
    std::vector<std::uint8_t> global(static_cast<std::size_t>(p.branch_count()), 0);
    std::array<bool, 4> seen_status{};
    std::vector<Admitted> admitted;
    int execs = 0;

    auto run = [&](const std::string& input) {
        ExecOutcome out = minilang::execute(p, input, opts.step_limit);
        ++execs;
        bool novel = !seen_status[static_cast<std::size_t>(out.status)];
        for (int e : out.covered_edges) novel = novel || !global[static_cast<std::size_t>(e)];
        if (!novel) return;
        seen_status[static_cast<std::size_t>(out.status)] = true;
        for (int e : out.covered_edges) global[static_cast<std::size_t>(e)] = 1;
        pool.seeds.push_back(Seed{input, out.covered_edges});
        admitted.push_back(Admitted{TestCase{input, std::move(out.output), out.status},
                                    std::move(out.covered_edges)});
    };

    for (const auto& s : seed_inputs()) {
        if (execs >= budget) break;
        run(s);
        if (p.branch_count() == 0) break;
    }
    if (p.branch_count() > 0) {
        std::size_t cursor = 0;
        while (execs < budget) {
            std::string child = pool.seeds[cursor % pool.seeds.size()].input;
            ++cursor;
            // Stack 1, 2 or 4 operators (havoc style) so that inputs can
            // grow past lengths that add no coverage on their own.
            const int stack = 1 << rng.below(3);
            for (int i = 0; i < stack; ++i) child = mutate_input(child, rng);
            run(child);
        }
    }

    admitted = reduce(std::move(admitted));
    TestSuite suite;
    std::set<int> edges;
    for (auto& a : admitted) {
        edges.insert(a.edges.begin(), a.edges.end());
        suite.cases.push_back(std::move(a.tc));
    }
    suite.covered_edges.assign(edges.begin(), edges.end());
    if (pool_out) *pool_out = std::move(pool);
    return suite;
}

bool replay_verify(const Program& p, const TestSuite& suite, std::int64_t step_limit) {
    for (const auto& tc : suite.cases) {
        const auto out = minilang::execute(p, tc.input, step_limit);
        if (out.output != tc.output || out.status != tc.status) return false;
    }
    return true;
}

}  // namespace dynapre::fuzz
