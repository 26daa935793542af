// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Coverage-guided mutational input generation for MiniLang programs.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dynapre/minilang.hpp"
#include "dynapre/rng.hpp"

namespace dynapre::fuzz {

struct TestCase {
    std::string input;
    std::string output;
    minilang::Status status = minilang::Status::Ok;

    bool operator==(const TestCase&) const = default;
};

struct TestSuite {
    std::vector<TestCase> cases;
    std::vector<int> covered_edges;  // sorted union over cases
    std::string program_id;

    bool operator==(const TestSuite&) const = default;
};

struct Seed {
    std::string input;
    std::vector<int> covered_edges;
};

struct SeedPool {
    std::vector<Seed> seeds;
    std::uint64_t rng_seed = 0;
};

enum class MutationOp { Append, Delete, Replace, Duplicate, Perturb, Negate };
inline constexpr int kMutationOpCount = 6;

/// A fully-resolved mutation. `position` is reduced modulo the token count;
/// `value` is the inserted integer (Append/Replace) or the signed delta
/// (Perturb).
struct Mutation {
    MutationOp op = MutationOp::Append;
    std::size_t position = 0;
    std::int64_t value = 0;
};

std::vector<std::int64_t> split_tokens(std::string_view input);
std::string join_tokens(const std::vector<std::int64_t>& tokens);

std::string apply_mutation(std::string_view input, const Mutation& m);
Mutation draw_mutation(std::string_view input, Rng& rng);
std::string mutate_input(std::string_view input, Rng& rng);

struct FuzzOptions {
    std::int64_t step_limit = minilang::kDefaultStepLimit;
};

inline constexpr int kDefaultBudget = 5000;

// Initial inputs, in execution order.
const std::vector<std::string>& seed_inputs();

/// Runs at most `budget` executions starting from the seeds {"", "0", "1 2 3"}.
/// An execution is admitted iff it covers a previously uncovered edge or
/// produces a status not seen before. The returned suite is then reduced so
/// that every retained case is needed for the union of edges and statuses.
TestSuite fuzz_program(const minilang::Program& p, int budget, std::uint64_t rng_seed,
                       const FuzzOptions& opts = {}, SeedPool* pool_out = nullptr);

bool replay_verify(const minilang::Program& p, const TestSuite& suite,
                   std::int64_t step_limit = minilang::kDefaultStepLimit);

}  // namespace dynapre::fuzz
