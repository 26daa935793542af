// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic multi-variant program corpus: generation, test-case prompts,
// JSONL persistence and problem-level splits.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynapre/fuzzer.hpp"
#include "dynapre/minilang.hpp"

namespace dynapre::corpus {

enum class VariantKind {
    Base,
    Renamed,
    LoopRestructured,
    Algebraic,
    DeadCode,
    MutantOffByOne,
    MutantOpSwap
};

std::string_view variant_kind_name(VariantKind k);
VariantKind variant_kind_from_name(std::string_view name);
inline bool is_mutant(VariantKind k) {
    return k == VariantKind::MutantOffByOne || k == VariantKind::MutantOpSwap;
}

struct CorpusRecord {
    std::string sample_id;
    std::string problem_id;
    VariantKind variant_kind = VariantKind::Base;
    bool is_defective = false;
    std::string source;
    std::string ast_text;
    fuzz::TestSuite suite;

    bool operator==(const CorpusRecord&) const = default;
};

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& msg, std::size_t line);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// --- Problem templates ------------------------------------------------------

/// The template library cycled by generate_corpus.
const std::vector<std::string>& template_names();

/// Source implementations of one template instance. Index 0 is the base
/// implementation; the rest are structurally different loop forms with the
/// same behavior. `constant` parameterizes the problem (offset, count, base,
/// scale, depending on the template).
std::vector<std::string> template_sources(const std::string& name, std::int64_t constant);

/// Candidate constants for a template, in preference order; the first entry
/// is the canonical instance (e.g. plain a + b for "sum").
std::vector<std::int64_t> template_constants(const std::string& name);

// --- Variant transforms (exposed for tests) ---------------------------------

minilang::Node rename_variables(const minilang::Node& ast, Rng& rng);
minilang::Node algebraic_rewrite(const minilang::Node& ast, Rng& rng);
minilang::Node insert_dead_code(const minilang::Node& ast, Rng& rng);
// Returns nullopt when the AST offers no site for the requested mutation.
std::optional<minilang::Node> mutate_program(const minilang::Node& ast, VariantKind kind, Rng& rng);

// --- Generation -------------------------------------------------------------

struct GenerateOptions {
    int fuzz_budget = fuzz::kDefaultBudget;
    std::int64_t step_limit = minilang::kDefaultStepLimit;
};

/// Inputs a mutant must disagree with its base on: both suites' inputs plus
/// the fuzzer seed inputs, deduplicated in that order.
std::vector<std::string> discrimination_inputs(const fuzz::TestSuite& base, const fuzz::TestSuite& mutant);

struct GenerateStats {
    int dropped_mutants = 0;
};

std::vector<CorpusRecord> generate_corpus(int n_problems, int variants_per_problem,
                                          int mutants_per_problem, std::uint64_t rng_seed,
                                          const GenerateOptions& opts = {},
                                          GenerateStats* stats = nullptr);

// Seed used for every fuzz_program call of a corpus generated with rng_seed.
std::uint64_t corpus_fuzz_seed(std::uint64_t rng_seed);

// Re-fuzzes every record in place (CLI `fuzz`).
void refuzz_corpus(std::vector<CorpusRecord>& records, int budget, std::uint64_t rng_seed,
                   std::int64_t step_limit = minilang::kDefaultStepLimit);

// --- Prompts ----------------------------------------------------------------

inline constexpr int kDefaultMaxCases = 4;

/// "Input is: {input} ; Output is: {output}" per case, joined by "<SEP>".
std::string render_testcase_prompt(const fuzz::TestSuite& suite, int max_cases = kDefaultMaxCases);

// --- Persistence ------------------------------------------------------------

std::string record_to_json_line(const CorpusRecord& r);
CorpusRecord record_from_json_line(const std::string& line, std::size_t line_no);

void write_corpus(const std::vector<CorpusRecord>& records, const std::filesystem::path& path);
std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path);

// --- Splits -----------------------------------------------------------------

struct SplitSpec {
    std::vector<std::string> train_problem_ids;
    std::vector<std::string> eval_problem_ids;
    std::uint64_t rng_seed = 0;
    bool degenerate = false;  // one side is empty

    bool operator==(const SplitSpec&) const = default;
};

SplitSpec split_by_problem(const std::vector<CorpusRecord>& records, double eval_fraction,
                           std::uint64_t rng_seed);

void write_split(const SplitSpec& s, const std::filesystem::path& path);
SplitSpec read_split(const std::filesystem::path& path);

std::vector<CorpusRecord> select_problems(const std::vector<CorpusRecord>& records,
                                          const std::vector<std::string>& problem_ids);

}  // namespace dynapre::corpus
