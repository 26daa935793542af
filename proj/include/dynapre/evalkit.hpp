// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Frozen-embedding evaluation (code search mAP, clone mAP@R, defect probe)
// and the ablation runner.

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynapre/corpus.hpp"
#include "dynapre/trainer.hpp"

namespace dynapre::eval {

struct EmbeddingSet {
    std::vector<std::string> ids;
    std::vector<std::string> problem_ids;
    std::vector<bool> is_defective;
    Eigen::MatrixXd vectors;  // n x D, unit rows

    std::size_t size() const { return ids.size(); }
    EmbeddingSet subset(const std::vector<std::size_t>& rows) const;
};

/// Builds a set from raw vectors, normalizing rows.
EmbeddingSet make_embedding_set(std::vector<std::string> ids, std::vector<std::string> problem_ids,
                                std::vector<bool> is_defective, const Eigen::MatrixXd& raw);

/// Student pooled features of code only (suites are never read).
EmbeddingSet embed_corpus(const train::Checkpoint& ck, const std::vector<corpus::CorpusRecord>& records,
                          train::Representation representation);

void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);
EmbeddingSet read_embeddings(const std::filesystem::path& path);

struct RankingResult {
    std::vector<double> ap;  // per query, in set order
    double map = 0.0;
    std::optional<int> r;
};

/// Every sample queries all others ranked by cosine (ties by id). Relevant:
/// same problem and both non-defective. Zero-relevant queries score 0.
/// With truncate_r, AP over the top R is divided by min(R, #relevant).
RankingResult mean_ap(const EmbeddingSet& set, std::optional<int> truncate_r = std::nullopt);

/// R = min(smallest per-problem count - 1, 50) over non-defective samples.
int clone_r(const EmbeddingSet& set);

class DegenerateLabels : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ProbeOptions {
    double lr = 0.1;
    int iterations = 500;
    double l2 = 1e-4;
    bool standardize = true;  // z-score features with train statistics
};

struct ProbeResult {
    double accuracy = 0.0;
    double majority_baseline = 0.0;  // majority-class fraction of the test set
};

ProbeResult linear_probe_defect(const EmbeddingSet& train_set, const EmbeddingSet& test_set,
                                const ProbeOptions& opts = {});

// --- Ablations --------------------------------------------------------------

const std::vector<std::string>& ablation_modes();
train::TrainConfig apply_mode(train::TrainConfig base, const std::string& mode);

struct SeedMetrics {
    std::uint64_t seed = 0;
    double code_search_map = 0.0;
    double clone_map_at_r = 0.0;
    double defect_acc = 0.0;
};

struct ModeReport {
    std::string mode;
    double code_search_map = 0.0;
    double clone_map_at_r = 0.0;
    double defect_acc = 0.0;
    std::vector<SeedMetrics> per_seed;
};

struct AblationReport {
    std::vector<ModeReport> modes;
    std::vector<std::uint64_t> seeds;
    double majority_baseline = 0.0;
    int clone_r = 0;
    train::TrainConfig base_config;

    const ModeReport& at(const std::string& mode) const;
    std::string to_json() const;
    std::string to_text() const;
};

using ProgressFn = std::function<void(const std::string& mode, std::uint64_t seed, const SeedMetrics&)>;

/// Trains one model per (mode, seed); the corpus and split are shared.
AblationReport ablation_run(const std::vector<corpus::CorpusRecord>& records, const corpus::SplitSpec& split,
                            const train::TrainConfig& base_config, const std::vector<std::string>& modes,
                            const std::vector<std::uint64_t>& seeds, const ProgressFn& progress = {});

/// Metrics for one trained checkpoint.
SeedMetrics evaluate_checkpoint(const train::Checkpoint& ck, const std::vector<corpus::CorpusRecord>& train_records,
                                const std::vector<corpus::CorpusRecord>& eval_records, double* majority = nullptr,
                                int* r_used = nullptr);

}  // namespace dynapre::eval
