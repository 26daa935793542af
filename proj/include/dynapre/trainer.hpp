// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Alternating-objective pre-training: deterministic batching, Adam, EMA
// teacher, negative queue, checkpoints with exact resume.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynapre/corpus.hpp"
#include "dynapre/model.hpp"
#include "dynapre/objectives.hpp"
#include "dynapre/tokenizer.hpp"

namespace dynapre::train {

enum class SimSpan { CodeOnly, CodeAndTests };
enum class DidPositive { Holistic, Execution };
enum class Representation { Source, Ast };
enum class Schedule { RoundRobin, Sum };

struct TrainConfig {
    int steps = 2000;
    int batch_size = 32;
    double lr = 5e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.0;
    double temperature = 0.07;
    double momentum = 0.99;
    int queue_capacity = 1024;
    double p_match = 0.5;
    double mask_rate = obj::kDefaultMaskRate;
    bool use_sim = true;
    bool use_dim = true;
    bool use_did = true;
    SimSpan sim_span = SimSpan::CodeOnly;
    DidPositive did_positive = DidPositive::Holistic;
    bool contrast_aug = false;
    Representation representation = Representation::Source;
    model::Pooling pooling = model::Pooling::Mean;
    std::uint64_t rng_seed = 0;
    Schedule schedule = Schedule::RoundRobin;
    // encoder and input shape
    int dim = 64;
    int layers = 4;
    int heads = 4;
    int ffn_mult = 4;
    int max_len = tok::kDefaultMaxLen;
    int code_budget = tok::kDefaultCodeBudget;
    double dropout = 0.1;
    int max_cases = corpus::kDefaultMaxCases;

    void validate() const;  // throws std::invalid_argument
    bool operator==(const TrainConfig&) const = default;
};

// Full-scale hyperparameters (t = 0.07, m = 0.999, lr = 2e-5); everything else at
// desk defaults.
TrainConfig paper_config();

std::string to_json(const TrainConfig& c);  // flat object, sorted keys
// Rejects unknown keys; missing keys keep their defaults.
TrainConfig config_from_json(const std::string& text);

model::ModelConfig model_config(const TrainConfig& c, int vocab_size);
tok::PrefixMode prefix_mode(Representation r);
std::string_view representation_name(Representation r);

class NonFiniteLoss : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class VersionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class HashError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Everything needed to continue training bit-exactly.
struct Checkpoint {
    TrainConfig config;
    tok::Vocab vocab;
    model::ModelState<float> model;
    model::ParamVec<float> adam_m;
    model::ParamVec<float> adam_v;
    obj::NegativeQueue queue{1, 1};
    std::int64_t step = 0;
};

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// Code text fed to the encoder for a record under a representation.
const std::string& code_text(const corpus::CorpusRecord& r, Representation rep);

/// The vocabulary is built from the code, AST and prompt texts of `records`.
tok::Vocab build_training_vocab(const std::vector<corpus::CorpusRecord>& records, int max_cases);

struct StepMetrics {
    std::int64_t step = 0;
    std::string loss_name;  // "sim", "dim", "did" or "sum"
    double loss = 0.0;
};

using StepCallback = std::function<void(const StepMetrics&)>;

/// Holds the pre-assembled training inputs and runs steps.
class Trainer {
public:
    Trainer(std::vector<corpus::CorpusRecord> train_records, const TrainConfig& config);
    // Continue from a checkpoint (config and vocab come from it).
    Trainer(std::vector<corpus::CorpusRecord> train_records, Checkpoint resume);

    const Checkpoint& state() const { return ck_; }
    Checkpoint& state() { return ck_; }

    // Objective names active at a step (one for round-robin).
    std::vector<std::string> objectives_at(std::int64_t step) const;

    StepMetrics step();  // runs step number state().step, then increments it
    void run(std::int64_t until_step, const StepCallback& cb = {});

    // Indices into the train records used at a given step.
    std::vector<std::size_t> batch_indices(std::int64_t step) const;

private:
    void prepare();
    double run_objective(const std::string& name, const std::vector<std::size_t>& batch, std::int64_t step,
                         model::ParamVec<float>& grad, std::vector<model::Vec<float>>* teacher_out);

    static Checkpoint fresh(const std::vector<corpus::CorpusRecord>& records, const TrainConfig& config);

    std::vector<corpus::CorpusRecord> records_;
    Checkpoint ck_;
    model::Network<float> net_;
    std::vector<tok::AssembledInput> code_in_;
    std::vector<tok::AssembledInput> holistic_in_;
    std::vector<tok::AssembledInput> tests_in_;
    std::vector<std::string> prompts_;
    int threads_ = 1;
};

/// Full run from initialization: config.steps steps.
Checkpoint train(const std::vector<corpus::CorpusRecord>& train_records, const TrainConfig& config,
                 const StepCallback& cb = {});

// DYNAPRE_THREADS, default 1.
int thread_count();

}  // namespace dynapre::train
