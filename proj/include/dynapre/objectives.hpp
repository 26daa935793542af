// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Training objectives: masked modeling (SIM), code/test-case matching (DIM)
// and contrastive distillation from the EMA teacher (DID), with the mask
// planner, matching-example sampler and negative queue they rely on.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dynapre/corpus.hpp"
#include "dynapre/model.hpp"
#include "dynapre/rng.hpp"
#include "dynapre/tokenizer.hpp"

namespace dynapre::obj {

class NoMaskable : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class MaskAction { Mask, Random, Keep };

struct MaskPlan {
    std::vector<int> positions;       // ascending
    std::vector<MaskAction> actions;  // parallel to positions
    std::vector<int> replacement;     // id written at each position
};

inline constexpr double kDefaultMaskRate = 0.15;

/// Selects k = max(1, round(rate * maskable)) maskable positions uniformly
/// without replacement; the first floor(0.8k) (in draw order) become <MASK>,
/// the next floor(0.1k) random non-special ids, the rest are kept.
MaskPlan make_mask_plan(const tok::AssembledInput& input, int vocab_size, Rng& rng,
                        double rate = kDefaultMaskRate);

std::vector<int> apply_plan(const std::vector<int>& ids, const MaskPlan& plan);

struct DIMExample {
    std::size_t record_index = 0;
    std::size_t suite_index = 0;  // record whose suite is used
    int label = 0;                // 1 iff suite_index == record_index
};

DIMExample sample_dim_example(std::size_t record_index, const std::vector<corpus::CorpusRecord>& records,
                              double p_match, Rng& rng);

/// Fixed-capacity FIFO of unit vectors.
class NegativeQueue {
public:
    NegativeQueue(int capacity, int dim);

    void push(const std::vector<float>& v);  // normalized on entry
    void clear();

    int capacity() const { return capacity_; }
    int dim() const { return dim_; }
    int count() const { return count_; }
    int head() const { return head_; }  // next write slot
    // i = 0 is the oldest entry.
    const float* at(int i) const;

    // Raw ring state for checkpoints.
    const model::ParamVec<float>& buffer() const { return buf_; }
    void restore(model::ParamVec<float> buffer, int count, int head);

private:
    int capacity_;
    int dim_;
    int count_ = 0;
    int head_ = 0;
    model::ParamVec<float> buf_;
};

template <typename T>
T cosine(const model::Vec<T>& a, const model::Vec<T>& b);

// Loss functions. When grad is non-null, the gradient of the returned loss
// (times `weight`) with respect to the student parameters is added to it.

template <typename T>
T loss_sim(const model::Network<T>& net, const T* params, const tok::AssembledInput& input,
           const MaskPlan& plan, const model::EncodeOptions& opts, T* grad = nullptr, T weight = T(1));

inline constexpr double kDimClamp = 1e-7;

// Clamped binary cross-entropy on a probability (exposed for spot checks).
double bce(double p, int y);

template <typename T>
T loss_dim(const model::Network<T>& net, const T* params, const tok::AssembledInput& input, int label,
           const model::EncodeOptions& opts, T* grad = nullptr, T weight = T(1));

template <typename T>
struct DidResult {
    T loss = T(0);
    model::Vec<T> teacher_vector;  // x-hat, un-normalized pooled teacher feature
};

/// InfoNCE of the student's code-only embedding against the teacher's
/// holistic embedding, with the queue as negatives. An empty queue gives an
/// exact zero loss. With contrast_aug, a second student encode of the code
/// (independent dropout) adds a code-vs-code term with the same negatives.
template <typename T>
DidResult<T> loss_did(const model::Network<T>& net, const T* student, const T* teacher,
                      const tok::AssembledInput& code_input, const tok::AssembledInput& holistic_input,
                      const NegativeQueue& queue, double temperature, const model::EncodeOptions& opts,
                      bool contrast_aug = false, T* grad = nullptr, T weight = T(1));

/// -log softmax_0 over [pos, negs...] / t, with d/d(similarity) outputs.
double info_nce(double pos_sim, const std::vector<double>& neg_sims, double temperature,
                double* d_pos = nullptr, std::vector<double>* d_negs = nullptr);

}  // namespace dynapre::obj
