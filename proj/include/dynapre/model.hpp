// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Pre-LN transformer encoder with MLM and matching heads, trained by
// hand-written reverse mode. All parameters live in one flat buffer; named
// tensors are views into it, which keeps Adam, EMA and checkpointing to
// simple loops.

#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynapre/rng.hpp"

namespace dynapre::model {

enum class Pooling { Bos, Mean };

std::string_view pooling_name(Pooling p);
Pooling pooling_from_name(std::string_view name);

struct ModelConfig {
    int dim = 64;
    int layers = 4;
    int heads = 4;
    int ffn_mult = 4;
    int max_len = 256;
    int vocab_size = 0;
    Pooling pooling = Pooling::Mean;
    double dropout = 0.1;

    void validate() const;  // throws std::invalid_argument
    bool operator==(const ModelConfig&) const = default;
};

class LengthError : public std::length_error {
public:
    using std::length_error::length_error;
};

struct TensorInfo {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::size_t offset = 0;
    std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

/// Named tensor layout for a config. Vectors are stored as 1 x n.
class Layout {
public:
    explicit Layout(const ModelConfig& c);
    const std::vector<TensorInfo>& tensors() const { return tensors_; }
    std::size_t total() const { return total_; }
    const TensorInfo& at(const std::string& name) const;

private:
    std::size_t add(std::string name, int rows, int cols);
    std::vector<TensorInfo> tensors_;
    std::size_t total_ = 0;
};

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

// Flat parameter-sized buffers. The fixed base alignment keeps vectorized
// reductions over them reproducible from one allocation to the next.
template <typename T>
using ParamVec = std::vector<T, Eigen::aligned_allocator<T>>;

template <typename T>
struct ModelState {
    ModelConfig config;
    ParamVec<T> student;
    ParamVec<T> teacher;
};

template <typename T>
ModelState<T> init(const ModelConfig& config, std::uint64_t rng_seed, double init_std = 0.02);

/// teacher = m * teacher + (1 - m) * student, elementwise.
template <typename T>
void ema_update(ModelState<T>& state, double m);

template <typename T>
double param_distance(const ModelState<T>& state);  // ||teacher - student||_2

/// Per-sequence forward activations kept for the backward pass.
template <typename T>
struct EncodeTrace {
    struct LayerTrace {
        Mat<T> xhat1, a1, q, k, v, ctx, xhat2, a2, u, gelu;
        Vec<T> rstd1, rstd2;
        std::vector<Mat<T>> probs;      // per head, pre-dropout
        std::vector<Mat<T>> prob_keep;  // per head dropout scale (empty when off)
        Mat<T> attn_keep, ffn_keep;     // sublayer output dropout scale
    };
    std::vector<int> ids;
    std::vector<std::uint8_t> valid;  // 1 for non-<PAD>
    int n_valid = 0;
    Mat<T> emb_keep;
    std::vector<LayerTrace> layers;
    Mat<T> xhatf;
    Vec<T> rstdf;
    bool dropout_on = false;
};

struct EncodeOptions {
    bool train_mode = false;
    Rng* rng = nullptr;  // required when train_mode and dropout > 0
};

template <typename T>
struct EncodeResult {
    Mat<T> features;  // L x D
    Vec<T> pooled;    // 1 x D
};

/// Stateless network over a flat parameter buffer.
template <typename T>
class Network {
public:
    explicit Network(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }
    const Layout& layout() const { return layout_; }
    std::size_t param_count() const { return layout_.total(); }

    EncodeResult<T> encode(const T* params, const std::vector<int>& ids, const EncodeOptions& opts,
                           EncodeTrace<T>* trace = nullptr) const;

    /// Accumulates into grad the gradient given upstream dX (L x D, may be
    /// empty) and dpooled (1 x D, may be empty).
    void encode_backward(const T* params, const EncodeTrace<T>& trace, const Mat<T>& d_features,
                         const Vec<T>& d_pooled, T* grad) const;

    /// Vocabulary logits for selected rows of X: rows.size() x V.
    Mat<T> mlm_logits(const T* params, const Mat<T>& features, const std::vector<int>& rows) const;
    /// d_logits is rows.size() x V; returns dX (L x D) and accumulates head grads.
    Mat<T> mlm_backward(const T* params, const Mat<T>& features, const std::vector<int>& rows,
                        const Mat<T>& d_logits, T* grad) const;

    /// w . (pooled FC + b_FC) + b; dim_score is its logistic.
    T dim_logit(const T* params, const Vec<T>& pooled) const;
    T dim_score(const T* params, const Vec<T>& pooled) const;
    /// d_logit is dLoss/dlogit; returns dpooled and accumulates head grads.
    Vec<T> dim_backward(const T* params, const Vec<T>& pooled, T d_logit, T* grad) const;

    /// Attention probabilities of one layer/head for inspection (no dropout).
    Mat<T> attention_probs(const T* params, const std::vector<int>& ids, int layer, int head) const;

private:
    struct LayerOffsets {
        std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
    };
    ModelConfig config_;
    Layout layout_;
    std::size_t tok_emb_, pos_emb_, lnf_g_, lnf_b_, mlm_w_, mlm_b_, fc_w_, fc_b_, cls_w_, cls_b_;
    std::vector<LayerOffsets> lo_;
};

// Parameter count for a config, computed from the layout.
std::size_t parameter_count(const ModelConfig& config);

}  // namespace dynapre::model
