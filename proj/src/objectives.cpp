// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0

#include "dynapre/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dynapre::obj {

using model::Mat;
using model::Vec;

MaskPlan make_mask_plan(const tok::AssembledInput& input, int vocab_size, Rng& rng, double rate) {
    std::vector<int> pool;
    for (int i = 0; i < input.length(); ++i) {
        if (input.maskable[static_cast<std::size_t>(i)]) pool.push_back(i);
    }
    if (pool.empty()) throw NoMaskable("input has no maskable positions");
    if (vocab_size <= tok::kNumSpecial) throw std::invalid_argument("vocabulary has no ordinary tokens");
    const auto c = pool.size();
    const auto k = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(rate * static_cast<double>(c))), 1, c);
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(c - i));
        std::swap(pool[i], pool[j]);
    }
    const auto n_mask = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(k)));
    const auto n_rand = static_cast<std::size_t>(std::floor(0.1 * static_cast<double>(k)));

    struct Sel {
        int pos;
        MaskAction act;
        int id;
    };
    std::vector<Sel> sel;
    for (std::size_t i = 0; i < k; ++i) {
        const int pos = pool[i];
        if (i < n_mask) {
            sel.push_back({pos, MaskAction::Mask, tok::kMask});
        } else if (i < n_mask + n_rand) {
            const int id = tok::kNumSpecial +
                           static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab_size - tok::kNumSpecial)));
            sel.push_back({pos, MaskAction::Random, id});
        } else {
            sel.push_back({pos, MaskAction::Keep, input.ids[static_cast<std::size_t>(pos)]});
        }
    }
    std::sort(sel.begin(), sel.end(), [](const Sel& a, const Sel& b) { return a.pos < b.pos; });
    MaskPlan plan;
    for (const auto& s : sel) {
        plan.positions.push_back(s.pos);
        plan.actions.push_back(s.act);
        plan.replacement.push_back(s.id);
    }
    return plan;
}

std::vector<int> apply_plan(const std::vector<int>& ids, const MaskPlan& plan) {
    std::vector<int> out = ids;
    for (std::size_t i = 0; i < plan.positions.size(); ++i) {
        out[static_cast<std::size_t>(plan.positions[i])] = plan.replacement[i];
    }
    return out;
}

DIMExample sample_dim_example(std::size_t record_index, const std::vector<corpus::CorpusRecord>& records,
                              double p_match, Rng& rng) {
    if (records.size() < 2) throw std::invalid_argument("DIM sampling needs at least 2 records");
    if (record_index >= records.size()) throw std::out_of_range("record index out of range");
    DIMExample ex;
    ex.record_index = record_index;
    if (rng.bernoulli(p_match)) {
        ex.suite_index = record_index;
        ex.label = 1;
        return ex;
    }
    auto j = static_cast<std::size_t>(rng.below(records.size() - 1));
    if (j >= record_index) ++j;
    ex.suite_index = j;
    ex.label = 0;
    return ex;
}

// ---------------------------------------------------------------------------
// Queue

NegativeQueue::NegativeQueue(int capacity, int dim) : capacity_(capacity), dim_(dim) {
    if (capacity < 1 || dim < 1) throw std::invalid_argument("queue capacity and dim must be positive");
    buf_.assign(static_cast<std::size_t>(capacity) * static_cast<std::size_t>(dim), 0.0f);
}

void NegativeQueue::push(const std::vector<float>& v) {
    if (static_cast<int>(v.size()) != dim_) throw std::invalid_argument("queue vector has the wrong size");
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * static_cast<double>(x);
    norm = std::sqrt(norm);
    if (!std::isfinite(norm) || norm == 0.0) throw std::invalid_argument("queue vector must be finite and nonzero");
    float* dst = buf_.data() + static_cast<std::size_t>(head_) * static_cast<std::size_t>(dim_);
    for (int i = 0; i < dim_; ++i) dst[i] = static_cast<float>(static_cast<double>(v[static_cast<std::size_t>(i)]) / norm);
    head_ = (head_ + 1) % capacity_;
    count_ = std::min(count_ + 1, capacity_);
}

void NegativeQueue::clear() {
    std::fill(buf_.begin(), buf_.end(), 0.0f);
    count_ = 0;
    head_ = 0;
}

const float* NegativeQueue::at(int i) const {
    if (i < 0 || i >= count_) throw std::out_of_range("queue index out of range");
    const int slot = ((head_ - count_ + i) % capacity_ + capacity_) % capacity_;
    return buf_.data() + static_cast<std::size_t>(slot) * static_cast<std::size_t>(dim_);
}

void NegativeQueue::restore(model::ParamVec<float> buffer, int count, int head) {
    if (buffer.size() != buf_.size() || count < 0 || count > capacity_ || head < 0 || head >= capacity_) {
        throw std::invalid_argument("queue state does not match its shape");
    }
    buf_ = std::move(buffer);
    count_ = count;
    head_ = head;
}

// ---------------------------------------------------------------------------
// Losses

template <typename T>
T cosine(const Vec<T>& a, const Vec<T>& b) {
    const T na = a.norm();
    const T nb = b.norm();
    if (na == T(0) || nb == T(0)) throw std::invalid_argument("cosine of a zero vector");
    return std::clamp(a.dot(b) / (na * nb), T(-1), T(1));
}

namespace {

// d cos(a, b) / da
template <typename T>
Vec<T> cosine_grad(const Vec<T>& a, const Vec<T>& b) {
    const T na = a.norm();
    const T nb = b.norm();
    const T c = a.dot(b) / (na * nb);
    return b / (na * nb) - a * (c / (na * na));
}

}  // namespace

template <typename T>
T loss_sim(const model::Network<T>& net, const T* params, const tok::AssembledInput& input, const MaskPlan& plan,
           const model::EncodeOptions& opts, T* grad, T weight) {
    if (plan.positions.empty()) throw std::invalid_argument("empty mask plan");
    const auto corrupted = apply_plan(input.ids, plan);
    model::EncodeTrace<T> trace;
    const auto enc = net.encode(params, corrupted, opts, grad ? &trace : nullptr);
    Mat<T> logits = net.mlm_logits(params, enc.features, plan.positions);
    const auto k = static_cast<Eigen::Index>(plan.positions.size());
    double total = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        const int target = input.ids[static_cast<std::size_t>(plan.positions[static_cast<std::size_t>(i)])];
        const T mx = logits.row(i).maxCoeff();
        logits.row(i) = (logits.row(i).array() - mx).matrix();
        const T lse = std::log(logits.row(i).array().exp().sum());
        total += static_cast<double>(lse - logits(i, target));
        if (grad) {
            // softmax - onehot
            logits.row(i) = (logits.row(i).array() - lse).exp().matrix();
            logits(i, target) -= T(1);
        }
    }
    const T loss = static_cast<T>(total / static_cast<double>(k));
    if (grad) {
        logits *= weight / static_cast<T>(k);
        const Mat<T> dX = net.mlm_backward(params, enc.features, plan.positions, logits, grad);
        net.encode_backward(params, trace, dX, Vec<T>(), grad);
    }
    return loss;
}

double bce(double p, int y) {
    const double pc = std::clamp(p, kDimClamp, 1.0 - kDimClamp);
    return y ? -std::log(pc) : -std::log(1.0 - pc);
}

template <typename T>
T loss_dim(const model::Network<T>& net, const T* params, const tok::AssembledInput& input, int label,
           const model::EncodeOptions& opts, T* grad, T weight) {
    model::EncodeTrace<T> trace;
    const auto enc = net.encode(params, input.ids, opts, grad ? &trace : nullptr);
    const T s = net.dim_logit(params, enc.pooled);
    const double sd = static_cast<double>(s);
    const double p = sd >= 0 ? 1.0 / (1.0 + std::exp(-sd)) : std::exp(sd) / (1.0 + std::exp(sd));
    const double loss = bce(p, label);
    if (grad) {
        const bool clamped = p < kDimClamp || p > 1.0 - kDimClamp;
        const T d_logit = clamped ? T(0) : static_cast<T>(p - label) * weight;
        const Vec<T> dpooled = net.dim_backward(params, enc.pooled, d_logit, grad);
        net.encode_backward(params, trace, Mat<T>(), dpooled, grad);
    }
    return static_cast<T>(loss);
}

double info_nce(double pos_sim, const std::vector<double>& neg_sims, double temperature, double* d_pos,
                std::vector<double>* d_negs) {
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
    double mx = pos_sim / temperature;
    for (double s : neg_sims) mx = std::max(mx, s / temperature);
    double z = std::exp(pos_sim / temperature - mx);
    for (double s : neg_sims) z += std::exp(s / temperature - mx);
    const double lse = mx + std::log(z);
    double loss = lse - pos_sim / temperature;
    if (mx == pos_sim / temperature) {
        // lse - pos cancels badly once the positive dominates.
        double rest = 0.0;
        for (double s : neg_sims) rest += std::exp((s - pos_sim) / temperature);
        loss = std::log1p(rest);
    }
    if (d_pos) *d_pos = (std::exp(pos_sim / temperature - lse) - 1.0) / temperature;
    if (d_negs) {
        d_negs->resize(neg_sims.size());
        for (std::size_t j = 0; j < neg_sims.size(); ++j) {
            (*d_negs)[j] = std::exp(neg_sims[j] / temperature - lse) / temperature;
        }
    }
    return loss;
}

template <typename T>
DidResult<T> loss_did(const model::Network<T>& net, const T* student, const T* teacher,
                      const tok::AssembledInput& code_input, const tok::AssembledInput& holistic_input,
                      const NegativeQueue& queue, double temperature, const model::EncodeOptions& opts,
                      bool contrast_aug, T* grad, T weight) {
    DidResult<T> res;
    res.teacher_vector = net.encode(teacher, holistic_input.ids, model::EncodeOptions{}).pooled;
    if (queue.count() == 0) return res;
    if (queue.dim() != net.config().dim) throw std::invalid_argument("queue dim does not match the model");

    const int D = net.config().dim;
    model::EncodeTrace<T> trace;
    const Vec<T> xs = net.encode(student, code_input.ids, opts, grad ? &trace : nullptr).pooled;
    std::vector<Vec<T>> negs;
    std::vector<double> neg_sims;
    for (int j = 0; j < queue.count(); ++j) {
        Vec<T> q(D);
        for (int i = 0; i < D; ++i) q(i) = static_cast<T>(queue.at(j)[i]);
        neg_sims.push_back(static_cast<double>(cosine(xs, q)));
        negs.push_back(std::move(q));
    }

    double d_pos = 0.0;
    std::vector<double> d_negs;
    double loss = info_nce(static_cast<double>(cosine(res.teacher_vector, xs)), neg_sims, temperature,
                           grad ? &d_pos : nullptr, grad ? &d_negs : nullptr);
    Vec<T> dxs = Vec<T>::Zero(D);
    if (grad) {
        dxs += static_cast<T>(d_pos) * cosine_grad(xs, res.teacher_vector);
        for (std::size_t j = 0; j < negs.size(); ++j) dxs += static_cast<T>(d_negs[j]) * cosine_grad(xs, negs[j]);
    }

    if (contrast_aug) {
        model::EncodeTrace<T> trace2;
        const Vec<T> xs2 = net.encode(student, code_input.ids, opts, grad ? &trace2 : nullptr).pooled;
        double d_pos2 = 0.0;
        std::vector<double> d_negs2;
        loss += info_nce(static_cast<double>(cosine(xs, xs2)), neg_sims, temperature, grad ? &d_pos2 : nullptr,
                         grad ? &d_negs2 : nullptr);
        if (grad) {
            dxs += static_cast<T>(d_pos2) * cosine_grad(xs, xs2);
            for (std::size_t j = 0; j < negs.size(); ++j) {
                dxs += static_cast<T>(d_negs2[j]) * cosine_grad(xs, negs[j]);
            }
            const Vec<T> dxs2 = static_cast<T>(d_pos2) * weight * cosine_grad(xs2, xs);
            net.encode_backward(student, trace2, Mat<T>(), dxs2, grad);
        }
    }
    if (grad) net.encode_backward(student, trace, Mat<T>(), Vec<T>(dxs * weight), grad);
    res.loss = static_cast<T>(loss);
    return res;
}

template float cosine<float>(const Vec<float>&, const Vec<float>&);
template double cosine<double>(const Vec<double>&, const Vec<double>&);
template float loss_sim<float>(const model::Network<float>&, const float*, const tok::AssembledInput&,
                               const MaskPlan&, const model::EncodeOptions&, float*, float);
template double loss_sim<double>(const model::Network<double>&, const double*, const tok::AssembledInput&,
                                 const MaskPlan&, const model::EncodeOptions&, double*, double);
template float loss_dim<float>(const model::Network<float>&, const float*, const tok::AssembledInput&, int,
                               const model::EncodeOptions&, float*, float);
template double loss_dim<double>(const model::Network<double>&, const double*, const tok::AssembledInput&, int,
                                 const model::EncodeOptions&, double*, double);
template DidResult<float> loss_did<float>(const model::Network<float>&, const float*, const float*,
                                          const tok::AssembledInput&, const tok::AssembledInput&,
                                          const NegativeQueue&, double, const model::EncodeOptions&, bool, float*,
                                          float);
template DidResult<double> loss_did<double>(const model::Network<double>&, const double*, const double*,
                                            const tok::AssembledInput&, const tok::AssembledInput&,
                                            const NegativeQueue&, double, const model::EncodeOptions&, bool,
                                            double*, double);

}  // namespace dynapre::obj
