// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0

#include "dynapre/model.hpp"

#include <cmath>
#include <limits>

#include "dynapre/tokenizer.hpp"

namespace dynapre::model {

std::string_view pooling_name(Pooling p) { return p == Pooling::Bos ? "bos" : "mean"; }

Pooling pooling_from_name(std::string_view name) {
    if (name == "bos") return Pooling::Bos;
    if (name == "mean") return Pooling::Mean;
    throw std::invalid_argument("unknown pooling: " + std::string(name));
}

void ModelConfig::validate() const {
    if (dim < 1 || layers < 0 || heads < 1 || ffn_mult < 1 || max_len < 1 || vocab_size < tok::kNumSpecial) {
        throw std::invalid_argument("model config has a non-positive size");
    }
    if (dim % heads != 0) throw std::invalid_argument("dim must be divisible by heads");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must be in [0, 1)");
}

// ---------------------------------------------------------------------------
// Layout

std::size_t Layout::add(std::string name, int rows, int cols) {
    TensorInfo t{std::move(name), rows, cols, total_};
    total_ += t.size();
    tensors_.push_back(std::move(t));
    return tensors_.back().offset;
}

Layout::Layout(const ModelConfig& c) {
    const int d = c.dim;
    const int f = c.dim * c.ffn_mult;
    add("tok_emb", c.vocab_size, d);
    add("pos_emb", c.max_len, d);
    for (int i = 0; i < c.layers; ++i) {
        const std::string p = "layer" + std::to_string(i) + ".";
        add(p + "ln1.g", 1, d);
        add(p + "ln1.b", 1, d);
        add(p + "attn.wq", d, d);
        add(p + "attn.bq", 1, d);
        add(p + "attn.wk", d, d);
        add(p + "attn.bk", 1, d);
        add(p + "attn.wv", d, d);
        add(p + "attn.bv", 1, d);
        add(p + "attn.wo", d, d);
        add(p + "attn.bo", 1, d);
        add(p + "ln2.g", 1, d);
        add(p + "ln2.b", 1, d);
        add(p + "ffn.w1", d, f);
        add(p + "ffn.b1", 1, f);
        add(p + "ffn.w2", f, d);
        add(p + "ffn.b2", 1, d);
    }
    add("final_ln.g", 1, d);
    add("final_ln.b", 1, d);
    add("mlm.w", d, c.vocab_size);
    add("mlm.b", 1, c.vocab_size);
    add("dim.fc.w", d, d);
    add("dim.fc.b", 1, d);
    add("dim.cls.w", 1, d);
    add("dim.cls.b", 1, 1);
}

const TensorInfo& Layout::at(const std::string& name) const {
    for (const auto& t : tensors_) {
        if (t.name == name) return t;
    }
    throw std::out_of_range("no tensor named " + name);
}

std::size_t parameter_count(const ModelConfig& config) { return Layout(config).total(); }

// ---------------------------------------------------------------------------
// Init and EMA

namespace {

enum class InitKind { Normal, Ones, Zeros };

InitKind init_kind(const std::string& name) {
    const auto dot = name.rfind('.');
    const std::string leaf = dot == std::string::npos ? name : name.substr(dot + 1);
    if (name.find("ln") != std::string::npos && leaf == "g") return InitKind::Ones;
    if (leaf == "b" || leaf.rfind("b", 0) == 0) return InitKind::Zeros;  // b, bq, b1, ...
    return InitKind::Normal;
}

}  // namespace

template <typename T>
ModelState<T> init(const ModelConfig& config, std::uint64_t rng_seed, double init_std) {
    config.validate();
    const Layout layout(config);
    ModelState<T> s;
    s.config = config;
    s.student.assign(layout.total(), T(0));
    Rng rng(derive_seed({rng_seed, 0x1417ULL}));
    for (const auto& t : layout.tensors()) {
        T* p = s.student.data() + t.offset;
        switch (init_kind(t.name)) {
            case InitKind::Ones: std::fill(p, p + t.size(), T(1)); break;
            case InitKind::Zeros: break;
            case InitKind::Normal:
                for (std::size_t i = 0; i < t.size(); ++i) p[i] = static_cast<T>(rng.normal(0.0, init_std));
                break;
        }
    }
    s.teacher = s.student;
    return s;
}

template <typename T>
void ema_update(ModelState<T>& state, double m) {
    if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("momentum must be in [0, 1]");
    if (m == 1.0) return;
    if (m == 0.0) {
        state.teacher = state.student;
        return;
    }
    const T mt = static_cast<T>(m);
    const T ms = static_cast<T>(1.0 - m);
    for (std::size_t i = 0; i < state.teacher.size(); ++i) {
        state.teacher[i] = mt * state.teacher[i] + ms * state.student[i];
    }
}

template <typename T>
double param_distance(const ModelState<T>& state) {
    double acc = 0.0;
    for (std::size_t i = 0; i < state.teacher.size(); ++i) {
        const double d = static_cast<double>(state.teacher[i]) - static_cast<double>(state.student[i]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Network

namespace {

constexpr double kLnEps = 1e-5;

template <typename T>
using CMap = Eigen::Map<const Mat<T>>;
template <typename T>
using MMap = Eigen::Map<Mat<T>>;
template <typename T>
using CVMap = Eigen::Map<const Vec<T>>;
template <typename T>
using MVMap = Eigen::Map<Vec<T>>;

template <typename T>
void layer_norm(const Mat<T>& x, const T* g, const T* b, int d, Mat<T>& xhat, Vec<T>& rstd, Mat<T>& y) {
    const auto rows = x.rows();
    xhat.resize(rows, d);
    rstd.resize(rows);
    y.resize(rows, d);
    const CVMap<T> gv(g, d);
    const CVMap<T> bv(b, d);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const T mu = x.row(i).mean();
        const auto centered = (x.row(i).array() - mu).matrix();
        const T var = centered.squaredNorm() / static_cast<T>(d);
        const T r = T(1) / std::sqrt(var + static_cast<T>(kLnEps));
        rstd(i) = r;
        xhat.row(i) = centered * r;
        y.row(i) = (xhat.row(i).array() * gv.array() + bv.array()).matrix();
    }
}

// dy -> dx; accumulates dg, db.
template <typename T>
Mat<T> layer_norm_backward(const Mat<T>& dy, const Mat<T>& xhat, const Vec<T>& rstd, const T* g, T* dg, T* db,
                           int d) {
    const CVMap<T> gv(g, d);
    MVMap<T> dgv(dg, d);
    MVMap<T> dbv(db, d);
    dgv += (dy.array() * xhat.array()).matrix().colwise().sum();
    dbv += dy.colwise().sum();
    Mat<T> dx(dy.rows(), d);
    for (Eigen::Index i = 0; i < dy.rows(); ++i) {
        const Vec<T> dxhat = (dy.row(i).array() * gv.array()).matrix();
        const T m1 = dxhat.mean();
        const T m2 = dxhat.dot(xhat.row(i)) / static_cast<T>(d);
        dx.row(i) = ((dxhat.array() - m1 - xhat.row(i).array() * m2) * rstd(i)).matrix();
    }
    return dx;
}

template <typename T>
T gelu(T x) {
    return T(0.5) * x * (T(1) + std::erf(x * static_cast<T>(0.70710678118654752440)));
}

template <typename T>
T gelu_grad(T x) {
    const T cdf = T(0.5) * (T(1) + std::erf(x * static_cast<T>(0.70710678118654752440)));
    const T pdf = std::exp(T(-0.5) * x * x) * static_cast<T>(0.39894228040143267794);
    return cdf + x * pdf;
}

template <typename T>
Mat<T> dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
    Mat<T> m(rows, cols);
    const T scale = static_cast<T>(1.0 / (1.0 - p));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform() < p ? T(0) : scale;
    return m;
}

}  // namespace

template <typename T>
Network<T>::Network(const ModelConfig& config) : config_(config), layout_(config) {
    config_.validate();
    tok_emb_ = layout_.at("tok_emb").offset;
    pos_emb_ = layout_.at("pos_emb").offset;
    for (int i = 0; i < config_.layers; ++i) {
        const std::string p = "layer" + std::to_string(i) + ".";
        LayerOffsets o{};
        o.ln1_g = layout_.at(p + "ln1.g").offset;
        o.ln1_b = layout_.at(p + "ln1.b").offset;
        o.wq = layout_.at(p + "attn.wq").offset;
        o.bq = layout_.at(p + "attn.bq").offset;
        o.wk = layout_.at(p + "attn.wk").offset;
        o.bk = layout_.at(p + "attn.bk").offset;
        o.wv = layout_.at(p + "attn.wv").offset;
        o.bv = layout_.at(p + "attn.bv").offset;
        o.wo = layout_.at(p + "attn.wo").offset;
        o.bo = layout_.at(p + "attn.bo").offset;
        o.ln2_g = layout_.at(p + "ln2.g").offset;
        o.ln2_b = layout_.at(p + "ln2.b").offset;
        o.w1 = layout_.at(p + "ffn.w1").offset;
        o.b1 = layout_.at(p + "ffn.b1").offset;
        o.w2 = layout_.at(p + "ffn.w2").offset;
        o.b2 = layout_.at(p + "ffn.b2").offset;
        lo_.push_back(o);
    }
    lnf_g_ = layout_.at("final_ln.g").offset;
    lnf_b_ = layout_.at("final_ln.b").offset;
    mlm_w_ = layout_.at("mlm.w").offset;
    mlm_b_ = layout_.at("mlm.b").offset;
    fc_w_ = layout_.at("dim.fc.w").offset;
    fc_b_ = layout_.at("dim.fc.b").offset;
    cls_w_ = layout_.at("dim.cls.w").offset;
    cls_b_ = layout_.at("dim.cls.b").offset;
}

template <typename T>
EncodeResult<T> Network<T>::encode(const T* P, const std::vector<int>& ids, const EncodeOptions& opts,
                                   EncodeTrace<T>* trace) const {
    const int L = static_cast<int>(ids.size());
    const int D = config_.dim;
    const int H = config_.heads;
    const int dh = D / H;
    const int F = D * config_.ffn_mult;
    if (L < 1) throw LengthError("cannot encode an empty sequence");
    if (L > config_.max_len) {
        throw LengthError("input length " + std::to_string(L) + " exceeds max_len " +
                          std::to_string(config_.max_len));
    }
    const bool drop = opts.train_mode && config_.dropout > 0.0;
    if (drop && !opts.rng) throw std::invalid_argument("train-mode encode needs an rng");
    const double p = config_.dropout;
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

    EncodeTrace<T> local;
    EncodeTrace<T>& tr = trace ? *trace : local;
    tr = EncodeTrace<T>{};
    tr.ids = ids;
    tr.dropout_on = drop;
    tr.valid.resize(ids.size());
    for (int i = 0; i < L; ++i) {
        if (ids[static_cast<std::size_t>(i)] < 0 || ids[static_cast<std::size_t>(i)] >= config_.vocab_size) {
            throw std::out_of_range("token id out of range");
        }
        tr.valid[static_cast<std::size_t>(i)] = ids[static_cast<std::size_t>(i)] != tok::kPad;
        tr.n_valid += tr.valid[static_cast<std::size_t>(i)];
    }

    const CMap<T> E(P + tok_emb_, config_.vocab_size, D);
    const CMap<T> Pos(P + pos_emb_, config_.max_len, D);
    Mat<T> h(L, D);
    for (int i = 0; i < L; ++i) h.row(i) = E.row(ids[static_cast<std::size_t>(i)]) + Pos.row(i);
    if (drop) {
        tr.emb_keep = dropout_mask<T>(L, D, p, *opts.rng);
        h.array() *= tr.emb_keep.array();
    }

    for (int li = 0; li < config_.layers; ++li) {
        const LayerOffsets& o = lo_[static_cast<std::size_t>(li)];
        typename EncodeTrace<T>::LayerTrace lt;
        layer_norm<T>(h, P + o.ln1_g, P + o.ln1_b, D, lt.xhat1, lt.rstd1, lt.a1);
        lt.q.noalias() = lt.a1 * CMap<T>(P + o.wq, D, D);
        lt.q.rowwise() += CVMap<T>(P + o.bq, D);
        lt.k.noalias() = lt.a1 * CMap<T>(P + o.wk, D, D);
        lt.k.rowwise() += CVMap<T>(P + o.bk, D);
        lt.v.noalias() = lt.a1 * CMap<T>(P + o.wv, D, D);
        lt.v.rowwise() += CVMap<T>(P + o.bv, D);
        lt.ctx.resize(L, D);
        lt.probs.resize(static_cast<std::size_t>(H));
        if (drop) lt.prob_keep.resize(static_cast<std::size_t>(H));
        for (int hd = 0; hd < H; ++hd) {
            Mat<T> s = (lt.q.middleCols(hd * dh, dh) * lt.k.middleCols(hd * dh, dh).transpose()) * scale;
            for (int j = 0; j < L; ++j) {
                if (!tr.valid[static_cast<std::size_t>(j)]) s.col(j).setConstant(-std::numeric_limits<T>::infinity());
            }
            for (int i = 0; i < L; ++i) {
                const T mx = s.row(i).maxCoeff();
                s.row(i) = (s.row(i).array() - mx).exp().matrix();
                s.row(i) /= s.row(i).sum();
            }
            // Vectorized exp clamps its argument, so -inf does not land on 0.
            for (int j = 0; j < L; ++j) {
                if (!tr.valid[static_cast<std::size_t>(j)]) s.col(j).setZero();
            }
            if (drop) {
                auto& keep = lt.prob_keep[static_cast<std::size_t>(hd)];
                keep = dropout_mask<T>(L, L, p, *opts.rng);
                lt.ctx.middleCols(hd * dh, dh).noalias() =
                    (s.array() * keep.array()).matrix() * lt.v.middleCols(hd * dh, dh);
            } else {
                lt.ctx.middleCols(hd * dh, dh).noalias() = s * lt.v.middleCols(hd * dh, dh);
            }
            lt.probs[static_cast<std::size_t>(hd)] = std::move(s);
        }
        Mat<T> out = lt.ctx * CMap<T>(P + o.wo, D, D);
        out.rowwise() += CVMap<T>(P + o.bo, D);
        if (drop) {
            lt.attn_keep = dropout_mask<T>(L, D, p, *opts.rng);
            out.array() *= lt.attn_keep.array();
        }
        h += out;

        layer_norm<T>(h, P + o.ln2_g, P + o.ln2_b, D, lt.xhat2, lt.rstd2, lt.a2);
        lt.u.noalias() = lt.a2 * CMap<T>(P + o.w1, D, F);
        lt.u.rowwise() += CVMap<T>(P + o.b1, F);
        lt.gelu = lt.u.unaryExpr([](T x) { return gelu(x); });
        Mat<T> y = lt.gelu * CMap<T>(P + o.w2, F, D);
        y.rowwise() += CVMap<T>(P + o.b2, D);
        if (drop) {
            lt.ffn_keep = dropout_mask<T>(L, D, p, *opts.rng);
            y.array() *= lt.ffn_keep.array();
        }
        h += y;
        if (trace) tr.layers.push_back(std::move(lt));
    }

    EncodeResult<T> res;
    layer_norm<T>(h, P + lnf_g_, P + lnf_b_, D, tr.xhatf, tr.rstdf, res.features);
    if (config_.pooling == Pooling::Bos) {
        res.pooled = res.features.row(0);
    } else {
        res.pooled = Vec<T>::Zero(D);
        for (int i = 0; i < L; ++i) {
            if (tr.valid[static_cast<std::size_t>(i)]) res.pooled += res.features.row(i);
        }
        res.pooled /= static_cast<T>(std::max(tr.n_valid, 1));
    }
    return res;
}

template <typename T>
void Network<T>::encode_backward(const T* P, const EncodeTrace<T>& tr, const Mat<T>& d_features,
                                 const Vec<T>& d_pooled, T* G) const {
    const int L = static_cast<int>(tr.ids.size());
    const int D = config_.dim;
    const int H = config_.heads;
    const int dh = D / H;
    const int F = D * config_.ffn_mult;
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
    if (static_cast<int>(tr.layers.size()) != config_.layers) {
        throw std::logic_error("encode_backward needs a full trace");
    }

    Mat<T> dX = d_features.size() ? d_features : Mat<T>::Zero(L, D);
    if (d_pooled.size()) {
        if (config_.pooling == Pooling::Bos) {
            dX.row(0) += d_pooled;
        } else {
            const Vec<T> share = d_pooled / static_cast<T>(std::max(tr.n_valid, 1));
            for (int i = 0; i < L; ++i) {
                if (tr.valid[static_cast<std::size_t>(i)]) dX.row(i) += share;
            }
        }
    }
    Mat<T> dh_ = layer_norm_backward<T>(dX, tr.xhatf, tr.rstdf, P + lnf_g_, G + lnf_g_, G + lnf_b_, D);

    for (int li = config_.layers - 1; li >= 0; --li) {
        const LayerOffsets& o = lo_[static_cast<std::size_t>(li)];
        const auto& lt = tr.layers[static_cast<std::size_t>(li)];

        // FFN sublayer
        Mat<T> dy = dh_;
        if (tr.dropout_on) dy.array() *= lt.ffn_keep.array();
        MMap<T>(G + o.w2, F, D).noalias() += lt.gelu.transpose() * dy;
        MVMap<T>(G + o.b2, D) += dy.colwise().sum();
        Mat<T> du = dy * CMap<T>(P + o.w2, F, D).transpose();
        du.array() *= lt.u.unaryExpr([](T x) { return gelu_grad(x); }).array();
        MMap<T>(G + o.w1, D, F).noalias() += lt.a2.transpose() * du;
        MVMap<T>(G + o.b1, F) += du.colwise().sum();
        const Mat<T> da2 = du * CMap<T>(P + o.w1, D, F).transpose();
        dh_ += layer_norm_backward<T>(da2, lt.xhat2, lt.rstd2, P + o.ln2_g, G + o.ln2_g, G + o.ln2_b, D);

        // attention sublayer
        Mat<T> dout = dh_;
        if (tr.dropout_on) dout.array() *= lt.attn_keep.array();
        MMap<T>(G + o.wo, D, D).noalias() += lt.ctx.transpose() * dout;
        MVMap<T>(G + o.bo, D) += dout.colwise().sum();
        const Mat<T> dctx = dout * CMap<T>(P + o.wo, D, D).transpose();
        Mat<T> dq(L, D), dk(L, D), dv(L, D);
        for (int hd = 0; hd < H; ++hd) {
            const auto& pr = lt.probs[static_cast<std::size_t>(hd)];
            const auto dctx_h = dctx.middleCols(hd * dh, dh);
            Mat<T> dp = dctx_h * lt.v.middleCols(hd * dh, dh).transpose();
            if (tr.dropout_on) {
                const auto& keep = lt.prob_keep[static_cast<std::size_t>(hd)];
                dv.middleCols(hd * dh, dh).noalias() = (pr.array() * keep.array()).matrix().transpose() * dctx_h;
                dp.array() *= keep.array();
            } else {
                dv.middleCols(hd * dh, dh).noalias() = pr.transpose() * dctx_h;
            }
            const auto rowdot = (dp.array() * pr.array()).rowwise().sum();
            Mat<T> ds = (pr.array() * (dp.array().colwise() - rowdot)).matrix() * scale;
            dq.middleCols(hd * dh, dh).noalias() = ds * lt.k.middleCols(hd * dh, dh);
            dk.middleCols(hd * dh, dh).noalias() = ds.transpose() * lt.q.middleCols(hd * dh, dh);
        }
        MMap<T>(G + o.wq, D, D).noalias() += lt.a1.transpose() * dq;
        MVMap<T>(G + o.bq, D) += dq.colwise().sum();
        MMap<T>(G + o.wk, D, D).noalias() += lt.a1.transpose() * dk;
        MVMap<T>(G + o.bk, D) += dk.colwise().sum();
        MMap<T>(G + o.wv, D, D).noalias() += lt.a1.transpose() * dv;
        MVMap<T>(G + o.bv, D) += dv.colwise().sum();
        Mat<T> da1 = dq * CMap<T>(P + o.wq, D, D).transpose();
        da1.noalias() += dk * CMap<T>(P + o.wk, D, D).transpose();
        da1.noalias() += dv * CMap<T>(P + o.wv, D, D).transpose();
        dh_ += layer_norm_backward<T>(da1, lt.xhat1, lt.rstd1, P + o.ln1_g, G + o.ln1_g, G + o.ln1_b, D);
    }

    if (tr.dropout_on) dh_.array() *= tr.emb_keep.array();
    MMap<T> dE(G + tok_emb_, config_.vocab_size, D);
    MMap<T> dPos(G + pos_emb_, config_.max_len, D);
    for (int i = 0; i < L; ++i) {
        dE.row(tr.ids[static_cast<std::size_t>(i)]) += dh_.row(i);
        dPos.row(i) += dh_.row(i);
    }
}

template <typename T>
Mat<T> Network<T>::mlm_logits(const T* P, const Mat<T>& X, const std::vector<int>& rows) const {
    const int D = config_.dim;
    const int V = config_.vocab_size;
    Mat<T> sel(static_cast<Eigen::Index>(rows.size()), D);
    for (std::size_t i = 0; i < rows.size(); ++i) sel.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
    Mat<T> logits = sel * CMap<T>(P + mlm_w_, D, V);
    logits.rowwise() += CVMap<T>(P + mlm_b_, V);
    return logits;
}

template <typename T>
Mat<T> Network<T>::mlm_backward(const T* P, const Mat<T>& X, const std::vector<int>& rows, const Mat<T>& d_logits,
                                T* G) const {
    const int D = config_.dim;
    const int V = config_.vocab_size;
    Mat<T> sel(static_cast<Eigen::Index>(rows.size()), D);
    for (std::size_t i = 0; i < rows.size(); ++i) sel.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
    MMap<T>(G + mlm_w_, D, V).noalias() += sel.transpose() * d_logits;
    MVMap<T>(G + mlm_b_, V) += d_logits.colwise().sum();
    const Mat<T> dsel = d_logits * CMap<T>(P + mlm_w_, D, V).transpose();
    Mat<T> dX = Mat<T>::Zero(X.rows(), D);
    for (std::size_t i = 0; i < rows.size(); ++i) dX.row(rows[i]) += dsel.row(static_cast<Eigen::Index>(i));
    return dX;
}

template <typename T>
T Network<T>::dim_logit(const T* P, const Vec<T>& pooled) const {
    const int D = config_.dim;
    const Vec<T> z = pooled * CMap<T>(P + fc_w_, D, D) + CVMap<T>(P + fc_b_, D);
    return z.dot(CVMap<T>(P + cls_w_, D)) + P[cls_b_];
}

template <typename T>
T Network<T>::dim_score(const T* P, const Vec<T>& pooled) const {
    return T(1) / (T(1) + std::exp(-dim_logit(P, pooled)));
}

template <typename T>
Vec<T> Network<T>::dim_backward(const T* P, const Vec<T>& pooled, T d_logit, T* G) const {
    const int D = config_.dim;
    const Vec<T> z = pooled * CMap<T>(P + fc_w_, D, D) + CVMap<T>(P + fc_b_, D);
    MVMap<T>(G + cls_w_, D) += d_logit * z;
    G[cls_b_] += d_logit;
    const Vec<T> dz = d_logit * CVMap<T>(P + cls_w_, D);
    MMap<T>(G + fc_w_, D, D).noalias() += pooled.transpose() * dz;
    MVMap<T>(G + fc_b_, D) += dz;
    return dz * CMap<T>(P + fc_w_, D, D).transpose();
}

template <typename T>
Mat<T> Network<T>::attention_probs(const T* P, const std::vector<int>& ids, int layer, int head) const {
    if (layer < 0 || layer >= config_.layers || head < 0 || head >= config_.heads) {
        throw std::out_of_range("no such layer/head");
    }
    EncodeTrace<T> tr;
    encode(P, ids, EncodeOptions{}, &tr);
    return tr.layers[static_cast<std::size_t>(layer)].probs[static_cast<std::size_t>(head)];
}

template class Network<float>;
template class Network<double>;
template ModelState<float> init<float>(const ModelConfig&, std::uint64_t, double);
template ModelState<double> init<double>(const ModelConfig&, std::uint64_t, double);
template void ema_update<float>(ModelState<float>&, double);
template void ema_update<double>(ModelState<double>&, double);
template double param_distance<float>(const ModelState<float>&);
template double param_distance<double>(const ModelState<double>&);

}  // namespace dynapre::model
