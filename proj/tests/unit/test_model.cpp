// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dynapre/model.hpp"
#include "dynapre/objectives.hpp"
#include "dynapre/tokenizer.hpp"
#include "unit/fd.hpp"

using namespace dynapre;
using namespace dynapre::model;

namespace {

ModelConfig tiny(int vocab = 20) {
    ModelConfig c;
    c.dim = 8;
    c.layers = 1;
    c.heads = 2;
    c.ffn_mult = 2;
    c.max_len = 16;
    c.vocab_size = vocab;
    c.dropout = 0.0;
    return c;
}

// Independent count for the standard layout.
std::size_t expected_params(std::size_t V, std::size_t D, std::size_t L, std::size_t F, std::size_t len) {
    const std::size_t per_layer = 2 * D + 4 * (D * D + D) + 2 * D + (D * F + F) + (F * D + D);
    return V * D + len * D + L * per_layer + 2 * D + (D * V + V) + (D * D + D) + (D + 1);
}

}  // namespace

TEST_CASE("parameter count of the desk config", "[model]") {
    ModelConfig c;
    c.vocab_size = 2000;
    REQUIRE(expected_params(2000, 64, 4, 256, 256) == 478673);
    REQUIRE(parameter_count(c) == 478673);
    REQUIRE(parameter_count(tiny()) == expected_params(20, 8, 1, 16, 16));
}

TEST_CASE("config validation", "[model]") {
    auto c = tiny();
    c.heads = 3;
    REQUIRE_THROWS_AS(c.validate(), std::invalid_argument);
    c = tiny();
    c.dropout = 1.0;
    REQUIRE_THROWS_AS(c.validate(), std::invalid_argument);
    REQUIRE(pooling_from_name(pooling_name(Pooling::Bos)) == Pooling::Bos);
}

TEST_CASE("initialization", "[model]") {
    const auto a = init<float>(tiny(), 4);
    const auto b = init<float>(tiny(), 4);
    REQUIRE(a.student == b.student);
    REQUIRE(a.teacher == a.student);
    REQUIRE(init<float>(tiny(), 5).student != a.student);
    const Layout layout(tiny());
    double sum2 = 0.0;
    std::size_t n = 0;
    for (const auto& t : layout.tensors()) {
        const auto leaf = t.name.substr(t.name.rfind('.') + 1);
        const bool gain = leaf == "g";
        const bool bias = leaf[0] == 'b';
        for (std::size_t i = t.offset; i < t.offset + t.size(); ++i) {
            if (gain) {
                REQUIRE(a.student[i] == 1.0f);
            } else if (bias) {
                REQUIRE(a.student[i] == 0.0f);
            } else {
                sum2 += a.student[i] * a.student[i];
                ++n;
            }
        }
    }
    REQUIRE(std::sqrt(sum2 / static_cast<double>(n)) == Catch::Approx(0.02).margin(0.002));
}

TEST_CASE("encode properties", "[model]") {
    const auto cfg = tiny();
    const Network<double> net(cfg);
    const auto st = init<double>(cfg, 1, 0.3);
    const std::vector<int> ids = {tok::kBos, 9, 10, 11, tok::kSep, 12, tok::kEos};

    const auto r1 = net.encode(st.student.data(), ids, {});
    const auto r2 = net.encode(st.student.data(), ids, {});
    REQUIRE(r1.pooled == r2.pooled);
    REQUIRE(net.encode(st.teacher.data(), ids, {}).pooled == r1.pooled);

    auto padded = ids;
    padded.insert(padded.end(), 5, tok::kPad);
    REQUIRE((net.encode(st.student.data(), padded, {}).pooled - r1.pooled).norm() < 1e-12);

    const auto one = net.encode(st.student.data(), {9}, {});
    REQUIRE((one.pooled - one.features.row(0)).norm() < 1e-12);

    for (int h = 0; h < cfg.heads; ++h) {
        const auto p = net.attention_probs(st.student.data(), padded, 0, h);
        for (Eigen::Index i = 0; i < p.rows(); ++i) REQUIRE(std::abs(p.row(i).sum() - 1.0) < 1e-6);
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            INFO("row " << i << " value " << p(i, p.cols() - 1) << " cols " << p.cols());
            REQUIRE(p(i, p.cols() - 1) == 0.0);
        }
    }
    REQUIRE_THROWS_AS(net.encode(st.student.data(), std::vector<int>(17, 9), {}), LengthError);

    auto bos = cfg;
    bos.pooling = Pooling::Bos;
    const Network<double> bnet(bos);
    const auto rb = bnet.encode(st.student.data(), ids, {});
    REQUIRE((rb.pooled - rb.features.row(0)).norm() == 0.0);
}

TEST_CASE("dropout only in train mode", "[model]") {
    auto cfg = tiny();
    cfg.dropout = 0.5;
    const Network<double> net(cfg);
    const auto st = init<double>(cfg, 1, 0.3);
    const std::vector<int> ids = {0, 9, 10, 11, 1};
    Rng rng(3);
    const auto eval1 = net.encode(st.student.data(), ids, {});
    const auto train1 = net.encode(st.student.data(), ids, EncodeOptions{true, &rng});
    REQUIRE(net.encode(st.student.data(), ids, {}).pooled == eval1.pooled);
    REQUIRE((train1.pooled - eval1.pooled).norm() > 1e-6);
}

TEST_CASE("mlm head", "[model]") {
    const auto cfg = tiny();
    const Network<double> net(cfg);
    auto st = init<double>(cfg, 2, 0.3);
    const auto x = net.encode(st.student.data(), {0, 9, 10, 1}, {});
    const auto logits = net.mlm_logits(st.student.data(), x.features, {1, 2});
    REQUIRE(logits.rows() == 2);
    REQUIRE(logits.cols() == cfg.vocab_size);
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const Eigen::RowVectorXd e = (logits.row(r).array() - logits.row(r).maxCoeff()).exp();
        REQUIRE(std::abs(e.sum() / e.sum() - 1.0) < 1e-12);
        Eigen::Index a, b;
        logits.row(r).maxCoeff(&a);
        (logits.row(r).array() + 3.0).maxCoeff(&b);
        REQUIRE(a == b);
    }
    // Untied: the head has its own tensor, and changing it leaves the embeddings alone.
    const Layout layout(cfg);
    REQUIRE(layout.at("mlm.w").offset != layout.at("tok_emb").offset);
    const auto& w = layout.at("mlm.w");
    const auto& bias = layout.at("mlm.b");
    std::fill(st.student.begin() + static_cast<std::ptrdiff_t>(w.offset),
              st.student.begin() + static_cast<std::ptrdiff_t>(w.offset + w.size()), 0.0);
    std::fill(st.student.begin() + static_cast<std::ptrdiff_t>(bias.offset),
              st.student.begin() + static_cast<std::ptrdiff_t>(bias.offset + bias.size()), 0.0);
    const auto z = net.mlm_logits(st.student.data(), x.features, {1});
    REQUIRE(z.cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(net.encode(st.student.data(), {0, 9, 10, 1}, {}).pooled == x.pooled);
}

TEST_CASE("dim head", "[model]") {
    const auto cfg = tiny();
    const Network<double> net(cfg);
    const Layout layout(cfg);
    auto st = init<double>(cfg, 2, 0.3);
    auto zero_tensor = [&](const char* name) {
        const auto& t = layout.at(name);
        for (std::size_t i = t.offset; i < t.offset + t.size(); ++i) st.student[i] = 0.0;
    };
    const auto x = net.encode(st.student.data(), {0, 9, 10, 1}, {}).pooled;
    const auto p0 = net.dim_score(st.student.data(), x);
    REQUIRE(p0 > 0.0);
    REQUIRE(p0 < 1.0);

    zero_tensor("dim.fc.b");
    zero_tensor("dim.cls.b");
    const double before = net.dim_score(st.student.data(), x);
    const auto& fc = layout.at("dim.fc.w");
    const auto& cls = layout.at("dim.cls.w");
    for (std::size_t i = fc.offset; i < fc.offset + fc.size(); ++i) st.student[i] *= 2.0;
    for (std::size_t i = cls.offset; i < cls.offset + cls.size(); ++i) st.student[i] *= 0.5;
    REQUIRE(net.dim_score(st.student.data(), x) == Catch::Approx(before).epsilon(1e-12));

    zero_tensor("dim.fc.w");
    zero_tensor("dim.cls.w");
    REQUIRE(net.dim_score(st.student.data(), x) == 0.5);
}

TEST_CASE("ema update", "[model]") {
    auto st = init<double>(tiny(), 3);
    for (auto& v : st.student) v += 0.25;
    const auto teacher = st.teacher;
    ema_update(st, 1.0);
    REQUIRE(st.teacher == teacher);
    const auto student = st.student;
    ema_update(st, 0.0);
    REQUIRE(st.teacher == st.student);
    REQUIRE(st.student == student);

    ModelState<double> s{tiny(), {1.0, 1.0}, {0.0, 0.0}};
    ema_update(s, 0.999);
    REQUIRE(s.teacher[0] == Catch::Approx(0.001).epsilon(1e-12));
    REQUIRE(param_distance(s) == Catch::Approx(std::sqrt(2.0) * 0.999).epsilon(1e-12));
}

TEST_CASE("backward of a zero upstream is zero", "[model]") {
    const auto cfg = tiny();
    const Network<double> net(cfg);
    const auto st = init<double>(cfg, 1, 0.3);
    EncodeTrace<double> trace;
    net.encode(st.student.data(), {0, 9, 10, 1}, {}, &trace);
    std::vector<double> g(st.student.size(), 0.0);
    net.encode_backward(st.student.data(), trace, Mat<double>::Zero(4, cfg.dim), Vec<double>::Zero(cfg.dim), g.data());
    REQUIRE(std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("pooled gradient matches finite differences", "[model]") {
    const auto cfg = tiny();
    const Network<double> net(cfg);
    const Layout layout(cfg);
    const auto st = init<double>(cfg, 6, 0.3);
    const std::vector<int> ids = {0, 9, 10, 11, 2, 12, 1};
    Vec<double> w(cfg.dim);
    for (int i = 0; i < cfg.dim; ++i) w(i) = 0.3 * (i - 3.5);
    auto loss = [&](const std::vector<double>& p, double* grad) {
        EncodeTrace<double> trace;
        const auto r = net.encode(p.data(), ids, {}, grad ? &trace : nullptr);
        if (grad) net.encode_backward(p.data(), trace, Mat<double>(), w, grad);
        return r.pooled.dot(w);
    };
    const auto errs = oracle::fd_check(layout, {st.student.begin(), st.student.end()}, loss);
    for (const auto& e : errs) {
        INFO(e.name << " rel " << e.rel_error);
        if (e.name.starts_with("tok_emb") || e.name.starts_with("pos_emb") || e.name.starts_with("layer") ||
            e.name.starts_with("final_ln")) {
            CHECK(e.rel_error < 1e-4);
        } else {
            CHECK(e.grad_norm == 0.0);  // heads are not on this path
        }
    }
}
