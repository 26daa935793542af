// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "json.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "dynapre/evalkit.hpp"
#include "dynapre/rng.hpp"
#include "unit/oracles.hpp"

using namespace dynapre;
using namespace dynapre::eval;

namespace {

struct Instance {
    std::vector<std::string> ids, problems;
    std::vector<bool> defective;
    Eigen::MatrixXd raw;
};

// Small dims and coarse values so that ties actually happen.
Instance random_instance(Rng& rng, int n, int problems, int d) {
    Instance in;
    in.raw.resize(n, d);
    for (int i = 0; i < n; ++i) {
        in.ids.push_back("s" + std::to_string(rng.below(1000)) + "_" + std::to_string(i));
        in.problems.push_back("p" + std::to_string(rng.below(static_cast<std::uint64_t>(problems))));
        in.defective.push_back(rng.bernoulli(0.2));
        for (int k = 0; k < d; ++k) in.raw(i, k) = static_cast<double>(rng.below(5)) - 2.0;
        if (in.raw.row(i).norm() == 0.0) in.raw(i, 0) = 1.0;
    }
    return in;
}

EmbeddingSet to_set(const Instance& in) { return make_embedding_set(in.ids, in.problems, in.defective, in.raw); }

EmbeddingSet labelled(const Eigen::MatrixXd& raw, const std::vector<bool>& defective) {
    std::vector<std::string> ids, problems;
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        ids.push_back("x" + std::to_string(100 + i));
        problems.push_back("p");
    }
    return make_embedding_set(ids, problems, defective, raw);
}

train::TrainConfig tiny_config() {
    train::TrainConfig c;
    c.steps = 0;
    c.batch_size = 2;
    c.dim = 16;
    c.layers = 1;
    c.heads = 2;
    c.ffn_mult = 2;
    c.max_len = 96;
    c.code_budget = 64;
    c.queue_capacity = 8;
    return c;
}

}  // namespace

TEST_CASE("worked average precision example", "[evalkit]") {
    // Query q; a (relevant) ranks 1st, b (other problem) 2nd, c (relevant) 3rd.
    Eigen::MatrixXd raw(4, 2);
    raw << 1.0, 0.0,  //
        0.99, 0.1,    //
        0.9, 0.4,     //
        0.5, 0.8;
    const auto set = make_embedding_set({"q", "a", "b", "c"}, {"p1", "p1", "p2", "p1"}, {false, false, false, false},
                                        raw);
    const auto res = mean_ap(set);
    REQUIRE(res.ap[0] == 5.0 / 6.0);
    REQUIRE(res.map == std::accumulate(res.ap.begin(), res.ap.end(), 0.0) / 4.0);
}

TEST_CASE("mean ap matches the brute force oracle", "[evalkit]") {
    Rng rng(2026);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(29));
        const auto in = random_instance(rng, n, 1 + static_cast<int>(rng.below(5)), 1 + static_cast<int>(rng.below(3)));
        const auto set = to_set(in);
        const double expect = oracle::mean_average_precision(set.vectors, in.ids, in.problems, in.defective);
        const auto got = mean_ap(set);
        REQUIRE(std::abs(got.map - expect) < 1e-9);
        for (std::size_t q = 0; q < set.size(); ++q) {
            REQUIRE(got.ap[q] >= 0.0);
            REQUIRE(got.ap[q] <= 1.0);
        }
        const int r = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        const double expect_r = oracle::mean_average_precision(set.vectors, in.ids, in.problems, in.defective, r);
        REQUIRE(std::abs(mean_ap(set, r).map - expect_r) < 1e-9);
    }
}

TEST_CASE("mean ap invariances", "[evalkit]") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        auto in = random_instance(rng, 20, 4, 3);
        const double base = mean_ap(to_set(in)).map;

        // A power of two scales exactly, so even tied instances are unchanged.
        auto scaled = in;
        scaled.raw *= 8.0;
        REQUIRE(mean_ap(to_set(scaled)).map == base);

        // Tie-free vectors under an arbitrary positive scale.
        Instance smooth = in;
        for (Eigen::Index i = 0; i < smooth.raw.rows(); ++i) {
            for (Eigen::Index k = 0; k < smooth.raw.cols(); ++k) smooth.raw(i, k) = rng.normal();
        }
        auto smooth_scaled = smooth;
        smooth_scaled.raw *= 7.3;
        REQUIRE(std::abs(mean_ap(to_set(smooth_scaled)).map - mean_ap(to_set(smooth)).map) < 1e-12);

        std::vector<std::size_t> perm(in.ids.size());
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm.begin(), perm.end());
        Instance shuffled;
        shuffled.raw.resize(in.raw.rows(), in.raw.cols());
        for (std::size_t i = 0; i < perm.size(); ++i) {
            shuffled.ids.push_back(in.ids[perm[i]]);
            shuffled.problems.push_back(in.problems[perm[i]]);
            shuffled.defective.push_back(in.defective[perm[i]]);
            shuffled.raw.row(static_cast<Eigen::Index>(i)) = in.raw.row(static_cast<Eigen::Index>(perm[i]));
        }
        REQUIRE(std::abs(mean_ap(to_set(shuffled)).map - base) < 1e-12);
    }
}

TEST_CASE("mean ap extremes", "[evalkit]") {
    // Exact duplicates within a problem rank perfectly.
    Eigen::MatrixXd raw(6, 3);
    raw << 1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1;
    const auto set = make_embedding_set({"a", "b", "c", "d", "e", "f"}, {"p", "p", "q", "q", "r", "r"},
                                        {false, false, false, false, false, false}, raw);
    REQUIRE(mean_ap(set).map == 1.0);

    // Random vectors give a uniformly random ranking. With R relevant among N
    // candidates the expected AP is (H_N + (R-1)/(N-1) * (N - H_N)) / N.
    double harmonic = 0.0;
    for (int k = 1; k <= 99; ++k) harmonic += 1.0 / k;
    const double chance = (harmonic + 8.0 / 98.0 * (99.0 - harmonic)) / 99.0;
    double mean_over_trials = 0.0;
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd r(100, 16);
        for (Eigen::Index i = 0; i < r.rows(); ++i) {
            for (Eigen::Index k = 0; k < r.cols(); ++k) r(i, k) = rng.normal();
        }
        std::vector<std::string> ids, problems;
        for (int i = 0; i < 100; ++i) {
            ids.push_back("r" + std::to_string(i));
            problems.push_back("p" + std::to_string(i % 10));
        }
        const double m = mean_ap(make_embedding_set(ids, problems, std::vector<bool>(100, false), r)).map;
        REQUIRE(m >= 0.07);
        REQUIRE(m <= 0.2);
        mean_over_trials += m / 20.0;
    }
    REQUIRE(std::abs(mean_over_trials - chance) < 0.01);

    // A defective query has nothing relevant and scores 0.
    const auto with_bug = make_embedding_set({"a", "b", "c"}, {"p", "p", "p"}, {false, false, true}, raw.topRows(3));
    const auto res = mean_ap(with_bug);
    REQUIRE(res.ap[2] == 0.0);
    REQUIRE(res.ap[0] == 1.0);
}

TEST_CASE("embedding set validation", "[evalkit]") {
    Eigen::MatrixXd raw(2, 2);
    raw << 3, 4, 0, 0;
    REQUIRE_THROWS(make_embedding_set({"a", "b"}, {"p", "p"}, {false, false}, raw));
    raw(1, 1) = 2;
    const auto s = make_embedding_set({"a", "b"}, {"p", "p"}, {false, false}, raw);
    REQUIRE(std::abs(s.vectors(0, 0) - 0.6) < 1e-15);
    REQUIRE_THROWS(make_embedding_set({"a", "a"}, {"p", "p"}, {false, false}, raw));
    REQUIRE_THROWS(make_embedding_set({"a"}, {"p", "p"}, {false, false}, raw));
}

TEST_CASE("clone r", "[evalkit]") {
    Eigen::MatrixXd raw = Eigen::MatrixXd::Identity(7, 7);
    const auto s = make_embedding_set({"a", "b", "c", "d", "e", "f", "g"}, {"p", "p", "p", "q", "q", "q", "q"},
                                      {false, false, true, false, false, false, false}, raw);
    REQUIRE(clone_r(s) == 1);
    const auto t = make_embedding_set({"a", "b", "c", "d", "e", "f", "g"}, {"p", "p", "p", "q", "q", "q", "q"},
                                      std::vector<bool>(7, false), raw);
    REQUIRE(clone_r(t) == 2);
}

TEST_CASE("linear probe", "[evalkit]") {
    Eigen::MatrixXd sep(2, 2);
    sep << 1, 0, 0, 1;
    const auto two = labelled(sep, {false, true});
    REQUIRE(linear_probe_defect(two, two).accuracy == 1.0);

    // Identical vectors: the constant predictor can only match the majority.
    Eigen::MatrixXd same = Eigen::MatrixXd::Ones(5, 3);
    const auto flat_train = labelled(same, {true, false, false, true, false});
    const auto flat_test = labelled(same.topRows(4), {false, false, false, true});
    const auto r = linear_probe_defect(flat_train, flat_test);
    REQUIRE(r.majority_baseline == 0.75);
    REQUIRE(r.accuracy == 0.75);

    // One-hot oracle features.
    Rng rng(1);
    Eigen::MatrixXd hot(40, 4);
    std::vector<bool> label;
    for (Eigen::Index i = 0; i < hot.rows(); ++i) {
        const bool bad = rng.bernoulli(0.3);
        label.push_back(bad);
        hot.row(i) << (bad ? 1.0 : 0.0), (bad ? 0.0 : 1.0), 0.1 * rng.normal(), 0.1 * rng.normal();
    }
    const auto oracle_set = labelled(hot, label);
    REQUIRE(linear_probe_defect(oracle_set, oracle_set).accuracy == 1.0);

    REQUIRE_THROWS_AS(linear_probe_defect(labelled(sep, {false, false}), two), DegenerateLabels);
}

TEST_CASE("embedding ignores suites and round trips", "[evalkit]") {
    const auto recs = corpus::generate_corpus(3, 2, 1, 4, corpus::GenerateOptions{100});
    const auto ck = train::train(recs, tiny_config());
    const auto a = embed_corpus(ck, recs, train::Representation::Source);
    auto stripped = recs;
    for (auto& r : stripped) r.suite.cases.clear();
    const auto b = embed_corpus(ck, stripped, train::Representation::Source);
    REQUIRE(a.vectors == b.vectors);
    for (Eigen::Index i = 0; i < a.vectors.rows(); ++i) REQUIRE(std::abs(a.vectors.row(i).norm() - 1.0) < 1e-6);
    REQUIRE(embed_corpus(ck, recs, train::Representation::Ast).vectors != a.vectors);

    const auto path = std::filesystem::temp_directory_path() / "dynapre_embeddings.jsonl";
    write_embeddings(a, path);
    const auto back = read_embeddings(path);
    REQUIRE(back.ids == a.ids);
    REQUIRE(back.problem_ids == a.problem_ids);
    REQUIRE(back.is_defective == a.is_defective);
    REQUIRE((back.vectors - a.vectors).cwiseAbs().maxCoeff() < 1e-12);

    std::ofstream(path, std::ios::app) << "{not json\n";
    REQUIRE_THROWS_AS(read_embeddings(path), corpus::FormatError);
}

TEST_CASE("ablation modes and report shape", "[evalkit]") {
    const auto base = tiny_config();
    REQUIRE(ablation_modes().size() == 10);
    const auto mlm = apply_mode(base, "mlm-only");
    REQUIRE(mlm.use_sim);
    REQUIRE(!mlm.use_dim);
    REQUIRE(!mlm.use_did);
    REQUIRE(!apply_mode(base, "wo-dim").use_dim);
    REQUIRE(apply_mode(base, "wo-dim").use_did);
    REQUIRE(!apply_mode(base, "wo-did").use_did);
    REQUIRE(apply_mode(base, "mask").sim_span == train::SimSpan::CodeAndTests);
    REQUIRE(!apply_mode(base, "mask").use_dim);
    REQUIRE(apply_mode(base, "both").sim_span == train::SimSpan::CodeAndTests);
    REQUIRE(apply_mode(base, "both").use_dim);
    REQUIRE(apply_mode(base, "execution").did_positive == train::DidPositive::Execution);
    REQUIRE(apply_mode(base, "contrast").contrast_aug);
    REQUIRE(apply_mode(base, "full") == base);
    REQUIRE_THROWS_AS(apply_mode(base, "nope"), std::invalid_argument);

    const auto recs = corpus::generate_corpus(6, 3, 1, 8, corpus::GenerateOptions{100});
    const auto split = corpus::split_by_problem(recs, 0.34, 0);
    auto cfg = base;
    cfg.steps = 3;
    const auto rep = ablation_run(recs, split, cfg, {"mlm-only"}, {0});
    REQUIRE(rep.modes.size() == 1);
    const auto j = nlohmann::json::parse(rep.to_json());
    REQUIRE(j.at("metrics").size() == 1);
    const auto& m = j.at("metrics").at("mlm-only");
    REQUIRE(m.size() == 3);
    REQUIRE(m.contains("code_search_map"));
    REQUIRE(m.contains("clone_map_at_r"));
    REQUIRE(m.contains("defect_acc"));
    REQUIRE(rep.to_json() == ablation_run(recs, split, cfg, {"mlm-only"}, {0}).to_json());
    REQUIRE(rep.to_text().find("mlm-only") != std::string::npos);
}
