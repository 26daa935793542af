// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dynapre/trainer.hpp"

using namespace dynapre;
using namespace dynapre::train;

namespace {

const std::vector<corpus::CorpusRecord>& records() {
    static const auto recs = corpus::generate_corpus(4, 3, 1, 9, corpus::GenerateOptions{200});
    return recs;
}

TrainConfig small() {
    TrainConfig c;
    c.steps = 6;
    c.batch_size = 4;
    c.dim = 16;
    c.layers = 1;
    c.heads = 2;
    c.ffn_mult = 2;
    c.max_len = 96;
    c.code_budget = 64;
    c.queue_capacity = 16;
    c.rng_seed = 3;
    return c;
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("dynapre_trainer_" + name);
    std::filesystem::remove_all(p);
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

}  // namespace

TEST_CASE("config json round trip", "[trainer]") {
    auto c = small();
    c.use_dim = false;
    c.sim_span = SimSpan::CodeAndTests;
    c.did_positive = DidPositive::Execution;
    c.representation = Representation::Ast;
    c.pooling = model::Pooling::Bos;
    c.schedule = Schedule::Sum;
    c.temperature = 0.123;
    REQUIRE(config_from_json(to_json(c)) == c);

    const auto j = nlohmann::json::parse(to_json(c));
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    REQUIRE(std::is_sorted(keys.begin(), keys.end()));

    REQUIRE(config_from_json("{}") == TrainConfig{});
    REQUIRE(config_from_json(R"({"steps": 7})").steps == 7);
    REQUIRE_THROWS_AS(config_from_json(R"({"stepz": 7})"), std::invalid_argument);
}

TEST_CASE("full-scale config", "[trainer]") {
    const auto p = paper_config();
    REQUIRE(p.temperature == 0.07);
    REQUIRE(p.momentum == 0.999);
    REQUIRE(p.lr == 2e-5);
    REQUIRE(p.p_match == 0.5);
    REQUIRE(p.mask_rate == 0.15);
}

TEST_CASE("config validation", "[trainer]") {
    REQUIRE_NOTHROW(small().validate());
    auto bad = small();
    bad.temperature = 0.0;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = small();
    bad.momentum = 1.5;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = small();
    bad.batch_size = 0;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = small();
    bad.use_sim = bad.use_dim = bad.use_did = false;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("round robin and batching", "[trainer]") {
    const Trainer t(records(), small());
    REQUIRE(t.objectives_at(0) == std::vector<std::string>{"sim"});
    REQUIRE(t.objectives_at(1) == std::vector<std::string>{"dim"});
    REQUIRE(t.objectives_at(2) == std::vector<std::string>{"did"});
    REQUIRE(t.objectives_at(3) == std::vector<std::string>{"sim"});

    auto c = small();
    c.use_dim = false;
    const Trainer t2(records(), c);
    REQUIRE(t2.objectives_at(1) == std::vector<std::string>{"did"});
    c.schedule = Schedule::Sum;
    const Trainer t3(records(), c);
    REQUIRE(t3.objectives_at(5) == std::vector<std::string>{"sim", "did"});

    // Consecutive batches walk one shuffled permutation per epoch.
    const std::size_t n = records().size();
    const auto per_epoch = static_cast<std::int64_t>(n / 4);
    std::multiset<std::size_t> seen;
    for (std::int64_t s = 0; s < per_epoch; ++s) {
        const auto b = t.batch_indices(s);
        REQUIRE(b == t.batch_indices(s));
        seen.insert(b.begin(), b.end());
    }
    for (auto i : seen) REQUIRE(seen.count(i) == 1);
    REQUIRE(seen.size() == static_cast<std::size_t>(per_epoch * 4));
}

TEST_CASE("step updates teacher by ema and fills the queue", "[trainer]") {
    auto c = small();
    c.momentum = 0.9;
    Trainer t(records(), c);
    for (int s = 0; s < 2; ++s) {
        const auto before = t.state().model.teacher;
        const auto m = t.step();
        REQUIRE(std::isfinite(m.loss));
        REQUIRE(t.state().queue.count() == 0);
        const auto& st = t.state().model;
        for (std::size_t k = 0; k < before.size(); k += 97) {
            const double expect = 0.9 * before[k] + 0.1 * st.student[k];
            REQUIRE(std::abs(st.teacher[k] - expect) < 1e-6);
        }
    }
    const auto m = t.step();
    REQUIRE(m.loss_name == "did");
    REQUIRE(m.loss == 0.0);  // empty queue
    REQUIRE(t.state().queue.count() == 4);
    t.run(6);
    REQUIRE(t.state().step == 6);
    REQUIRE(t.state().queue.count() == 8);
}

TEST_CASE("checkpoint round trip and resume", "[trainer]") {
    const auto c = small();
    const auto straight = train::train(records(), c);

    Trainer first(records(), c);
    first.run(3);
    const auto dir = scratch("resume");
    save_checkpoint(first.state(), dir);
    const auto loaded = load_checkpoint(dir);
    REQUIRE(loaded.config == first.state().config);
    REQUIRE(loaded.step == 3);
    REQUIRE(loaded.model.student == first.state().model.student);
    REQUIRE(loaded.model.teacher == first.state().model.teacher);
    REQUIRE(loaded.adam_m == first.state().adam_m);
    REQUIRE(loaded.adam_v == first.state().adam_v);
    REQUIRE(loaded.queue.buffer() == first.state().queue.buffer());
    REQUIRE(loaded.queue.count() == first.state().queue.count());
    REQUIRE(loaded.vocab.hash() == first.state().vocab.hash());

    Trainer second(records(), loaded);
    second.run(6);
    REQUIRE(second.state().model.student == straight.model.student);
    REQUIRE(second.state().model.teacher == straight.model.teacher);
    REQUIRE(second.state().queue.buffer() == straight.queue.buffer());

    // Different training records cannot resume this checkpoint.
    const auto others = corpus::generate_corpus(2, 2, 0, 77, corpus::GenerateOptions{100});
    REQUIRE_THROWS_AS(Trainer(others, loaded), HashError);
}

TEST_CASE("checkpoint tampering is detected", "[trainer]") {
    Trainer t(records(), small());
    t.run(1);
    const auto dir = scratch("tamper");
    save_checkpoint(t.state(), dir);
    const std::string manifest = slurp(dir / "manifest.json");

    auto j = nlohmann::json::parse(manifest);
    j["format_version"] = kCheckpointVersion + 1;
    spit(dir / "manifest.json", j.dump(2));
    REQUIRE_THROWS_AS(load_checkpoint(dir), VersionError);

    j = nlohmann::json::parse(manifest);
    j["vocab_hash"] = std::string(64, '0');
    spit(dir / "manifest.json", j.dump(2));
    REQUIRE_THROWS_AS(load_checkpoint(dir), HashError);

    spit(dir / "manifest.json", manifest);
    REQUIRE_NOTHROW(load_checkpoint(dir));
    const std::string blob = slurp(dir / "weights.bin");
    spit(dir / "weights.bin", blob.substr(0, blob.size() - 4));
    REQUIRE_THROWS(load_checkpoint(dir));
}

TEST_CASE("same seed gives identical training", "[trainer]") {
    const auto a = train::train(records(), small());
    const auto b = train::train(records(), small());
    REQUIRE(a.model.student == b.model.student);
    auto c = small();
    c.rng_seed = 4;
    REQUIRE(train::train(records(), c).model.student != a.model.student);
}

TEST_CASE("masked token loss drops with the default encoder", "[trainer][slow]") {
    const auto recs = corpus::generate_corpus(12, 6, 1, 11, corpus::GenerateOptions{200});
    TrainConfig c;
    c.use_dim = c.use_did = false;
    c.steps = 500;
    Trainer t(recs, c);
    double first = 0.0;
    double tail = 0.0;
    t.run(c.steps, [&](const StepMetrics& m) {
        REQUIRE(m.loss_name == "sim");
        if (m.step == 0) first = m.loss;
        if (m.step >= c.steps - 20) tail += m.loss / 20.0;
    });
    INFO("first " << first << " last 20 " << tail);
    REQUIRE(tail <= 0.8 * first);
}
