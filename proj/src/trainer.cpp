// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0

#include "dynapre/trainer.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <array>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "dynapre/hash.hpp"
#include "json.hpp"

namespace dynapre::train {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

namespace {

std::string_view sim_span_name(SimSpan s) { return s == SimSpan::CodeOnly ? "code-only" : "code+tests"; }
std::string_view did_positive_name(DidPositive d) { return d == DidPositive::Holistic ? "holistic" : "execution"; }
std::string_view schedule_name(Schedule s) { return s == Schedule::RoundRobin ? "round-robin" : "sum"; }

template <typename E, std::size_t N>
E parse_enum(const std::string& v, const std::array<std::pair<std::string_view, E>, N>& table, const char* key) {
    for (const auto& [name, e] : table) {
        if (name == v) return e;
    }
    throw std::invalid_argument(std::string("bad value for ") + key + ": " + v);
}

}  // namespace

std::string_view representation_name(Representation r) { return r == Representation::Source ? "source" : "ast"; }

tok::PrefixMode prefix_mode(Representation r) {
    return r == Representation::Source ? tok::PrefixMode::BertStyle : tok::PrefixMode::UnixStyle;
}

void TrainConfig::validate() const {
    if (!use_sim && !use_dim && !use_did) throw std::invalid_argument("at least one objective must be enabled");
    if (steps < 0) throw std::invalid_argument("steps must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(lr >= 0.0)) throw std::invalid_argument("lr must be >= 0");
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
    if (!(momentum >= 0.0 && momentum <= 1.0)) throw std::invalid_argument("momentum must be in [0, 1]");
    if (queue_capacity < 1) throw std::invalid_argument("queue_capacity must be >= 1");
    if (!(p_match >= 0.0 && p_match <= 1.0)) throw std::invalid_argument("p_match must be in [0, 1]");
    if (!(mask_rate > 0.0 && mask_rate <= 1.0)) throw std::invalid_argument("mask_rate must be in (0, 1]");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw std::invalid_argument("adam betas must be in [0, 1)");
    }
    if (!(adam_eps > 0.0)) throw std::invalid_argument("adam_eps must be > 0");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
    if (max_cases < 1) throw std::invalid_argument("max_cases must be >= 1");
    if (code_budget < 1 || max_len < code_budget + 8) {
        throw std::invalid_argument("max_len must be >= code_budget + 8");
    }
    model_config(*this, tok::kNumSpecial + 1).validate();
}

TrainConfig paper_config() {
    TrainConfig c;
    c.lr = 2e-5;
    c.temperature = 0.07;
    c.momentum = 0.999;
    return c;
}

model::ModelConfig model_config(const TrainConfig& c, int vocab_size) {
    model::ModelConfig m;
    m.dim = c.dim;
    m.layers = c.layers;
    m.heads = c.heads;
    m.ffn_mult = c.ffn_mult;
    m.max_len = c.max_len;
    m.vocab_size = vocab_size;
    m.pooling = c.pooling;
    m.dropout = c.dropout;
    return m;
}

namespace {

json config_json(const TrainConfig& c) {
    return json{{"steps", c.steps},
                {"batch_size", c.batch_size},
                {"lr", c.lr},
                {"adam_betas", {c.adam_beta1, c.adam_beta2}},
                {"adam_eps", c.adam_eps},
                {"weight_decay", c.weight_decay},
                {"temperature", c.temperature},
                {"momentum", c.momentum},
                {"queue_capacity", c.queue_capacity},
                {"p_match", c.p_match},
                {"mask_rate", c.mask_rate},
                {"use_sim", c.use_sim},
                {"use_dim", c.use_dim},
                {"use_did", c.use_did},
                {"sim_span", sim_span_name(c.sim_span)},
                {"did_positive", did_positive_name(c.did_positive)},
                {"contrast_aug", c.contrast_aug},
                {"representation", representation_name(c.representation)},
                {"pooling", model::pooling_name(c.pooling)},
                {"rng_seed", c.rng_seed},
                {"schedule", schedule_name(c.schedule)},
                {"dim", c.dim},
                {"layers", c.layers},
                {"heads", c.heads},
                {"ffn_mult", c.ffn_mult},
                {"max_len", c.max_len},
                {"code_budget", c.code_budget},
                {"dropout", c.dropout},
                {"max_cases", c.max_cases}};
}

TrainConfig config_from(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    const json known = config_json(TrainConfig{});
    for (const auto& [k, _] : j.items()) {
        if (!known.contains(k)) throw std::invalid_argument("unknown config key: " + k);
    }
    TrainConfig c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("steps", c.steps);
    get("batch_size", c.batch_size);
    get("lr", c.lr);
    if (j.contains("adam_betas")) {
        const auto b = j.at("adam_betas").get<std::vector<double>>();
        if (b.size() != 2) throw std::invalid_argument("adam_betas must have two entries");
        c.adam_beta1 = b[0];
        c.adam_beta2 = b[1];
    }
    get("adam_eps", c.adam_eps);
    get("weight_decay", c.weight_decay);
    get("temperature", c.temperature);
    get("momentum", c.momentum);
    get("queue_capacity", c.queue_capacity);
    get("p_match", c.p_match);
    get("mask_rate", c.mask_rate);
    get("use_sim", c.use_sim);
    get("use_dim", c.use_dim);
    get("use_did", c.use_did);
    get("contrast_aug", c.contrast_aug);
    get("rng_seed", c.rng_seed);
    get("dim", c.dim);
    get("layers", c.layers);
    get("heads", c.heads);
    get("ffn_mult", c.ffn_mult);
    get("max_len", c.max_len);
    get("code_budget", c.code_budget);
    get("dropout", c.dropout);
    get("max_cases", c.max_cases);
    if (j.contains("sim_span")) {
        c.sim_span = parse_enum<SimSpan, 2>(j.at("sim_span").get<std::string>(),
                                            {{{"code-only", SimSpan::CodeOnly}, {"code+tests", SimSpan::CodeAndTests}}},
                                            "sim_span");
    }
    if (j.contains("did_positive")) {
        c.did_positive = parse_enum<DidPositive, 2>(
            j.at("did_positive").get<std::string>(),
            {{{"holistic", DidPositive::Holistic}, {"execution", DidPositive::Execution}}}, "did_positive");
    }
    if (j.contains("representation")) {
        c.representation = parse_enum<Representation, 2>(
            j.at("representation").get<std::string>(),
            {{{"source", Representation::Source}, {"ast", Representation::Ast}}}, "representation");
    }
    if (j.contains("pooling")) c.pooling = model::pooling_from_name(j.at("pooling").get<std::string>());
    if (j.contains("schedule")) {
        c.schedule = parse_enum<Schedule, 2>(j.at("schedule").get<std::string>(),
                                             {{{"round-robin", Schedule::RoundRobin}, {"sum", Schedule::Sum}}},
                                             "schedule");
    }
    c.validate();
    return c;
}

}  // namespace

std::string to_json(const TrainConfig& c) { return config_json(c).dump(2); }

TrainConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        return config_from(j);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("bad config value: ") + e.what());
    }
}

int thread_count() {
    const char* env = std::getenv("DYNAPRE_THREADS");
    if (!env || !*env) return 1;
    const int n = std::atoi(env);
    return n >= 1 ? n : 1;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

struct Section {
    std::string prefix;
    const model::ParamVec<float>* data;
};

model::ModelConfig model_config_from(const json& j) {
    model::ModelConfig m;
    m.dim = j.at("dim").get<int>();
    m.layers = j.at("layers").get<int>();
    m.heads = j.at("heads").get<int>();
    m.ffn_mult = j.at("ffn_mult").get<int>();
    m.max_len = j.at("max_len").get<int>();
    m.vocab_size = j.at("vocab_size").get<int>();
    m.pooling = model::pooling_from_name(j.at("pooling").get<std::string>());
    m.dropout = j.at("dropout").get<double>();
    return m;
}

json model_config_json(const model::ModelConfig& m) {
    return json{{"dim", m.dim},           {"layers", m.layers},     {"heads", m.heads},
                {"ffn_mult", m.ffn_mult}, {"max_len", m.max_len},   {"vocab_size", m.vocab_size},
                {"pooling", model::pooling_name(m.pooling)}, {"dropout", m.dropout}};
}

void append_le(std::string& out, const float* p, std::size_t n) {
    static_assert(sizeof(float) == 4);
    const auto start = out.size();
    out.resize(start + 4 * n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t u;
        std::memcpy(&u, p + i, 4);
        char* dst = out.data() + start + 4 * i;
        dst[0] = static_cast<char>(u & 0xff);
        dst[1] = static_cast<char>((u >> 8) & 0xff);
        dst[2] = static_cast<char>((u >> 16) & 0xff);
        dst[3] = static_cast<char>((u >> 24) & 0xff);
    }
}

void read_le(const std::string& blob, std::size_t offset, float* p, std::size_t n) {
    if (offset + 4 * n > blob.size()) throw std::runtime_error("weights.bin is truncated");
    for (std::size_t i = 0; i < n; ++i) {
        const auto* s = reinterpret_cast<const unsigned char*>(blob.data() + offset + 4 * i);
        const std::uint32_t u = static_cast<std::uint32_t>(s[0]) | (static_cast<std::uint32_t>(s[1]) << 8) |
                                (static_cast<std::uint32_t>(s[2]) << 16) | (static_cast<std::uint32_t>(s[3]) << 24);
        std::memcpy(p + i, &u, 4);
    }
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const model::Layout layout(ck.model.config);
    std::string blob;
    json tensors = json::array();
    const std::vector<Section> sections = {{"student/", &ck.model.student},
                                           {"teacher/", &ck.model.teacher},
                                           {"adam_m/", &ck.adam_m},
                                           {"adam_v/", &ck.adam_v}};
    for (const auto& s : sections) {
        if (s.data->size() != layout.total()) throw std::logic_error("checkpoint section has the wrong size");
        for (const auto& t : layout.tensors()) {
            tensors.push_back(json{{"name", s.prefix + t.name}, {"shape", {t.rows, t.cols}}, {"offset", blob.size()}});
            append_le(blob, s.data->data() + t.offset, t.size());
        }
    }
    tensors.push_back(json{{"name", "queue/buffer"},
                           {"shape", {ck.queue.capacity(), ck.queue.dim()}},
                           {"offset", blob.size()}});
    append_le(blob, ck.queue.buffer().data(), ck.queue.buffer().size());

    json manifest{{"format_version", kCheckpointVersion},
                  {"model_config", model_config_json(ck.model.config)},
                  {"train_config", config_json(ck.config)},
                  {"vocab_hash", ck.vocab.hash()},
                  {"step", ck.step},
                  {"queue", {{"capacity", ck.queue.capacity()}, {"dim", ck.queue.dim()},
                             {"count", ck.queue.count()}, {"head", ck.queue.head()}}},
                  {"weights_bytes", blob.size()},
                  {"tensors", std::move(tensors)}};
    write_file_atomic(dir / "weights.bin", blob);
    ck.vocab.save(dir / "vocab.json");
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    json manifest;
    try {
        manifest = json::parse(read_file(dir / "manifest.json"));
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("checkpoint manifest is not valid JSON: ") + e.what());
    }
    const int version = manifest.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
        throw VersionError("checkpoint format version " + std::to_string(version) + ", expected " +
                           std::to_string(kCheckpointVersion));
    }
    Checkpoint ck;
    ck.vocab = tok::Vocab::load(dir / "vocab.json");
    if (ck.vocab.hash() != manifest.at("vocab_hash").get<std::string>()) {
        throw HashError("vocab hash does not match the checkpoint manifest");
    }
    ck.config = config_from(manifest.at("train_config"));
    ck.model.config = model_config_from(manifest.at("model_config"));
    if (ck.model.config.vocab_size != ck.vocab.size()) throw HashError("vocab size does not match the model");
    ck.step = manifest.at("step").get<std::int64_t>();

    const std::string blob = read_file(dir / "weights.bin");
    if (blob.size() != manifest.at("weights_bytes").get<std::size_t>()) {
        throw std::runtime_error("weights.bin size does not match the manifest");
    }
    const model::Layout layout(ck.model.config);
    std::map<std::string, json> by_name;
    for (const auto& t : manifest.at("tensors")) by_name[t.at("name").get<std::string>()] = t;
    auto fill = [&](const std::string& prefix, model::ParamVec<float>& dst) {
        dst.assign(layout.total(), 0.0f);
        for (const auto& t : layout.tensors()) {
            const auto it = by_name.find(prefix + t.name);
            if (it == by_name.end()) throw std::runtime_error("checkpoint is missing tensor " + prefix + t.name);
            const auto shape = it->second.at("shape").get<std::vector<int>>();
            if (shape != std::vector<int>{t.rows, t.cols}) {
                throw std::runtime_error("shape mismatch for tensor " + prefix + t.name);
            }
            read_le(blob, it->second.at("offset").get<std::size_t>(), dst.data() + t.offset, t.size());
        }
    };
    fill("student/", ck.model.student);
    fill("teacher/", ck.model.teacher);
    fill("adam_m/", ck.adam_m);
    fill("adam_v/", ck.adam_v);

    const auto& q = manifest.at("queue");
    ck.queue = obj::NegativeQueue(q.at("capacity").get<int>(), q.at("dim").get<int>());
    const auto qit = by_name.find("queue/buffer");
    if (qit == by_name.end()) throw std::runtime_error("checkpoint is missing the queue buffer");
    model::ParamVec<float> qbuf(ck.queue.buffer().size());
    read_le(blob, qit->second.at("offset").get<std::size_t>(), qbuf.data(), qbuf.size());
    ck.queue.restore(std::move(qbuf), q.at("count").get<int>(), q.at("head").get<int>());
    return ck;
}

// ---------------------------------------------------------------------------
// Training

const std::string& code_text(const corpus::CorpusRecord& r, Representation rep) {
    return rep == Representation::Source ? r.source : r.ast_text;
}

tok::Vocab build_training_vocab(const std::vector<corpus::CorpusRecord>& records, int max_cases) {
    std::vector<std::string> texts;
    for (const auto& r : records) {
        texts.push_back(r.source);
        texts.push_back(r.ast_text);
        texts.push_back(corpus::render_testcase_prompt(r.suite, max_cases));
    }
    return tok::Vocab::build(texts);
}

Checkpoint Trainer::fresh(const std::vector<corpus::CorpusRecord>& records, const TrainConfig& config) {
    config.validate();
    if (records.empty()) throw std::invalid_argument("training needs at least one record");
    Checkpoint ck;
    ck.config = config;
    ck.vocab = build_training_vocab(records, config.max_cases);
    ck.model = model::init<float>(model_config(config, ck.vocab.size()), derive_seed({config.rng_seed, 0x1A17ULL}));
    ck.adam_m.assign(ck.model.student.size(), 0.0f);
    ck.adam_v.assign(ck.model.student.size(), 0.0f);
    ck.queue = obj::NegativeQueue(config.queue_capacity, config.dim);
    return ck;
}

Trainer::Trainer(std::vector<corpus::CorpusRecord> train_records, const TrainConfig& config)
    : records_(std::move(train_records)), ck_(fresh(records_, config)), net_(ck_.model.config) {
    prepare();
}

Trainer::Trainer(std::vector<corpus::CorpusRecord> train_records, Checkpoint resume)
    : records_(std::move(train_records)), ck_(std::move(resume)), net_(ck_.model.config) {
    if (records_.empty()) throw std::invalid_argument("training needs at least one record");
    if (build_training_vocab(records_, ck_.config.max_cases).hash() != ck_.vocab.hash()) {
        throw HashError("training records do not reproduce the checkpoint vocabulary");
    }
    prepare();
}

void Trainer::prepare() {
    threads_ = thread_count();
    const auto& c = ck_.config;
    const auto mode = prefix_mode(c.representation);
    for (const auto& r : records_) {
        const auto& code = code_text(r, c.representation);
        prompts_.push_back(corpus::render_testcase_prompt(r.suite, c.max_cases));
        code_in_.push_back(tok::assemble(ck_.vocab, code, "", mode, c.max_len, c.code_budget));
        holistic_in_.push_back(tok::assemble(ck_.vocab, code, prompts_.back(), mode, c.max_len, c.code_budget));
        tests_in_.push_back(tok::assemble_single(ck_.vocab, prompts_.back(), mode, c.max_len));
    }
}

std::vector<std::string> Trainer::objectives_at(std::int64_t step) const {
    const auto& c = ck_.config;
    std::vector<std::string> enabled;
    if (c.use_sim) enabled.emplace_back("sim");
    if (c.use_dim) enabled.emplace_back("dim");
    if (c.use_did) enabled.emplace_back("did");
    if (c.schedule == Schedule::Sum) return enabled;
    return {enabled[static_cast<std::size_t>(step % static_cast<std::int64_t>(enabled.size()))]};
}

std::vector<std::size_t> Trainer::batch_indices(std::int64_t step) const {
    const auto n = static_cast<std::int64_t>(records_.size());
    const auto B = static_cast<std::int64_t>(ck_.config.batch_size);
    std::vector<std::size_t> out;
    std::int64_t cached_epoch = -1;
    std::vector<std::size_t> order;
    for (std::int64_t b = 0; b < B; ++b) {
        const std::int64_t g = step * B + b;
        const std::int64_t epoch = g / n;
        if (epoch != cached_epoch) {
            order.resize(static_cast<std::size_t>(n));
            for (std::int64_t i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i);
            Rng rng(derive_seed({ck_.config.rng_seed, 0xE90CULL, static_cast<std::uint64_t>(epoch)}));
            rng.shuffle(order.begin(), order.end());
            cached_epoch = epoch;
        }
        out.push_back(order[static_cast<std::size_t>(g % n)]);
    }
    return out;
}

double Trainer::run_objective(const std::string& name, const std::vector<std::size_t>& batch, std::int64_t step,
                              model::ParamVec<float>& grad, std::vector<model::Vec<float>>* teacher_out) {
    const auto& c = ck_.config;
    const float w = 1.0f / static_cast<float>(batch.size());
    const std::uint64_t tag = name == "sim" ? 1 : name == "dim" ? 2 : 3;
    const auto mode = prefix_mode(c.representation);
    std::vector<double> losses(batch.size(), 0.0);
    if (teacher_out) teacher_out->assign(batch.size(), model::Vec<float>());

    auto work = [&](std::size_t lo, std::size_t hi, float* g) {
        for (std::size_t b = lo; b < hi; ++b) {
            const std::size_t i = batch[b];
            Rng rng(derive_seed({c.rng_seed, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(b), tag}));
            const model::EncodeOptions opts{true, &rng};
            if (name == "sim") {
                const auto& in = c.sim_span == SimSpan::CodeOnly ? code_in_[i] : holistic_in_[i];
                const auto plan = obj::make_mask_plan(in, ck_.vocab.size(), rng, c.mask_rate);
                losses[b] = obj::loss_sim<float>(net_, ck_.model.student.data(), in, plan, opts, g, w);
            } else if (name == "dim") {
                const auto ex = obj::sample_dim_example(i, records_, c.p_match, rng);
                const auto in = tok::assemble(ck_.vocab, code_text(records_[i], c.representation),
                                              prompts_[ex.suite_index], mode, c.max_len, c.code_budget);
                losses[b] = obj::loss_dim<float>(net_, ck_.model.student.data(), in, ex.label, opts, g, w);
            } else {
                const auto& positive = c.did_positive == DidPositive::Holistic ? holistic_in_[i] : tests_in_[i];
                auto res = obj::loss_did<float>(net_, ck_.model.student.data(), ck_.model.teacher.data(), code_in_[i],
                                                positive, ck_.queue, c.temperature, opts, c.contrast_aug, g, w);
                losses[b] = res.loss;
                if (teacher_out) (*teacher_out)[b] = std::move(res.teacher_vector);
            }
        }
    };

    const auto nthreads = static_cast<std::size_t>(std::min<int>(threads_, static_cast<int>(batch.size())));
    if (nthreads <= 1) {
        work(0, batch.size(), grad.data());
    } else {
        std::vector<model::ParamVec<float>> partial(nthreads, model::ParamVec<float>(grad.size(), 0.0f));
        std::vector<std::thread> pool;
        const std::size_t chunk = (batch.size() + nthreads - 1) / nthreads;
        for (std::size_t t = 0; t < nthreads; ++t) {
            const std::size_t lo = std::min(batch.size(), t * chunk);
            const std::size_t hi = std::min(batch.size(), lo + chunk);
            pool.emplace_back(work, lo, hi, partial[t].data());
        }
        for (auto& th : pool) th.join();
        for (const auto& p : partial) {
            for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += p[k];
        }
    }
    double total = 0.0;
    for (double l : losses) total += l;
    return total / static_cast<double>(batch.size());
}

namespace {

double l2(const model::ParamVec<float>& v) {
    double acc = 0.0;
    for (float x : v) acc += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(acc);
}

}  // namespace

StepMetrics Trainer::step() {
    const auto& c = ck_.config;
    const std::int64_t s = ck_.step;
    const auto batch = batch_indices(s);
    const auto names = objectives_at(s);
    model::ParamVec<float> grad(ck_.model.student.size(), 0.0f);
    std::vector<model::Vec<float>> teacher_vectors;
    bool did_ran = false;
    double total = 0.0;
    for (const auto& name : names) {
        const bool is_did = name == "did";
        const double loss = run_objective(name, batch, s, grad, is_did ? &teacher_vectors : nullptr);
        if (!std::isfinite(loss)) {
            std::ostringstream msg;
            msg << "non-finite " << name << " loss at step " << s << " (student norm " << l2(ck_.model.student)
                << ", teacher norm " << l2(ck_.model.teacher) << ")";
            throw NonFiniteLoss(msg.str());
        }
        did_ran = did_ran || is_did;
        total += loss;
    }
    for (float gk : grad) {
        if (!std::isfinite(gk)) {
            std::ostringstream msg;
            msg << "non-finite gradient at step " << s << " (" << (names.size() == 1 ? names[0] : "sum")
                << ", student norm " << l2(ck_.model.student) << ")";
            throw NonFiniteLoss(msg.str());
        }
    }

    // Adam
    const double t = static_cast<double>(s + 1);
    const float b1 = static_cast<float>(c.adam_beta1);
    const float b2 = static_cast<float>(c.adam_beta2);
    const float corr1 = static_cast<float>(1.0 - std::pow(c.adam_beta1, t));
    const float corr2 = static_cast<float>(1.0 - std::pow(c.adam_beta2, t));
    const float lr = static_cast<float>(c.lr);
    const float eps = static_cast<float>(c.adam_eps);
    const float wd = static_cast<float>(c.weight_decay);
    auto& theta = ck_.model.student;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        float g = grad[k];
        if (wd > 0.0f) g += wd * theta[k];
        ck_.adam_m[k] = b1 * ck_.adam_m[k] + (1.0f - b1) * g;
        ck_.adam_v[k] = b2 * ck_.adam_v[k] + (1.0f - b2) * g * g;
        const float mhat = ck_.adam_m[k] / corr1;
        const float vhat = ck_.adam_v[k] / corr2;
        theta[k] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    model::ema_update(ck_.model, c.momentum);
    if (did_ran) {
        for (const auto& v : teacher_vectors) ck_.queue.push(std::vector<float>(v.data(), v.data() + v.size()));
    }
    ck_.step = s + 1;
    return StepMetrics{s, names.size() == 1 ? names[0] : "sum", total};
}

void Trainer::run(std::int64_t until_step, const StepCallback& cb) {
    while (ck_.step < until_step) {
        const auto m = step();
        if (cb) cb(m);
    }
}

Checkpoint train(const std::vector<corpus::CorpusRecord>& train_records, const TrainConfig& config,
                 const StepCallback& cb) {
    Trainer t(train_records, config);
    t.run(config.steps, cb);
    return t.state();
}

}  // namespace dynapre::train
