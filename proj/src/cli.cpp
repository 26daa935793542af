// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0

#include "dynapre/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dynapre/corpus.hpp"
#include "dynapre/evalkit.hpp"
#include "dynapre/fuzzer.hpp"
#include "dynapre/hash.hpp"
#include "dynapre/trainer.hpp"
#include "json.hpp"

namespace dynapre::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view tool_version() { return "0.1.0"; }

namespace {

// Thrown for bad flag values that CLI11 cannot check on its own.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RunManifest {
public:
    explicit RunManifest(std::string subcommand)
        : subcommand_(std::move(subcommand)), start_(std::chrono::steady_clock::now()) {}

    void input(const fs::path& p, const std::string& bytes_hash) { inputs_[p.string()] = bytes_hash; }
    void output(const fs::path& p) { outputs_[p.string()] = sha256_file(p); }
    void seed(const std::string& name, std::uint64_t v) { seeds_[name] = v; }
    void config(json c) { config_ = std::move(c); }

    void write(const fs::path& path) const {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        json j{{"subcommand", subcommand_},
               {"config", config_},
               {"inputs", inputs_},
               {"outputs", outputs_},
               {"tool_version", std::string(tool_version())},
               {"seeds", seeds_},
               {"duration_seconds", secs}};
        write_file_atomic(path, j.dump(2) + "\n");
    }

private:
    std::string subcommand_;
    std::chrono::steady_clock::time_point start_;
    std::map<std::string, std::string> inputs_;
    std::map<std::string, std::string> outputs_;
    std::map<std::string, std::uint64_t> seeds_;
    json config_ = json::object();
};

// Manifest path next to a file output.
fs::path manifest_for_file(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

void require_file(const fs::path& p) {
    if (!fs::is_regular_file(p)) throw corpus::FormatError("no such file: " + p.string(), 0);
}

std::vector<corpus::CorpusRecord> load_corpus(const fs::path& p, RunManifest& m) {
    require_file(p);
    m.input(p, sha256_file(p));
    return corpus::read_corpus(p);
}

corpus::SplitSpec load_split(const fs::path& p, RunManifest& m) {
    require_file(p);
    m.input(p, sha256_file(p));
    return corpus::read_split(p);
}

train::TrainConfig load_config(const std::optional<std::string>& path, RunManifest& m) {
    if (!path) return train::TrainConfig{};
    require_file(*path);
    const auto text = read_file(*path);
    m.input(*path, sha256_hex(text));
    return train::config_from_json(text);
}

eval::EmbeddingSet load_embeddings(const fs::path& p, RunManifest& m) {
    require_file(p);
    m.input(p, sha256_file(p));
    return eval::read_embeddings(p);
}

void write_json(const fs::path& p, const json& j) { write_file_atomic(p, j.dump(2) + "\n"); }

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv) {
    CLI::App app{"dynapre: fuzzing-driven code pre-training lab", "dynapre"};
    app.set_version_flag("--version", std::string(tool_version()));
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    bool seed_given = false;
    auto add_seed = [&](CLI::App* sub) {
        sub->add_option_function<std::uint64_t>(
               "--seed",
               [&](const std::uint64_t& v) {
                   seed = v;
                   seed_given = true;
               },
               "RNG seed (default 0)");
    };

    // gen-corpus
    int problems = 40, variants = 12, mutants = 3, budget = fuzz::kDefaultBudget;
    double eval_fraction = 0.25;
    std::string out_path, split_out;
    auto* gen = app.add_subcommand("gen-corpus", "Generate and fuzz a program corpus");
    gen->add_option("--problems", problems)->check(CLI::PositiveNumber);
    gen->add_option("--variants", variants)->check(CLI::PositiveNumber);
    gen->add_option("--mutants", mutants)->check(CLI::NonNegativeNumber);
    gen->add_option("--budget", budget, "Fuzzing executions per program")->check(CLI::PositiveNumber);
    gen->add_option("--out", out_path, "Corpus JSONL")->required();
    gen->add_option("--split-out", split_out, "Also write a problem-level split");
    gen->add_option("--eval-fraction", eval_fraction)->check(CLI::Range(0.0, 1.0));
    add_seed(gen);

    // fuzz
    std::string corpus_path;
    auto* fz = app.add_subcommand("fuzz", "Re-fuzz every program of a corpus in place");
    fz->add_option("--corpus", corpus_path)->required();
    fz->add_option("--budget", budget)->check(CLI::PositiveNumber);
    fz->add_option("--out", out_path, "Write here instead of in place");
    add_seed(fz);

    // pretrain
    std::optional<std::string> config_path;
    std::string split_path;
    auto* pre = app.add_subcommand("pretrain", "Pre-train an encoder");
    pre->add_option("--config", config_path, "Flat JSON TrainConfig");
    pre->add_option("--corpus", corpus_path)->required();
    pre->add_option("--split", split_path)->required();
    pre->add_option("--out", out_path, "Checkpoint directory")->required();
    add_seed(pre);

    // embed
    std::string ckpt_path, part = "eval";
    auto* emb = app.add_subcommand("embed", "Export frozen code embeddings");
    emb->add_option("--checkpoint", ckpt_path)->required();
    emb->add_option("--corpus", corpus_path)->required();
    emb->add_option("--split", split_path, "Select problems from a split");
    emb->add_option("--part", part, "train, eval or all")->check(CLI::IsMember({"train", "eval", "all"}));
    emb->add_option("--out", out_path, "embeddings.jsonl")->required();

    // eval-*
    std::string emb_path, train_emb_path;
    std::optional<int> r_flag;
    auto* es = app.add_subcommand("eval-search", "Code-to-code search mAP");
    es->add_option("--embeddings", emb_path)->required();
    es->add_option("--out", out_path, "Metrics JSON")->required();
    auto* ec = app.add_subcommand("eval-clone", "Clone detection mAP@R");
    ec->add_option("--embeddings", emb_path)->required();
    ec->add_option("--r", r_flag, "Override R")->check(CLI::PositiveNumber);
    ec->add_option("--out", out_path)->required();
    auto* ed = app.add_subcommand("eval-defect", "Linear probe for defect detection");
    ed->add_option("--train-embeddings", train_emb_path)->required();
    ed->add_option("--embeddings", emb_path, "Test embeddings")->required();
    ed->add_option("--out", out_path)->required();

    // ablate
    std::string modes_flag = "full,mlm-only", seeds_flag;
    auto* ab = app.add_subcommand("ablate", "Train and evaluate a set of objective ablations");
    ab->add_option("--config", config_path);
    ab->add_option("--corpus", corpus_path)->required();
    ab->add_option("--split", split_path)->required();
    ab->add_option("--modes", modes_flag, "Comma-separated modes");
    ab->add_option("--seeds", seeds_flag, "Comma-separated seeds (default: --seed)");
    ab->add_option("--out", out_path, "Report directory")->required();
    add_seed(ab);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cerr << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        std::cerr << tool_version() << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    RunManifest manifest(name);
    manifest.seed("seed", seed);

    try {
        if (name == "gen-corpus") {
            corpus::GenerateOptions opts;
            opts.fuzz_budget = budget;
            corpus::GenerateStats stats;
            const auto recs = corpus::generate_corpus(problems, variants, mutants, seed, opts, &stats);
            corpus::write_corpus(recs, out_path);
            manifest.config(json{{"problems", problems},
                                 {"variants", variants},
                                 {"mutants", mutants},
                                 {"budget", budget},
                                 {"eval_fraction", eval_fraction}});
            manifest.seed("fuzz_seed", corpus::corpus_fuzz_seed(seed));
            manifest.output(out_path);
            if (!split_out.empty()) {
                const auto split = corpus::split_by_problem(recs, eval_fraction, seed);
                corpus::write_split(split, split_out);
                manifest.output(split_out);
            }
            std::cerr << "wrote " << recs.size() << " records (" << stats.dropped_mutants << " mutants dropped)\n";
            manifest.write(manifest_for_file(out_path));
        } else if (name == "fuzz") {
            auto recs = load_corpus(corpus_path, manifest);
            corpus::refuzz_corpus(recs, budget, seed);
            const fs::path dst = out_path.empty() ? fs::path(corpus_path) : fs::path(out_path);
            corpus::write_corpus(recs, dst);
            manifest.config(json{{"budget", budget}});
            manifest.output(dst);
            manifest.write(manifest_for_file(dst));
        } else if (name == "pretrain") {
            auto cfg = load_config(config_path, manifest);
            if (seed_given) cfg.rng_seed = seed;
            cfg.validate();
            const auto recs = load_corpus(corpus_path, manifest);
            const auto split = load_split(split_path, manifest);
            const auto train_recs = corpus::select_problems(recs, split.train_problem_ids);
            if (train_recs.empty()) throw corpus::FormatError("split selects no training records", 0);
            manifest.config(json::parse(train::to_json(cfg)));
            manifest.seed("seed", cfg.rng_seed);
            const auto ck = train::train(train_recs, cfg, [&](const train::StepMetrics& m) {
                if ((m.step + 1) % 100 == 0 || m.step + 1 == cfg.steps) {
                    std::cerr << "step " << m.step + 1 << "/" << cfg.steps << " " << m.loss_name << " " << m.loss
                              << "\n";
                }
            });
            train::save_checkpoint(ck, out_path);
            manifest.output(fs::path(out_path) / "manifest.json");
            manifest.output(fs::path(out_path) / "weights.bin");
            manifest.output(fs::path(out_path) / "vocab.json");
            manifest.write(fs::path(out_path) / "run_manifest.json");
        } else if (name == "embed") {
            if (!fs::is_directory(ckpt_path)) throw corpus::FormatError("no such checkpoint: " + ckpt_path, 0);
            for (const char* f : {"manifest.json", "weights.bin", "vocab.json"}) {
                const auto p = fs::path(ckpt_path) / f;
                manifest.input(p, sha256_file(p));
            }
            const auto ck = train::load_checkpoint(ckpt_path);
            auto recs = load_corpus(corpus_path, manifest);
            if (!split_path.empty() && part != "all") {
                const auto split = load_split(split_path, manifest);
                recs = corpus::select_problems(recs, part == "train" ? split.train_problem_ids
                                                                     : split.eval_problem_ids);
            }
            const auto set = eval::embed_corpus(ck, recs, ck.config.representation);
            eval::write_embeddings(set, out_path);
            manifest.config(json{{"part", split_path.empty() ? std::string("all") : part},
                                  {"representation", std::string(train::representation_name(ck.config.representation))}});
            manifest.output(out_path);
            manifest.write(manifest_for_file(out_path));
        } else if (name == "eval-search") {
            const auto set = load_embeddings(emb_path, manifest);
            const auto r = eval::mean_ap(set);
            write_json(out_path, json{{"code_search_map", r.map}, {"queries", set.size()}});
            manifest.output(out_path);
            manifest.write(manifest_for_file(out_path));
        } else if (name == "eval-clone") {
            const auto all = load_embeddings(emb_path, manifest);
            std::vector<std::size_t> clean;
            for (std::size_t i = 0; i < all.size(); ++i) {
                if (!all.is_defective[i]) clean.push_back(i);
            }
            const auto set = all.subset(clean);
            const int r = r_flag ? *r_flag : eval::clone_r(set);
            const auto res = eval::mean_ap(set, r);
            write_json(out_path, json{{"clone_map_at_r", res.map}, {"r", r}, {"queries", set.size()}});
            manifest.config(json{{"r", r}});
            manifest.output(out_path);
            manifest.write(manifest_for_file(out_path));
        } else if (name == "eval-defect") {
            const auto tr = load_embeddings(train_emb_path, manifest);
            const auto te = load_embeddings(emb_path, manifest);
            const eval::ProbeOptions opts;
            const auto res = eval::linear_probe_defect(tr, te, opts);
            write_json(out_path, json{{"defect_acc", res.accuracy}, {"majority_baseline", res.majority_baseline}});
            manifest.config(json{{"lr", opts.lr},
                                 {"iterations", opts.iterations},
                                 {"l2", opts.l2},
                                 {"standardize", opts.standardize}});
            manifest.output(out_path);
            manifest.write(manifest_for_file(out_path));
        } else if (name == "ablate") {
            const auto cfg = load_config(config_path, manifest);
            cfg.validate();
            const auto modes = split_list(modes_flag);
            for (const auto& m : modes) {
                const auto& known = eval::ablation_modes();
                if (std::find(known.begin(), known.end(), m) == known.end()) {
                    throw UsageError("unknown mode: " + m);
                }
            }
            std::vector<std::uint64_t> seeds;
            if (seeds_flag.empty()) {
                seeds.push_back(seed);
            } else {
                for (const auto& s : split_list(seeds_flag)) {
                    try {
                        std::size_t used = 0;
                        seeds.push_back(std::stoull(s, &used));
                        if (used != s.size()) throw std::invalid_argument(s);
                    } catch (const std::logic_error&) {
                        throw UsageError("bad seed: " + s);
                    }
                }
            }
            const auto recs = load_corpus(corpus_path, manifest);
            const auto split = load_split(split_path, manifest);
            const auto rep = eval::ablation_run(recs, split, cfg, modes, seeds,
                                                [](const std::string& mode, std::uint64_t s, const eval::SeedMetrics& m) {
                                                    std::cerr << mode << " seed " << s << ": search "
                                                              << m.code_search_map << " clone " << m.clone_map_at_r
                                                              << " defect " << m.defect_acc << "\n";
                                                });
            fs::create_directories(out_path);
            const auto json_path = fs::path(out_path) / "report.json";
            const auto text_path = fs::path(out_path) / "report.txt";
            write_file_atomic(json_path, rep.to_json());
            write_file_atomic(text_path, rep.to_text());
            manifest.config(json::parse(train::to_json(cfg)));
            for (auto s : seeds) manifest.seed("seed_" + std::to_string(s), s);
            manifest.output(json_path);
            manifest.output(text_path);
            manifest.write(fs::path(out_path) / "run_manifest.json");
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << sub->help();
        return kUsage;
    } catch (const train::NonFiniteLoss& e) {
        std::cerr << "training aborted: " << e.what() << "\n";
        return kTrainingAbort;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    }
    return kOk;
}

}  // namespace dynapre::cli
