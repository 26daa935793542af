// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0

#include "dynapre/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace dynapre::eval {

using nlohmann::json;

EmbeddingSet EmbeddingSet::subset(const std::vector<std::size_t>& rows) const {
    EmbeddingSet out;
    out.vectors.resize(static_cast<Eigen::Index>(rows.size()), vectors.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.ids.push_back(ids[rows[i]]);
        out.problem_ids.push_back(problem_ids[rows[i]]);
        out.is_defective.push_back(is_defective[rows[i]]);
        out.vectors.row(static_cast<Eigen::Index>(i)) = vectors.row(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
}

EmbeddingSet make_embedding_set(std::vector<std::string> ids, std::vector<std::string> problem_ids,
                                std::vector<bool> is_defective, const Eigen::MatrixXd& raw) {
    const auto n = ids.size();
    if (problem_ids.size() != n || is_defective.size() != n || static_cast<std::size_t>(raw.rows()) != n) {
        throw std::invalid_argument("embedding set fields have different lengths");
    }
    if (std::set<std::string>(ids.begin(), ids.end()).size() != n) {
        throw std::invalid_argument("embedding ids must be unique");
    }
    EmbeddingSet s;
    s.ids = std::move(ids);
    s.problem_ids = std::move(problem_ids);
    s.is_defective = std::move(is_defective);
    s.vectors = raw;
    for (Eigen::Index i = 0; i < s.vectors.rows(); ++i) {
        const double nrm = s.vectors.row(i).norm();
        if (!(nrm > 0.0) || !std::isfinite(nrm)) throw std::invalid_argument("embedding row is zero or non-finite");
        s.vectors.row(i) /= nrm;
    }
    return s;
}

EmbeddingSet embed_corpus(const train::Checkpoint& ck, const std::vector<corpus::CorpusRecord>& records,
                          train::Representation representation) {
    const model::Network<float> net(ck.model.config);
    const auto& c = ck.config;
    const auto mode = train::prefix_mode(representation);
    Eigen::MatrixXd raw(static_cast<Eigen::Index>(records.size()), ck.model.config.dim);
    std::vector<std::string> ids, problems;
    std::vector<bool> defective;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto in = tok::assemble(ck.vocab, train::code_text(r, representation), "", mode, c.max_len,
                                      c.code_budget);
        const auto enc = net.encode(ck.model.student.data(), in.ids, model::EncodeOptions{});
        raw.row(static_cast<Eigen::Index>(i)) = enc.pooled.cast<double>();
        ids.push_back(r.sample_id);
        problems.push_back(r.problem_id);
        defective.push_back(r.is_defective);
    }
    return make_embedding_set(std::move(ids), std::move(problems), std::move(defective), raw);
}

void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < set.size(); ++i) {
        std::vector<double> v(static_cast<std::size_t>(set.vectors.cols()));
        for (Eigen::Index k = 0; k < set.vectors.cols(); ++k) v[static_cast<std::size_t>(k)] = set.vectors(static_cast<Eigen::Index>(i), k);
        f << json{{"id", set.ids[i]},
                  {"problem_id", set.problem_ids[i]},
                  {"is_defective", static_cast<bool>(set.is_defective[i])},
                  {"vector", v}}
                 .dump()
          << '\n';
    }
}

EmbeddingSet read_embeddings(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw corpus::FormatError("cannot open " + path.string(), 0);
    std::vector<std::string> ids, problems;
    std::vector<bool> defective;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = json::parse(line);
            ids.push_back(j.at("id").get<std::string>());
            problems.push_back(j.at("problem_id").get<std::string>());
            defective.push_back(j.at("is_defective").get<bool>());
            rows.push_back(j.at("vector").get<std::vector<double>>());
        } catch (const std::exception& e) {
            throw corpus::FormatError(e.what(), line_no);
        }
        if (rows.back().size() != rows.front().size()) throw corpus::FormatError("vector width differs", line_no);
    }
    Eigen::MatrixXd raw(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = 0; k < rows[i].size(); ++k) raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    return make_embedding_set(std::move(ids), std::move(problems), std::move(defective), raw);
}

// ---------------------------------------------------------------------------
// Retrieval

RankingResult mean_ap(const EmbeddingSet& set, std::optional<int> truncate_r) {
    const auto n = set.size();
    if (n < 2) throw std::invalid_argument("mean_ap needs at least 2 samples");
    if (truncate_r && *truncate_r < 1) throw std::invalid_argument("R must be >= 1");
    // Pairwise dots rather than a GEMM: identical rows then give bitwise
    // identical similarities, so exact ties stay ties.
    Eigen::MatrixXd sims(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < sims.rows(); ++i) {
        for (Eigen::Index j = 0; j < sims.cols(); ++j) sims(i, j) = set.vectors.row(i).dot(set.vectors.row(j));
    }
    RankingResult res;
    res.r = truncate_r;
    res.ap.resize(n, 0.0);
    std::vector<std::size_t> cand;
    for (std::size_t q = 0; q < n; ++q) {
        cand.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != q) cand.push_back(j);
        }
        std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
            const double sa = sims(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(a));
            const double sb = sims(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(b));
            if (sa != sb) return sa > sb;
            return set.ids[a] < set.ids[b];
        });
        auto relevant = [&](std::size_t j) {
            return !set.is_defective[q] && !set.is_defective[j] && set.problem_ids[j] == set.problem_ids[q];
        };
        std::size_t total_rel = 0;
        for (auto j : cand) total_rel += relevant(j);
        if (total_rel == 0) continue;
        const std::size_t depth = truncate_r ? std::min(cand.size(), static_cast<std::size_t>(*truncate_r)) : cand.size();
        // Extended precision so that small worked cases round like the exact
        // fraction.
        long double acc = 0.0L;
        std::size_t hits = 0;
        for (std::size_t k = 0; k < depth; ++k) {
            if (relevant(cand[k])) {
                ++hits;
                acc += static_cast<long double>(hits) / static_cast<long double>(k + 1);
            }
        }
        const std::size_t denom = truncate_r ? std::min(total_rel, static_cast<std::size_t>(*truncate_r)) : total_rel;
        res.ap[q] = static_cast<double>(acc / static_cast<long double>(denom));
    }
    res.map = std::accumulate(res.ap.begin(), res.ap.end(), 0.0) / static_cast<double>(n);
    return res;
}

int clone_r(const EmbeddingSet& set) {
    std::map<std::string, int> counts;
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (!set.is_defective[i]) ++counts[set.problem_ids[i]];
    }
    if (counts.empty()) throw std::invalid_argument("no non-defective samples");
    int smallest = counts.begin()->second;
    for (const auto& [_, c] : counts) smallest = std::min(smallest, c);
    return std::clamp(smallest - 1, 1, 50);
}

// ---------------------------------------------------------------------------
// Probe

ProbeResult linear_probe_defect(const EmbeddingSet& train_set, const EmbeddingSet& test_set, const ProbeOptions& opts) {
    const auto n = static_cast<Eigen::Index>(train_set.size());
    const auto d = train_set.vectors.cols();
    if (n == 0 || test_set.size() == 0) throw std::invalid_argument("probe needs non-empty train and test sets");
    if (test_set.vectors.cols() != d) throw std::invalid_argument("train and test widths differ");
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = train_set.is_defective[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    if (y.sum() == 0.0 || y.sum() == static_cast<double>(n)) {
        throw DegenerateLabels("probe train set has a single class");
    }

    Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(d);
    Eigen::RowVectorXd sd = Eigen::RowVectorXd::Ones(d);
    if (opts.standardize) {
        mu = train_set.vectors.colwise().mean();
        for (Eigen::Index k = 0; k < d; ++k) {
            const double var = (train_set.vectors.col(k).array() - mu(k)).square().mean();
            sd(k) = var > 1e-24 ? std::sqrt(var) : 1.0;
        }
    }
    auto prep = [&](const Eigen::MatrixXd& x) {
        Eigen::MatrixXd z = x.rowwise() - mu;
        return Eigen::MatrixXd(z.array().rowwise() / sd.array());
    };
    const Eigen::MatrixXd X = prep(train_set.vectors);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    double b = 0.0;
    for (int it = 0; it < opts.iterations; ++it) {
        const Eigen::VectorXd z = (X * w).array() + b;
        const Eigen::VectorXd p = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
        const Eigen::VectorXd err = p - y;
        const Eigen::VectorXd gw = X.transpose() * err / static_cast<double>(n) + opts.l2 * w;
        const double gb = err.mean();
        w -= opts.lr * gw;
        b -= opts.lr * gb;
    }
    const Eigen::MatrixXd Xt = prep(test_set.vectors);
    const Eigen::VectorXd zt = (Xt * w).array() + b;
    std::size_t correct = 0, positives = 0;
    for (Eigen::Index i = 0; i < zt.size(); ++i) {
        const bool pred = 1.0 / (1.0 + std::exp(-zt(i))) > 0.5;
        const bool truth = test_set.is_defective[static_cast<std::size_t>(i)];
        correct += pred == truth;
        positives += truth;
    }
    const double m = static_cast<double>(test_set.size());
    ProbeResult r;
    r.accuracy = static_cast<double>(correct) / m;
    r.majority_baseline = std::max(static_cast<double>(positives), m - static_cast<double>(positives)) / m;
    return r;
}

// ---------------------------------------------------------------------------
// Ablations

const std::vector<std::string>& ablation_modes() {
    static const std::vector<std::string> modes = {"full", "mlm-only", "wo-dim", "wo-did", "mask",
                                                   "match", "both", "holistic", "execution", "contrast"};
    return modes;
}

train::TrainConfig apply_mode(train::TrainConfig c, const std::string& mode) {
    c.use_sim = c.use_dim = c.use_did = true;
    c.sim_span = train::SimSpan::CodeOnly;
    c.did_positive = train::DidPositive::Holistic;
    c.contrast_aug = false;
    if (mode == "full" || mode == "match" || mode == "holistic") {
    } else if (mode == "mlm-only") {
        c.use_dim = c.use_did = false;
    } else if (mode == "wo-dim") {
        c.use_dim = false;
    } else if (mode == "wo-did") {
        c.use_did = false;
    } else if (mode == "mask") {
        c.use_dim = false;
        c.sim_span = train::SimSpan::CodeAndTests;
    } else if (mode == "both") {
        c.sim_span = train::SimSpan::CodeAndTests;
    } else if (mode == "execution") {
        c.did_positive = train::DidPositive::Execution;
    } else if (mode == "contrast") {
        c.contrast_aug = true;
    } else {
        throw std::invalid_argument("unknown ablation mode: " + mode);
    }
    return c;
}

SeedMetrics evaluate_checkpoint(const train::Checkpoint& ck, const std::vector<corpus::CorpusRecord>& train_records,
                                const std::vector<corpus::CorpusRecord>& eval_records, double* majority, int* r_used) {
    const auto rep = ck.config.representation;
    const auto eval_set = embed_corpus(ck, eval_records, rep);
    const auto train_set = embed_corpus(ck, train_records, rep);
    SeedMetrics m;
    m.seed = ck.config.rng_seed;
    m.code_search_map = mean_ap(eval_set).map;

    std::vector<std::size_t> clean;
    for (std::size_t i = 0; i < eval_set.size(); ++i) {
        if (!eval_set.is_defective[i]) clean.push_back(i);
    }
    const auto clone_set = eval_set.subset(clean);
    const int r = clone_r(clone_set);
    m.clone_map_at_r = mean_ap(clone_set, r).map;

    const auto probe = linear_probe_defect(train_set, eval_set);
    m.defect_acc = probe.accuracy;
    if (majority) *majority = probe.majority_baseline;
    if (r_used) *r_used = r;
    return m;
}

AblationReport ablation_run(const std::vector<corpus::CorpusRecord>& records, const corpus::SplitSpec& split,
                            const train::TrainConfig& base_config, const std::vector<std::string>& modes,
                            const std::vector<std::uint64_t>& seeds, const ProgressFn& progress) {
    if (modes.empty()) throw std::invalid_argument("no ablation modes given");
    if (seeds.empty()) throw std::invalid_argument("no seeds given");
    if (split.train_problem_ids.empty()) throw std::invalid_argument("split has no train problems");
    const auto train_records = corpus::select_problems(records, split.train_problem_ids);
    const auto eval_records = corpus::select_problems(records, split.eval_problem_ids);
    AblationReport rep;
    rep.seeds = seeds;
    rep.base_config = base_config;
    for (const auto& mode : modes) {
        ModeReport mr;
        mr.mode = mode;
        for (auto seed : seeds) {
            auto cfg = apply_mode(base_config, mode);
            cfg.rng_seed = seed;
            const auto ck = train::train(train_records, cfg);
            auto m = evaluate_checkpoint(ck, train_records, eval_records, &rep.majority_baseline, &rep.clone_r);
            m.seed = seed;
            if (progress) progress(mode, seed, m);
            mr.per_seed.push_back(m);
        }
        const double k = static_cast<double>(mr.per_seed.size());
        for (const auto& m : mr.per_seed) {
            mr.code_search_map += m.code_search_map / k;
            mr.clone_map_at_r += m.clone_map_at_r / k;
            mr.defect_acc += m.defect_acc / k;
        }
        rep.modes.push_back(std::move(mr));
    }
    return rep;
}

const ModeReport& AblationReport::at(const std::string& mode) const {
    for (const auto& m : modes) {
        if (m.mode == mode) return m;
    }
    throw std::out_of_range("mode not in report: " + mode);
}

namespace {

std::vector<std::string> ordering(const std::vector<ModeReport>& modes) {
    std::vector<const ModeReport*> sorted;
    for (const auto& m : modes) sorted.push_back(&m);
    std::stable_sort(sorted.begin(), sorted.end(), [](const ModeReport* a, const ModeReport* b) {
        return a->code_search_map > b->code_search_map;
    });
    std::vector<std::string> out;
    for (const auto* m : sorted) out.push_back(m->mode);
    return out;
}

}  // namespace

std::string AblationReport::to_json() const {
    json metrics = json::object();
    json per_seed = json::object();
    json order = json::array();
    for (const auto& m : modes) {
        order.push_back(m.mode);
        metrics[m.mode] = json{{"code_search_map", m.code_search_map},
                               {"clone_map_at_r", m.clone_map_at_r},
                               {"defect_acc", m.defect_acc}};
        json rows = json::array();
        for (const auto& s : m.per_seed) {
            rows.push_back(json{{"seed", s.seed},
                                {"code_search_map", s.code_search_map},
                                {"clone_map_at_r", s.clone_map_at_r},
                                {"defect_acc", s.defect_acc}});
        }
        per_seed[m.mode] = std::move(rows);
    }
    json j{{"modes", std::move(order)},
           {"metrics", std::move(metrics)},
           {"per_seed", std::move(per_seed)},
           {"seeds", seeds},
           {"majority_baseline", majority_baseline},
           {"clone_r", clone_r},
           {"code_search_ordering", ordering(modes)},
           {"base_config", json::parse(train::to_json(base_config))}};
    return j.dump(2) + "\n";
}

std::string AblationReport::to_text() const {
    std::ostringstream os;
    os << std::left << std::setw(12) << "mode" << std::right << std::setw(18) << "code_search_map" << std::setw(17)
       << "clone_map_at_r" << std::setw(13) << "defect_acc" << "\n";
    os << std::fixed << std::setprecision(4);
    for (const auto& m : modes) {
        os << std::left << std::setw(12) << m.mode << std::right << std::setw(18) << m.code_search_map
           << std::setw(17) << m.clone_map_at_r << std::setw(13) << m.defect_acc << "\n";
    }
    os << "majority baseline " << majority_baseline << ", clone R " << clone_r << ", seeds";
    for (auto s : seeds) os << ' ' << s;
    os << "\ncode search ordering:";
    const auto ord = ordering(modes);
    for (std::size_t i = 0; i < ord.size(); ++i) os << (i ? " > " : " ") << ord[i];
    os << "\n";
    return os.str();
}

}  // namespace dynapre::eval
