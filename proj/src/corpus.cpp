// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0

#include "dynapre/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace dynapre::corpus {

using minilang::Node;
using minilang::NodeKind;
using nlohmann::json;

FormatError::FormatError(const std::string& msg, std::size_t line)
    : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}

std::string_view variant_kind_name(VariantKind k) {
    switch (k) {
        case VariantKind::Base: return "base";
        case VariantKind::Renamed: return "renamed";
        case VariantKind::LoopRestructured: return "loop-restructured";
        case VariantKind::Algebraic: return "algebraic";
        case VariantKind::DeadCode: return "dead-code";
        case VariantKind::MutantOffByOne: return "mutant-off-by-one";
        case VariantKind::MutantOpSwap: return "mutant-op-swap";
    }
    return "base";
}

VariantKind variant_kind_from_name(std::string_view name) {
    for (auto k : {VariantKind::Base, VariantKind::Renamed, VariantKind::LoopRestructured,
                   VariantKind::Algebraic, VariantKind::DeadCode, VariantKind::MutantOffByOne,
                   VariantKind::MutantOpSwap}) {
        if (variant_kind_name(k) == name) return k;
    }
    throw std::invalid_argument("unknown variant kind: " + std::string(name));
}

// ---------------------------------------------------------------------------
// Templates

namespace {

std::string substitute(std::string text, const std::map<std::string, std::int64_t>& vars) {
    for (const auto& [key, value] : vars) {
        const std::string pat = "{" + key + "}";
        std::size_t pos = 0;
        while ((pos = text.find(pat, pos)) != std::string::npos) {
            const std::string v = std::to_string(value);
            text.replace(pos, pat.size(), v);
            pos += v.size();
        }
    }
    return text;
}

struct Template {
    std::string name;
    std::vector<std::int64_t> constants;
    std::function<std::vector<std::string>(std::int64_t)> sources;
};

const std::vector<Template>& library() {
    static const std::vector<Template> lib = {
        {"sum", {0, 1, 2, 3, 5, 7, 9},
         [](std::int64_t k) -> std::vector<std::string> {
             if (k == 0) {
                 return {"a = read();\nb = read();\nprint(a + b);",
                         "s = read();\ns = s + read();\nprint(s);"};
             }
             return {substitute("a = read();\nb = read();\nprint(a + b + {K});", {{"K", k}}),
                     substitute("s = read();\ns = s + read();\nprint(s + {K});", {{"K", k}})};
         }},
        {"max", {3, 2, 4, 5},
         [](std::int64_t k) -> std::vector<std::string> {
             return {substitute("m = read();\ni = 1;\nwhile (i < {K}) {\n  x = read();\n"
                                "  if (x > m) { m = x; }\n  i = i + 1;\n}\nprint(m);",
                                {{"K", k}}),
                     substitute("m = read();\ni = {K1};\nwhile (i > 0) {\n  x = read();\n"
                                "  if (m < x) { m = x; }\n  i = i - 1;\n}\nprint(m);",
                                {{"K1", k - 1}})};
         }},
        {"min", {3, 2, 4, 5},
         [](std::int64_t k) -> std::vector<std::string> {
             return {substitute("m = read();\ni = 1;\nwhile (i < {K}) {\n  x = read();\n"
                                "  if (x < m) { m = x; }\n  i = i + 1;\n}\nprint(m);",
                                {{"K", k}}),
                     substitute("m = read();\ni = {K1};\nwhile (i > 0) {\n  x = read();\n"
                                "  if (m > x) { m = x; }\n  i = i - 1;\n}\nprint(m);",
                                {{"K1", k - 1}})};
         }},
        {"gcd", {1, 2, 3, 5},
         [](std::int64_t k) -> std::vector<std::string> {
             return {substitute("a = read();\nb = read();\nif (a < 0) { a = 0 - a; }\n"
                                "if (b < 0) { b = 0 - b; }\nwhile (b != 0) {\n  t = a % b;\n"
                                "  a = b;\n  b = t;\n}\nprint(a * {K});",
                                {{"K", k}}),
                     substitute("a = read();\nb = read();\nif (a < 0) { a = 0 - a; }\n"
                                "if (b < 0) { b = 0 - b; }\nwhile (b > 0) {\n  a = a % b;\n"
                                "  t = a;\n  a = b;\n  b = t;\n}\nprint({K} * a);",
                                {{"K", k}})};
         }},
        {"fibonacci", {1, 2, 3, 4},
         [](std::int64_t k) -> std::vector<std::string> {
             return {substitute("n = read();\na = 0;\nb = {K};\ni = 0;\nwhile (i < n) {\n"
                                "  t = a + b;\n  a = b;\n  b = t;\n  i = i + 1;\n}\nprint(a);",
                                {{"K", k}}),
                     substitute("n = read();\na = 0;\nb = {K};\nwhile (n > 0) {\n"
                                "  b = a + b;\n  a = b - a;\n  n = n - 1;\n}\nprint(a);",
                                {{"K", k}})};
         }},
        {"count-evens", {4, 3, 5, 6},
         [](std::int64_t k) -> std::vector<std::string> {
             return {substitute("c = 0;\ni = 0;\nwhile (i < {K}) {\n  x = read();\n"
                                "  if (x % 2 == 0) { c = c + 1; }\n  i = i + 1;\n}\nprint(c);",
                                {{"K", k}}),
                     substitute("c = {K};\ni = {K};\nwhile (i > 0) {\n  x = read();\n"
                                "  if (x % 2 != 0) { c = c - 1; }\n  i = i - 1;\n}\nprint(c);",
                                {{"K", k}})};
         }},
        {"digit-sum", {10, 8, 7, 9, 6},
         [](std::int64_t k) -> std::vector<std::string> {
             return {substitute("n = read();\nif (n < 0) { n = 0 - n; }\ns = 0;\n"
                                "while (n > 0) {\n  s = s + n % {K};\n  n = n / {K};\n}\nprint(s);",
                                {{"K", k}}),
                     substitute("n = read();\nif (n < 0) { n = 0 - n; }\ns = 0;\n"
                                "while (n != 0) {\n  d = n % {K};\n  s = s + d;\n"
                                "  n = (n - d) / {K};\n}\nprint(s);",
                                {{"K", k}})};
         }},
        {"power", {1, 2, 3, 5},
         [](std::int64_t k) -> std::vector<std::string> {
             return {substitute("b = read();\ne = read();\nr = {K};\nwhile (e > 0) {\n"
                                "  r = r * b;\n  e = e - 1;\n}\nprint(r);",
                                {{"K", k}}),
                     substitute("b = read();\ne = read();\nr = {K};\nwhile (e > 0) {\n"
                                "  if (e % 2 == 1) { r = r * b; }\n  b = b * b;\n  e = e / 2;\n}\n"
                                "print(r);",
                                {{"K", k}})};
         }},
        {"reverse-digits", {10, 8, 6, 9},
         [](std::int64_t k) -> std::vector<std::string> {
             return {substitute("n = read();\nr = 0;\nwhile (n > 0) {\n  r = r * {K} + n % {K};\n"
                                "  n = n / {K};\n}\nprint(r);",
                                {{"K", k}}),
                     substitute("n = read();\nr = 0;\nwhile (n >= 1) {\n  d = n % {K};\n"
                                "  r = r * {K};\n  r = r + d;\n  n = n / {K};\n}\nprint(r);",
                                {{"K", k}})};
         }},
        {"sorted-check", {3, 4, 5, 2},
         [](std::int64_t k) -> std::vector<std::string> {
             return {substitute("p = read();\nok = 1;\ni = 1;\nwhile (i < {K}) {\n  x = read();\n"
                                "  if (x < p) { ok = 0; }\n  p = x;\n  i = i + 1;\n}\nprint(ok);",
                                {{"K", k}}),
                     substitute("p = read();\nbad = 0;\ni = {K1};\nwhile (i > 0) {\n  x = read();\n"
                                "  if (p > x) { bad = bad + 1; }\n  p = x;\n  i = i - 1;\n}\n"
                                "if (bad == 0) { print(1); } else { print(0); }",
                                {{"K1", k - 1}})};
         }},
        {"triangular", {1, 2, 3, 4},
         [](std::int64_t k) -> std::vector<std::string> {
             return {substitute("n = read();\ns = 0;\ni = 1;\nwhile (i <= n) {\n  s = s + i;\n"
                                "  i = i + 1;\n}\nprint(s * {K});",
                                {{"K", k}}),
                     substitute("n = read();\ns = 0;\nwhile (n > 0) {\n  s = s + n;\n"
                                "  n = n - 1;\n}\nprint({K} * s);",
                                {{"K", k}})};
         }},
        {"collatz-step-count", {0, 1, 2, 3},
         [](std::int64_t k) -> std::vector<std::string> {
             return {substitute("n = read();\nc = 0;\nwhile (n > 1) {\n"
                                "  if (n % 2 == 0) { n = n / 2; } else { n = 3 * n + 1; }\n"
                                "  c = c + 1;\n}\nprint(c + {K});",
                                {{"K", k}}),
                     substitute("n = read();\nc = {K};\nwhile (1 < n) {\n"
                                "  if (n % 2 != 0) { n = n * 3 + 1; } else { n = n / 2; }\n"
                                "  c = c + 1;\n}\nprint(c);",
                                {{"K", k}})};
         }},
    };
    return lib;
}

const Template& find_template(const std::string& name) {
    for (const auto& t : library()) {
        if (t.name == name) return t;
    }
    throw std::invalid_argument("unknown template: " + name);
}

}  // namespace

const std::vector<std::string>& template_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& t : library()) out.push_back(t.name);
        return out;
    }();
    return names;
}

std::vector<std::string> template_sources(const std::string& name, std::int64_t constant) {
    return find_template(name).sources(constant);
}

std::vector<std::int64_t> template_constants(const std::string& name) {
    return find_template(name).constants;
}

// ---------------------------------------------------------------------------
// AST utilities

namespace {

Node make_node(NodeKind kind, std::string text = {}, std::int64_t value = 0) {
    Node n;
    n.kind = kind;
    n.text = std::move(text);
    n.value = value;
    return n;
}

Node make_bin(std::string op, Node a, Node b) {
    Node n = make_node(NodeKind::BinOp, std::move(op));
    n.children.push_back(std::move(a));
    n.children.push_back(std::move(b));
    return n;
}

Node make_int(std::int64_t v) { return make_node(NodeKind::IntLit, {}, v); }
Node make_var(std::string name) { return make_node(NodeKind::Var, std::move(name)); }

bool contains_read(const Node& n) {
    if (n.kind == NodeKind::Read) return true;
    return std::any_of(n.children.begin(), n.children.end(), contains_read);
}

void collect_names(const Node& n, std::set<std::string>& out) {
    if (n.kind == NodeKind::Assign || n.kind == NodeKind::Var) out.insert(n.text);
    for (const auto& c : n.children) collect_names(c, out);
}

// Pre-order pointers to nodes satisfying pred.
void collect(Node& n, const std::function<bool(const Node&)>& pred, std::vector<Node*>& out) {
    if (pred(n)) out.push_back(&n);
    for (auto& c : n.children) collect(c, pred, out);
}

// All statement lists (program body and every block).
void collect_bodies(Node& n, std::vector<Node*>& out) {
    if (n.kind == NodeKind::Program || n.kind == NodeKind::Block) out.push_back(&n);
    for (auto& c : n.children) collect_bodies(c, out);
}

const std::vector<std::string>& name_pool() {
    static const std::vector<std::string> pool = {
        "x",   "y",   "z",     "u",    "v",    "w",   "q",   "k",   "j",    "acc",
        "tmp", "cnt", "val",   "res",  "cur",  "num", "lo",  "hi",  "idx",  "total",
        "aux", "lhs", "rhs",   "prev", "best", "out", "sum", "n1",  "n2",   "left",
        "rem", "dig", "count", "base", "buf",  "it",  "fst", "snd", "step", "flag"};
    return pool;
}

std::string fresh_name(const Node& ast, Rng& rng, const std::string& prefix) {
    std::set<std::string> used;
    collect_names(ast, used);
    for (int attempt = 0;; ++attempt) {
        std::string cand = prefix + std::to_string(rng.range(0, 99 + attempt));
        if (!used.count(cand)) return cand;
    }
}

void rename_in(Node& n, const std::map<std::string, std::string>& m) {
    if (n.kind == NodeKind::Assign || n.kind == NodeKind::Var) n.text = m.at(n.text);
    for (auto& c : n.children) rename_in(c, m);
}

}  // namespace

Node rename_variables(const Node& ast, Rng& rng) {
    std::set<std::string> names;
    collect_names(ast, names);
    std::vector<std::string> pool = name_pool();
    rng.shuffle(pool.begin(), pool.end());
    std::map<std::string, std::string> mapping;
    std::size_t next = 0;
    for (const auto& n : names) {
        if (next < pool.size()) {
            mapping[n] = pool[next++];
        } else {
            mapping[n] = "v" + std::to_string(next++);
        }
    }
    Node out = ast;
    rename_in(out, mapping);
    return out;
}

Node algebraic_rewrite(const Node& ast, Rng& rng) {
    Node out = ast;
    struct Rule {
        std::function<bool(const Node&)> applicable;
        std::function<Node(const Node&)> apply;
    };
    static const std::map<std::string, std::string> kMirror = {
        {"<", ">"}, {">", "<"}, {"<=", ">="}, {">=", "<="}, {"==", "=="}, {"!=", "!="}};
    const std::vector<Rule> rules = {
        // a + b -> b + a, a * b -> b * a
        {[](const Node& n) {
             return n.kind == NodeKind::BinOp && (n.text == "+" || n.text == "*") &&
                    !contains_read(n) && n.children[0] != n.children[1];
         },
         [](const Node& n) { return make_bin(n.text, n.children[1], n.children[0]); }},
        // a < b -> b > a (and the other comparisons)
        {[](const Node& n) {
             return n.kind == NodeKind::BinOp && kMirror.count(n.text) && !contains_read(n) &&
                    n.children[0] != n.children[1];
         },
         [](const Node& n) { return make_bin(kMirror.at(n.text), n.children[1], n.children[0]); }},
        // x + x -> 2 * x
        {[](const Node& n) {
             return n.kind == NodeKind::BinOp && n.text == "+" && n.children[0] == n.children[1] &&
                    !contains_read(n);
         },
         [](const Node& n) { return make_bin("*", make_int(2), n.children[0]); }},
        // 2 * x -> x + x
        {[](const Node& n) {
             return n.kind == NodeKind::BinOp && n.text == "*" &&
                    n.children[0].kind == NodeKind::IntLit && n.children[0].value == 2 &&
                    !contains_read(n);
         },
         [](const Node& n) { return make_bin("+", n.children[1], n.children[1]); }},
        // a - b -> a + (0 - b)
        {[](const Node& n) {
             return n.kind == NodeKind::BinOp && n.text == "-" &&
                    !(n.children[0].kind == NodeKind::IntLit && n.children[0].value == 0);
         },
         [](const Node& n) {
             return make_bin("+", n.children[0], make_bin("-", make_int(0), n.children[1]));
         }},
        // x -> x * 1 on a variable operand of arithmetic
        {[](const Node& n) {
             return n.kind == NodeKind::BinOp &&
                    (n.text == "+" || n.text == "-" || n.text == "%" || n.text == "/") &&
                    n.children[1].kind == NodeKind::Var;
         },
         [](const Node& n) {
             return make_bin(n.text, n.children[0], make_bin("*", n.children[1], make_int(1)));
         }},
    };
    const int rewrites = 1 + static_cast<int>(rng.below(3));
    for (int r = 0; r < rewrites; ++r) {
        std::vector<std::pair<Node*, std::size_t>> sites;
        std::vector<Node*> nodes;
        collect(out, [](const Node& n) { return n.kind == NodeKind::BinOp; }, nodes);
        for (Node* n : nodes) {
            for (std::size_t i = 0; i < rules.size(); ++i) {
                if (rules[i].applicable(*n)) sites.emplace_back(n, i);
            }
        }
        if (sites.empty()) break;
        auto [node, rule] = sites[rng.below(sites.size())];
        *node = rules[rule].apply(*node);
    }
    return out;
}

Node insert_dead_code(const Node& ast, Rng& rng) {
    Node out = ast;
    std::set<std::string> names;
    collect_names(out, names);
    std::vector<std::string> vars(names.begin(), names.end());
    std::vector<Node*> bodies;
    collect_bodies(out, bodies);
    Node* body = bodies[rng.below(bodies.size())];

    Node stmt;
    switch (rng.below(3)) {
        case 0: {
            // unused assignment
            stmt = make_node(NodeKind::Assign, fresh_name(out, rng, "dead"));
            Node rhs = vars.empty() ? make_int(rng.range(0, 9))
                                    : make_bin("+", make_var(vars[rng.below(vars.size())]),
                                               make_int(rng.range(1, 9)));
            stmt.children.push_back(std::move(rhs));
            break;
        }
        case 1: {
            // guard that never holds
            stmt = make_node(NodeKind::If);
            const std::int64_t c = rng.range(1, 9);
            stmt.children.push_back(make_bin("==", make_int(c), make_int(c + 1)));
            Node blk = make_node(NodeKind::Block);
            Node pr = make_node(NodeKind::Print);
            pr.children.push_back(make_int(rng.range(0, 99)));
            blk.children.push_back(std::move(pr));
            stmt.children.push_back(std::move(blk));
            break;
        }
        default: {
            // loop whose test is false on entry
            stmt = make_node(NodeKind::While);
            stmt.children.push_back(make_bin("<", make_int(1), make_int(0)));
            Node blk = make_node(NodeKind::Block);
            Node as = make_node(NodeKind::Assign, fresh_name(out, rng, "dead"));
            as.children.push_back(make_int(rng.range(0, 9)));
            blk.children.push_back(std::move(as));
            stmt.children.push_back(std::move(blk));
            break;
        }
    }
    const auto pos = rng.below(body->children.size() + 1);
    body->children.insert(body->children.begin() + static_cast<std::ptrdiff_t>(pos), std::move(stmt));
    return out;
}

std::optional<Node> mutate_program(const Node& ast, VariantKind kind, Rng& rng) {
    Node out = ast;
    std::vector<Node*> sites;
    if (kind == VariantKind::MutantOffByOne) {
        // Comparison boundaries and literal bounds inside comparisons.
        collect(out,
                [](const Node& n) {
                    if (n.kind != NodeKind::BinOp) return false;
                    return n.text == "<" || n.text == ">" || n.text == "<=" || n.text == ">=";
                },
                sites);
        std::vector<Node*> literals;
        collect(out, [](const Node& n) { return n.kind == NodeKind::IntLit; }, literals);
        const std::size_t n_cmp = sites.size();
        sites.insert(sites.end(), literals.begin(), literals.end());
        if (sites.empty()) {
            // Straight-line arithmetic: shift a printed value instead.
            std::vector<Node*> prints;
            collect(out, [](const Node& n) { return n.kind == NodeKind::Print && !n.children.empty(); }, prints);
            if (prints.empty()) return std::nullopt;
            Node& expr = prints[rng.below(prints.size())]->children[0];
            Node one{NodeKind::IntLit, "", 1, {}};
            Node shifted{NodeKind::BinOp, rng.below(2) ? "+" : "-", 0, {std::move(expr), std::move(one)}};
            expr = std::move(shifted);
            return out;
        }
        const auto pick = rng.below(sites.size());
        Node* n = sites[pick];
        if (pick < n_cmp) {
            static const std::map<std::string, std::string> kEdge = {
                {"<", "<="}, {"<=", "<"}, {">", ">="}, {">=", ">"}};
            n->text = kEdge.at(n->text);
        } else {
            n->value = static_cast<std::int64_t>(static_cast<std::uint64_t>(n->value) +
                                                 (rng.below(2) ? 1ULL : ~0ULL));
        }
        return out;
    }
    if (kind == VariantKind::MutantOpSwap) {
        static const std::map<std::string, std::string> kSwap = {
            {"+", "-"}, {"-", "+"},   {"*", "+"},   {"/", "*"},  {"%", "/"},   {"<", ">"},
            {">", "<"}, {"<=", ">="}, {">=", "<="}, {"==", "!="}, {"!=", "=="}};
        collect(out, [](const Node& n) { return n.kind == NodeKind::BinOp; }, sites);
        if (sites.empty()) return std::nullopt;
        Node* n = sites[rng.below(sites.size())];
        n->text = kSwap.at(n->text);
        return out;
    }
    throw std::invalid_argument("mutate_program requires a mutant kind");
}

// ---------------------------------------------------------------------------
// Generation

std::uint64_t corpus_fuzz_seed(std::uint64_t rng_seed) { return derive_seed({rng_seed, 0xF0220ULL}); }

namespace {

struct Candidate {
    minilang::Program program;
    VariantKind kind;
    fuzz::TestSuite suite;
};

CorpusRecord to_record(const Candidate& c, const std::string& problem_id, int index) {
    CorpusRecord r;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%02d", problem_id.c_str(), index);
    r.sample_id = buf;
    r.problem_id = problem_id;
    r.variant_kind = c.kind;
    r.is_defective = is_mutant(c.kind);
    r.source = c.program.source();
    r.ast_text = minilang::serialize_ast(c.program);
    r.suite = c.suite;
    r.suite.program_id = r.sample_id;
    return r;
}

std::string outputs_on(const minilang::Program& p, const std::string& input, std::int64_t limit) {
    return minilang::execute(p, input, limit).output;
}

}  // namespace

std::vector<std::string> discrimination_inputs(const fuzz::TestSuite& base, const fuzz::TestSuite& mutant) {
    std::set<std::string> seen;
    std::vector<std::string> out;
    auto add = [&](const std::string& in) {
        if (seen.insert(in).second) out.push_back(in);
    };
    for (const auto& tc : base.cases) add(tc.input);
    for (const auto& tc : mutant.cases) add(tc.input);
    for (const auto& in : fuzz::seed_inputs()) add(in);
    return out;
}

std::vector<CorpusRecord> generate_corpus(int n_problems, int variants_per_problem,
                                          int mutants_per_problem, std::uint64_t rng_seed,
                                          const GenerateOptions& opts, GenerateStats* stats) {
    if (n_problems < 1) throw std::invalid_argument("n_problems must be >= 1");
    if (variants_per_problem < 1) throw std::invalid_argument("variants_per_problem must be >= 1");
    if (mutants_per_problem < 0) throw std::invalid_argument("mutants_per_problem must be >= 0");

    Rng rng(derive_seed({rng_seed, 0xC0A9ULL}));
    const auto fuzz_seed = corpus_fuzz_seed(rng_seed);
    const auto& lib = library();

    // Per-template constant order: canonical first, remainder shuffled.
    std::vector<std::vector<std::int64_t>> constant_order;
    for (const auto& t : lib) {
        std::vector<std::int64_t> cs = t.constants;
        rng.shuffle(cs.begin() + 1, cs.end());
        constant_order.push_back(std::move(cs));
    }

    auto fuzz_it = [&](const minilang::Program& p) {
        return fuzz::fuzz_program(p, opts.fuzz_budget, fuzz_seed, fuzz::FuzzOptions{opts.step_limit});
    };

    std::vector<CorpusRecord> out;
    GenerateStats local_stats;
    for (int pi = 0; pi < n_problems; ++pi) {
        const std::size_t ti = static_cast<std::size_t>(pi) % lib.size();
        const Template& tpl = lib[ti];
        const auto& consts = constant_order[ti];
        const std::int64_t k =
            consts[(static_cast<std::size_t>(pi) / lib.size()) % consts.size()];
        const auto impls = tpl.sources(k);
        std::vector<Node> impl_asts;
        for (const auto& s : impls) impl_asts.push_back(minilang::parse(s).ast());

        char pid_buf[32];
        std::snprintf(pid_buf, sizeof pid_buf, "p%03d", pi);
        const std::string problem_id = pid_buf;

        std::set<std::string> sources;
        std::vector<Candidate> variants;
        {
            auto base = minilang::from_ast(impl_asts[0]);
            sources.insert(base.source());
            auto suite = fuzz_it(base);
            variants.push_back(Candidate{std::move(base), VariantKind::Base, std::move(suite)});
        }

        static const VariantKind kCycle[] = {VariantKind::Renamed, VariantKind::LoopRestructured,
                                             VariantKind::Algebraic, VariantKind::DeadCode};
        auto draw_variant = [&](VariantKind primary) -> minilang::Program {
            for (int attempt = 0; attempt < 64; ++attempt) {
                Node ast = impl_asts[0];
                if (primary == VariantKind::LoopRestructured || (impl_asts.size() > 1 && rng.bernoulli(0.25))) {
                    ast = impl_asts[1 + rng.below(impl_asts.size() - 1)];
                }
                if (primary == VariantKind::Algebraic || rng.bernoulli(0.4)) ast = algebraic_rewrite(ast, rng);
                if (primary == VariantKind::DeadCode || rng.bernoulli(0.3)) ast = insert_dead_code(ast, rng);
                if (primary == VariantKind::Renamed || rng.bernoulli(0.5)) ast = rename_variables(ast, rng);
                auto prog = minilang::from_ast(ast);
                if (sources.insert(prog.source()).second) return prog;
            }
            throw GenerationError("template '" + tpl.name + "' cannot produce " +
                                  std::to_string(variants_per_problem) + " distinct variants");
        };

        for (int vi = 1; vi < variants_per_problem; ++vi) {
            const VariantKind kind = kCycle[(vi - 1) % 4];
            auto prog = draw_variant(kind);
            auto suite = fuzz_it(prog);
            variants.push_back(Candidate{std::move(prog), kind, std::move(suite)});
        }

        // Every non-mutant must match the base on the union of all their
        // suite inputs; failing variants are redrawn.
        std::vector<int> redraws(variants.size(), 0);
        for (int round = 0;; ++round) {
            std::set<std::string> inputs;
            for (const auto& v : variants) {
                for (const auto& tc : v.suite.cases) inputs.insert(tc.input);
            }
            std::map<std::string, std::string> expected;
            for (const auto& in : inputs) expected[in] = outputs_on(variants[0].program, in, opts.step_limit);
            bool all_ok = true;
            for (std::size_t vi = 1; vi < variants.size(); ++vi) {
                bool ok = true;
                for (const auto& in : inputs) {
                    if (outputs_on(variants[vi].program, in, opts.step_limit) != expected[in]) {
                        ok = false;
                        break;
                    }
                }
                if (ok) continue;
                all_ok = false;
                if (++redraws[vi] > 20) {
                    throw GenerationError("template '" + tpl.name +
                                          "' produced a non-equivalent variant after 20 redraws");
                }
                auto prog = draw_variant(variants[vi].kind);
                auto suite = fuzz_it(prog);
                variants[vi] = Candidate{std::move(prog), variants[vi].kind, std::move(suite)};
            }
            if (all_ok) break;
        }

        std::vector<Candidate> mutants;
        for (int mi = 0; mi < mutants_per_problem; ++mi) {
            const VariantKind kind = mi % 2 == 0 ? VariantKind::MutantOffByOne : VariantKind::MutantOpSwap;
            bool accepted = false;
            for (int attempt = 0; attempt < 20 && !accepted; ++attempt) {
                auto ast = mutate_program(impl_asts[0], kind, rng);
                VariantKind used = kind;
                if (!ast) {
                    used = kind == VariantKind::MutantOffByOne ? VariantKind::MutantOpSwap
                                                               : VariantKind::MutantOffByOne;
                    ast = mutate_program(impl_asts[0], used, rng);
                }
                if (!ast) break;
                auto prog = minilang::from_ast(*ast);
                if (sources.count(prog.source())) continue;
                auto suite = fuzz_it(prog);
                // Branch-free programs keep a single "" case, so the fixed
                // seed inputs are checked too.
                bool differs = false;
                for (const auto& in : discrimination_inputs(variants[0].suite, suite)) {
                    if (outputs_on(prog, in, opts.step_limit) !=
                        outputs_on(variants[0].program, in, opts.step_limit)) {
                        differs = true;
                        break;
                    }
                }
                if (!differs) continue;
                sources.insert(prog.source());
                mutants.push_back(Candidate{std::move(prog), used, std::move(suite)});
                accepted = true;
            }
            if (!accepted) ++local_stats.dropped_mutants;
        }

        int index = 0;
        for (const auto& v : variants) out.push_back(to_record(v, problem_id, index++));
        for (const auto& m : mutants) out.push_back(to_record(m, problem_id, index++));
    }
    if (stats) *stats = local_stats;
    return out;
}

void refuzz_corpus(std::vector<CorpusRecord>& records, int budget, std::uint64_t rng_seed,
                   std::int64_t step_limit) {
    for (auto& r : records) {
        const auto prog = minilang::parse(r.source);
        r.suite = fuzz::fuzz_program(prog, budget, rng_seed, fuzz::FuzzOptions{step_limit});
        r.suite.program_id = r.sample_id;
    }
}

// ---------------------------------------------------------------------------
// Prompts

std::string render_testcase_prompt(const fuzz::TestSuite& suite, int max_cases) {
    if (max_cases < 1) throw std::invalid_argument("max_cases must be >= 1");
    std::string out;
    const std::size_t n = std::min(suite.cases.size(), static_cast<std::size_t>(max_cases));
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += "<SEP>";
        out += "Input is: " + suite.cases[i].input + " ; Output is: " + suite.cases[i].output;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Persistence

std::string record_to_json_line(const CorpusRecord& r) {
    json cases = json::array();
    for (const auto& tc : r.suite.cases) {
        cases.push_back(json{{"input", tc.input},
                             {"output", tc.output},
                             {"status", std::string(minilang::status_name(tc.status))}});
    }
    json j{{"sample_id", r.sample_id},
           {"problem_id", r.problem_id},
           {"variant_kind", std::string(variant_kind_name(r.variant_kind))},
           {"is_defective", r.is_defective},
           {"source", r.source},
           {"ast_text", r.ast_text},
           {"suite", json{{"cases", std::move(cases)}, {"covered_edges", r.suite.covered_edges}}}};
    return j.dump();
}

namespace {

void require_keys(const json& j, std::initializer_list<const char*> keys, std::size_t line,
                  const char* what) {
    if (!j.is_object()) throw FormatError(std::string(what) + " is not an object", line);
    if (j.size() != keys.size()) throw FormatError(std::string(what) + " has unexpected keys", line);
    for (const char* k : keys) {
        if (!j.contains(k)) throw FormatError(std::string(what) + " is missing key '" + k + "'", line);
    }
}

}  // namespace

CorpusRecord record_from_json_line(const std::string& line, std::size_t line_no) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    try {
        require_keys(j, {"sample_id", "problem_id", "variant_kind", "is_defective", "source", "ast_text", "suite"},
                     line_no, "record");
        CorpusRecord r;
        r.sample_id = j.at("sample_id").get<std::string>();
        r.problem_id = j.at("problem_id").get<std::string>();
        r.variant_kind = variant_kind_from_name(j.at("variant_kind").get<std::string>());
        r.is_defective = j.at("is_defective").get<bool>();
        r.source = j.at("source").get<std::string>();
        r.ast_text = j.at("ast_text").get<std::string>();
        const json& s = j.at("suite");
        require_keys(s, {"cases", "covered_edges"}, line_no, "suite");
        for (const auto& c : s.at("cases")) {
            require_keys(c, {"input", "output", "status"}, line_no, "test case");
            r.suite.cases.push_back(fuzz::TestCase{c.at("input").get<std::string>(),
                                                   c.at("output").get<std::string>(),
                                                   minilang::status_from_name(c.at("status").get<std::string>())});
        }
        r.suite.covered_edges = s.at("covered_edges").get<std::vector<int>>();
        r.suite.program_id = r.sample_id;
        if (r.is_defective != is_mutant(r.variant_kind)) {
            throw FormatError("is_defective disagrees with variant_kind", line_no);
        }
        return r;
    } catch (const FormatError&) {
        throw;
    } catch (const std::exception& e) {
        throw FormatError(e.what(), line_no);
    }
}

void write_corpus(const std::vector<CorpusRecord>& records, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (const auto& r : records) f << record_to_json_line(r) << '\n';
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path.string(), 0);
    std::vector<CorpusRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() && f.peek() == std::char_traits<char>::eof()) break;
        out.push_back(record_from_json_line(line, line_no));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splits

SplitSpec split_by_problem(const std::vector<CorpusRecord>& records, double eval_fraction,
                           std::uint64_t rng_seed) {
    if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
        throw std::invalid_argument("eval_fraction must be in (0, 1)");
    }
    std::set<std::string> unique;
    for (const auto& r : records) unique.insert(r.problem_id);
    std::vector<std::string> problems(unique.begin(), unique.end());
    Rng rng(derive_seed({rng_seed, 0x5B117ULL}));
    rng.shuffle(problems.begin(), problems.end());
    const auto n_eval = static_cast<std::size_t>(std::ceil(eval_fraction * static_cast<double>(problems.size())));
    SplitSpec s;
    s.rng_seed = rng_seed;
    const std::size_t cut = problems.size() - std::min(n_eval, problems.size());
    s.train_problem_ids.assign(problems.begin(), problems.begin() + static_cast<std::ptrdiff_t>(cut));
    s.eval_problem_ids.assign(problems.begin() + static_cast<std::ptrdiff_t>(cut), problems.end());
    s.degenerate = s.train_problem_ids.empty() || s.eval_problem_ids.empty();
    return s;
}

void write_split(const SplitSpec& s, const std::filesystem::path& path) {
    json j{{"train_problem_ids", s.train_problem_ids},
           {"eval_problem_ids", s.eval_problem_ids},
           {"rng_seed", s.rng_seed}};
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << j.dump(2) << '\n';
}

SplitSpec read_split(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path.string(), 0);
    json j;
    try {
        j = json::parse(f);
        require_keys(j, {"train_problem_ids", "eval_problem_ids", "rng_seed"}, 1, "split");
        SplitSpec s;
        s.train_problem_ids = j.at("train_problem_ids").get<std::vector<std::string>>();
        s.eval_problem_ids = j.at("eval_problem_ids").get<std::vector<std::string>>();
        s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
        s.degenerate = s.train_problem_ids.empty() || s.eval_problem_ids.empty();
        std::set<std::string> train(s.train_problem_ids.begin(), s.train_problem_ids.end());
        for (const auto& p : s.eval_problem_ids) {
            if (train.count(p)) throw FormatError("problem " + p + " is in both train and eval", 1);
        }
        return s;
    } catch (const FormatError&) {
        throw;
    } catch (const std::exception& e) {
        throw FormatError(e.what(), 1);
    }
}

std::vector<CorpusRecord> select_problems(const std::vector<CorpusRecord>& records,
                                          const std::vector<std::string>& problem_ids) {
    std::set<std::string> wanted(problem_ids.begin(), problem_ids.end());
    std::vector<CorpusRecord> out;
    for (const auto& r : records) {
        if (wanted.count(r.problem_id)) out.push_back(r);
    }
    return out;
}

}  // namespace dynapre::corpus
