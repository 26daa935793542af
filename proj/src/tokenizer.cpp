// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0

#include "dynapre/tokenizer.hpp"

#include <algorithm>
#include <cstring>

#include "dynapre/hash.hpp"
#include "json.hpp"

namespace dynapre::tok {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_punct(char c) { return c != '\0' && std::strchr("(),;{}=<>!+-*/%", c) != nullptr; }

bool is_digit_run(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool is_large_literal(std::string_view s) {
    std::size_t i = 0;
    while (i + 1 < s.size() && s[i] == '0') ++i;
    const auto digits = s.substr(i);
    if (digits.size() > 3) return true;
    return std::stoi(std::string(digits)) > 999;
}

}  // namespace

std::vector<std::string> split(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    auto starts_with_at = [&](std::string_view lit) { return text.substr(i, lit.size()) == lit; };
    while (i < n) {
        const char c = text[i];
        if (is_space(c)) {
            ++i;
            continue;
        }
        if (c == '<') {
            bool matched = false;
            for (auto lit : kSpecialTokens) {
                if (starts_with_at(lit)) {
                    out.emplace_back(lit);
                    i += lit.size();
                    matched = true;
                    break;
                }
            }
            if (!matched && starts_with_at(kNumToken)) {
                out.emplace_back(kNumToken);
                i += kNumToken.size();
                matched = true;
            }
            if (matched) continue;
        }
        if (is_punct(c)) {
            if (i + 1 < n && text[i + 1] == '=' && (c == '<' || c == '>' || c == '=' || c == '!')) {
                out.emplace_back(text.substr(i, 2));
                i += 2;
            } else {
                out.emplace_back(1, c);
                ++i;
            }
            continue;
        }
        std::size_t j = i;
        while (j < n && !is_space(text[j]) && !is_punct(text[j])) ++j;
        const auto word = text.substr(i, j - i);
        if (is_digit_run(word) && is_large_literal(word)) {
            out.emplace_back(kNumToken);
        } else {
            out.emplace_back(word);
        }
        i = j;
    }
    return out;
}

Vocab::Vocab() {
    for (auto s : kSpecialTokens) add(std::string(s));
}

void Vocab::add(const std::string& token) {
    ids_.emplace(token, static_cast<int>(tokens_.size()));
    tokens_.push_back(token);
}

Vocab Vocab::build(const std::vector<std::string>& texts) {
    if (texts.empty()) throw std::invalid_argument("build_vocab needs a non-empty corpus");
    std::map<std::string, long> counts;
    for (const auto& t : texts) {
        for (auto& w : split(t)) ++counts[w];
    }
    for (auto s : kSpecialTokens) counts.erase(std::string(s));
    std::vector<std::pair<std::string, long>> items(counts.begin(), counts.end());
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocab v;
    for (const auto& [w, _] : items) v.add(w);
    return v;
}

Vocab Vocab::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw std::runtime_error("vocab JSON must be an object");
    std::vector<std::string> tokens(j.size());
    std::vector<bool> seen(j.size(), false);
    for (const auto& [tokstr, idv] : j.items()) {
        const auto id = idv.get<long long>();
        if (id < 0 || id >= static_cast<long long>(tokens.size()) || seen[static_cast<std::size_t>(id)]) {
            throw std::runtime_error("vocab ids must be dense and unique");
        }
        seen[static_cast<std::size_t>(id)] = true;
        tokens[static_cast<std::size_t>(id)] = tokstr;
    }
    if (tokens.size() < kNumSpecial) throw std::runtime_error("vocab is missing special tokens");
    for (int i = 0; i < kNumSpecial; ++i) {
        if (tokens[static_cast<std::size_t>(i)] != kSpecialTokens[static_cast<std::size_t>(i)]) {
            throw std::runtime_error("special token id mismatch for " + std::string(kSpecialTokens[i]));
        }
    }
    Vocab v;
    for (std::size_t i = kNumSpecial; i < tokens.size(); ++i) v.add(tokens[i]);
    return v;
}

Vocab Vocab::load(const std::filesystem::path& path) { return from_json(read_file(path)); }

std::string Vocab::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < tokens_.size(); ++i) j[tokens_[i]] = i;
    return j.dump();
}

void Vocab::save(const std::filesystem::path& path) const { write_file_atomic(path, to_json() + "\n"); }

std::string Vocab::hash() const { return sha256_hex(to_json()); }

int Vocab::id(const std::string& token) const {
    const auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
    if (id < 0 || id >= size()) throw UnknownId("token id " + std::to_string(id) + " out of range");
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocab::encode(std::string_view text) const {
    std::vector<int> out;
    for (const auto& w : split(text)) out.push_back(id(w));
    return out;
}

std::string decode(const std::vector<int>& ids, const Vocab& vocab) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ' ';
        out += vocab.token(ids[i]);
    }
    return out;
}

namespace {

void push_prefix(AssembledInput& a, PrefixMode mode) {
    a.ids.push_back(kBos);
    if (mode == PrefixMode::UnixStyle) {
        a.ids.push_back(kEncoderOnly);
        a.ids.push_back(kSep);
    }
}

void finish_mask(AssembledInput& a) {
    a.maskable.assign(a.ids.size(), 0);
    for (auto span : {a.code_span, a.testcase_span}) {
        for (int i = span.first; i < span.second; ++i) {
            a.maskable[static_cast<std::size_t>(i)] = is_special(a.ids[static_cast<std::size_t>(i)]) ? 0 : 1;
        }
    }
}

}  // namespace

AssembledInput assemble(const Vocab& vocab, std::string_view code_text, std::string_view prompt_text,
                        PrefixMode mode, int max_len, int code_budget) {
    if (code_budget < 1 || max_len < code_budget + 8) {
        throw std::invalid_argument("assemble requires max_len >= code_budget + 8");
    }
    auto code = vocab.encode(code_text);
    if (code.empty()) throw AssemblyError("code tokenizes to zero tokens");
    if (static_cast<int>(code.size()) > code_budget) code.resize(static_cast<std::size_t>(code_budget));

    AssembledInput a;
    push_prefix(a, mode);
    a.code_span.first = a.length();
    a.ids.insert(a.ids.end(), code.begin(), code.end());
    a.code_span.second = a.length();
    a.ids.push_back(kSep);

    auto prompt = vocab.encode(prompt_text);
    const int room = max_len - 1 - a.length();
    if (static_cast<int>(prompt.size()) > room) prompt.resize(static_cast<std::size_t>(room));
    a.testcase_span.first = a.length();
    a.ids.insert(a.ids.end(), prompt.begin(), prompt.end());
    a.testcase_span.second = a.length();
    a.ids.push_back(kEos);
    finish_mask(a);
    return a;
}

AssembledInput assemble_single(const Vocab& vocab, std::string_view text, PrefixMode mode, int max_len) {
    if (max_len < 8) throw std::invalid_argument("assemble_single requires max_len >= 8");
    AssembledInput a;
    push_prefix(a, mode);
    a.code_span = {a.length(), a.length()};
    auto body = vocab.encode(text);
    const int room = max_len - 1 - a.length();
    if (static_cast<int>(body.size()) > room) body.resize(static_cast<std::size_t>(room));
    a.testcase_span.first = a.length();
    a.ids.insert(a.ids.end(), body.begin(), body.end());
    a.testcase_span.second = a.length();
    a.ids.push_back(kEos);
    finish_mask(a);
    return a;
}

}  // namespace dynapre::tok
