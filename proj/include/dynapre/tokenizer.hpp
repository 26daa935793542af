// Copyright 2026 The dynapre Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Word-level tokenizer with fixed special tokens, and input assembly
// (prefix, code, <SEP>, test-case prompt, <EOS>) under token budgets.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dynapre::tok {

inline constexpr int kBos = 0;
inline constexpr int kEos = 1;
inline constexpr int kSep = 2;
inline constexpr int kMask = 3;
inline constexpr int kPad = 4;
inline constexpr int kUnk = 5;
inline constexpr int kEncoderOnly = 6;
inline constexpr int kNumSpecial = 7;

inline constexpr std::array<std::string_view, kNumSpecial> kSpecialTokens = {
    "<BOS>", "<EOS>", "<SEP>", "<MASK>", "<PAD>", "<UNK>", "<ENCODER-ONLY>"};

// Surrogate for integer literals with |value| > 999 (and for digit runs that
// do not fit in 64 bits). Counted like any ordinary token.
inline constexpr std::string_view kNumToken = "<NUM>";

inline bool is_special(int id) { return id >= 0 && id < kNumSpecial; }

class UnknownId : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class AssemblyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Splits text into tokens: whitespace separates, each punctuation character
/// of (),;{}=<>!+-*/% is its own token except that <=, >=, == and != are
/// kept whole. Special-token literals such as "<SEP>" are recognized before
/// punctuation splitting. Large integer literals become <NUM>.
std::vector<std::string> split(std::string_view text);

class Vocab {
public:
    Vocab();  // specials only

    static Vocab build(const std::vector<std::string>& texts);
    static Vocab from_json(const std::string& text);
    static Vocab load(const std::filesystem::path& path);

    std::string to_json() const;  // {"token": id, ...}, sorted keys
    void save(const std::filesystem::path& path) const;
    // Hex SHA-256 over to_json().
    std::string hash() const;

    int size() const { return static_cast<int>(tokens_.size()); }
    int id(const std::string& token) const;  // kUnk when absent
    const std::string& token(int id) const;  // throws UnknownId
    std::vector<int> encode(std::string_view text) const;

    bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

private:
    void add(const std::string& token);
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
};

std::string decode(const std::vector<int>& ids, const Vocab& vocab);

enum class PrefixMode { BertStyle, UnixStyle };

struct AssembledInput {
    std::vector<int> ids;
    std::pair<int, int> code_span{0, 0};      // [start, end)
    std::pair<int, int> testcase_span{0, 0};  // [start, end)
    std::vector<std::uint8_t> maskable;

    int length() const { return static_cast<int>(ids.size()); }
};

inline constexpr int kDefaultMaxLen = 256;
inline constexpr int kDefaultCodeBudget = 160;

/// prefix, code (<= code_budget tokens), <SEP>, prompt (fills up to
/// max_len - 1), <EOS>. No padding.
AssembledInput assemble(const Vocab& vocab, std::string_view code_text, std::string_view prompt_text,
                        PrefixMode mode, int max_len = kDefaultMaxLen,
                        int code_budget = kDefaultCodeBudget);

/// prefix, text (fills up to max_len - 1), <EOS>. The text occupies
/// testcase_span; code_span is empty. Used when test cases are encoded
/// without their code.
AssembledInput assemble_single(const Vocab& vocab, std::string_view text, PrefixMode mode,
                               int max_len = kDefaultMaxLen);

}  // namespace dynapre::tok
