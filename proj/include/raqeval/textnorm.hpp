#pragma once

// Answer-string normalization and tokenization shared by every lexical metric.

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

namespace raqeval {

enum class NormMode {
    /// lowercase, delete punctuation, drop the articles a/an/the, collapse whitespace
    Answer,
    /// lowercase, delete punctuation, collapse whitespace
    Plain,
};

namespace detail {

inline bool is_deleted_codepoint(UChar32 c) {
    if (c < 0x80) {
        return (c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) || (c >= 0x5b && c <= 0x60) ||
               (c >= 0x7b && c <= 0x7e) || (c < 0x20 && !u_isUWhiteSpace(c)) || c == 0x7f;
    }
    if (u_ispunct(c)) return true;
    const auto category = u_charType(c);
    return category == U_CONTROL_CHAR || category == U_FORMAT_CHAR;
}

inline void append_utf8(std::string& out, UChar32 c) {
    char buf[U8_MAX_LENGTH];
    int32_t len = 0;
    UBool error = false;
    U8_APPEND(buf, len, U8_MAX_LENGTH, c, error);
    if (!error) out.append(buf, static_cast<std::size_t>(len));
}

inline bool is_article(std::string_view token) {
    return token == "a" || token == "an" || token == "the";
}

}  // namespace detail

/// Normalized tokens in input order.
inline std::vector<std::string> token_sequence(std::string_view text, NormMode mode) {
    icu::UnicodeString folded =
        icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    folded.foldCase(U_FOLD_CASE_DEFAULT);

    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (current.empty()) return;
        if (!(mode == NormMode::Answer && detail::is_article(current))) tokens.push_back(std::move(current));
        current.clear();
    };
    for (int32_t i = 0; i < folded.length();) {
        const UChar32 c = folded.char32At(i);
        i += U16_LENGTH(c);
        if (u_isUWhiteSpace(c)) {
            flush();
        } else if (!detail::is_deleted_codepoint(c)) {
            detail::append_utf8(current, c);
        }
    }
    flush();
    return tokens;
}

inline std::string normalize(std::string_view text, NormMode mode) {
    std::string out;
    for (const auto& token : token_sequence(text, mode)) {
        if (!out.empty()) out.push_back(' ');
        out += token;
    }
    return out;
}

/// Multiset of normalized tokens.
class TokenBag {
public:
    TokenBag() = default;

    template <typename Range>
    static TokenBag from_tokens(const Range& tokens) {
        TokenBag bag;
        for (const auto& t : tokens) bag.add(std::string(t));
        return bag;
    }

    void add(std::string token, std::size_t n = 1) {
        if (n == 0) return;
        counts_[std::move(token)] += n;
        total_ += n;
    }

    void merge(const TokenBag& other) {
        for (const auto& [token, n] : other.counts_) add(token, n);
    }

    std::size_t count(const std::string& token) const {
        auto it = counts_.find(token);
        return it == counts_.end() ? 0 : it->second;
    }

    std::size_t total() const noexcept { return total_; }
    bool empty() const noexcept { return total_ == 0; }
    const std::unordered_map<std::string, std::size_t>& counts() const noexcept { return counts_; }

private:
    std::unordered_map<std::string, std::size_t> counts_;
    std::size_t total_ = 0;
};

/// Sum over tokens of the smaller multiplicity.
inline std::size_t overlap(const TokenBag& a, const TokenBag& b) {
    const TokenBag& small = a.counts().size() <= b.counts().size() ? a : b;
    const TokenBag& large = &small == &a ? b : a;
    std::size_t ov = 0;
    for (const auto& [token, n] : small.counts()) {
        const std::size_t m = large.count(token);
        ov += n < m ? n : m;
    }
    return ov;
}

struct Tokenized {
    std::vector<std::string> sequence;
    TokenBag bag;
};

inline Tokenized tokenize(std::string_view text, NormMode mode) {
    Tokenized out;
    out.sequence = token_sequence(text, mode);
    out.bag = TokenBag::from_tokens(out.sequence);
    return out;
}

}  // namespace raqeval
