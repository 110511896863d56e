#pragma once

// Refusal detection and the irrelevant-passage abstention protocol.

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "raqeval/error.hpp"
#include "raqeval/record.hpp"
#include "raqeval/textnorm.hpp"

namespace raqeval {

/// Phrases whose presence marks a response as a refusal. Stored normalized.
class RefusalLexicon {
public:
    RefusalLexicon() : RefusalLexicon(default_phrases()) {}

    explicit RefusalLexicon(const std::vector<std::string>& phrases) {
        for (const auto& p : phrases) {
            auto tokens = token_sequence(p, NormMode::Answer);
            if (!tokens.empty()) phrases_.push_back(std::move(tokens));
        }
        if (phrases_.empty()) throw Error(ErrorCode::InvalidArgument, "refusal lexicon is empty");
    }

    /// One phrase per line; blank lines are ignored.
    static RefusalLexicon from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::IoError, "cannot open lexicon file " + path);
        std::vector<std::string> phrases;
        for (std::string line; std::getline(in, line);) {
            if (line.find_first_not_of(" \t\r") != std::string::npos) phrases.push_back(line);
        }
        return RefusalLexicon(phrases);
    }

    static std::vector<std::string> default_phrases() {
        return {"I don't know", "I do not know", "unanswerable", "passages do not contain"};
    }

    const std::vector<std::vector<std::string>>& phrases() const noexcept { return phrases_; }

private:
    std::vector<std::vector<std::string>> phrases_;
};

inline bool detect_refusal(std::string_view response, const RefusalLexicon& lexicon = {}) {
    const auto tokens = token_sequence(response, NormMode::Answer);
    return std::any_of(lexicon.phrases().begin(), lexicon.phrases().end(), [&](const auto& phrase) {
        return std::search(tokens.begin(), tokens.end(), phrase.begin(), phrase.end()) != tokens.end();
    });
}

inline constexpr std::size_t kIrrelevantRank = 1001;
inline constexpr const char* kIrrelevantFallbackKey = "irrelevant_fallback";

/// Copy of `record` whose only knowledge is the 1001st passage of `ranked`
/// (by rank order). With fewer passages the last one is used and
/// metadata["irrelevant_fallback"] is set.
inline EvalRecord build_irrelevant_variant(const EvalRecord& record, std::vector<Passage> ranked) {
    if (ranked.empty()) throw Error(ErrorCode::NoPassages, "no ranked passages for record " + record.id);
    std::stable_sort(ranked.begin(), ranked.end(), [](const Passage& a, const Passage& b) { return a.rank < b.rank; });
    EvalRecord out = record;
    const bool fallback = ranked.size() < kIrrelevantRank;
    out.passages = {fallback ? ranked.back() : ranked[kIrrelevantRank - 1]};
    out.metadata[kIrrelevantFallbackKey] = fallback;
    return out;
}

inline EvalRecord build_irrelevant_variant(const EvalRecord& record) {
    return build_irrelevant_variant(record, record.passages);
}

enum class KnowledgeCondition { Irrelevant, Gold };

struct AbstentionLabel {
    KnowledgeCondition condition = KnowledgeCondition::Irrelevant;
    bool refused = false;
};

struct AbstentionReport {
    /// Share of refusals given an irrelevant passage (higher is better).
    double refusal_rate_irrelevant = 0;
    /// Share of refusals given the gold passage (lower is better).
    double refusal_rate_gold = 0;
    std::size_t n_irrelevant = 0;
    std::size_t n_gold = 0;

    /// Share of gold-passage responses that do answer.
    double answer_rate_gold() const { return 100.0 - refusal_rate_gold; }
};

inline AbstentionReport abstention_rates(std::span<const AbstentionLabel> labels) {
    std::size_t refused_irrelevant = 0, refused_gold = 0;
    AbstentionReport r;
    for (const auto& l : labels) {
        if (l.condition == KnowledgeCondition::Irrelevant) {
            ++r.n_irrelevant;
            refused_irrelevant += l.refused;
        } else {
            ++r.n_gold;
            refused_gold += l.refused;
        }
    }
    if (r.n_irrelevant == 0) throw Error(ErrorCode::EmptyCondition, "no irrelevant-passage responses");
    if (r.n_gold == 0) throw Error(ErrorCode::EmptyCondition, "no gold-passage responses");
    r.refusal_rate_irrelevant = 100.0 * static_cast<double>(refused_irrelevant) / static_cast<double>(r.n_irrelevant);
    r.refusal_rate_gold = 100.0 * static_cast<double>(refused_gold) / static_cast<double>(r.n_gold);
    return r;
}

/// Records with at least one gold passage among those provided.
inline std::vector<EvalRecord> filter_gold_in_retrieved(std::span<const EvalRecord> records) {
    std::vector<EvalRecord> out;
    for (const auto& r : records) {
        if (std::any_of(r.passages.begin(), r.passages.end(), [](const Passage& p) { return p.is_gold; }))
            out.push_back(r);
    }
    return out;
}

}  // namespace raqeval
