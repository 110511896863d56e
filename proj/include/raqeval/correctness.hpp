#pragma once

// Lexical correctness metrics: a response against one or more reference answers.

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "raqeval/error.hpp"
#include "raqeval/textnorm.hpp"

namespace raqeval {

/// Nonempty list of reference answers. Exact duplicates are dropped.
class ReferenceSet {
public:
    ReferenceSet(std::vector<std::string> answers) {
        if (answers.empty()) throw Error(ErrorCode::InvalidArgument, "reference set must not be empty");
        for (auto& a : answers) {
            if (std::find(answers_.begin(), answers_.end(), a) == answers_.end()) answers_.push_back(std::move(a));
        }
    }
    ReferenceSet(std::initializer_list<std::string> answers) : ReferenceSet(std::vector<std::string>(answers)) {}

    const std::vector<std::string>& answers() const noexcept { return answers_; }
    std::size_t size() const noexcept { return answers_.size(); }
    auto begin() const { return answers_.begin(); }
    auto end() const { return answers_.end(); }

private:
    std::vector<std::string> answers_;
};

/// Fractions in [0,1].
struct PRF {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

/// Both bags empty scores 1, exactly one empty scores 0.
inline PRF prf_from_counts(std::size_t overlap_count, std::size_t candidate_total, std::size_t reference_total) {
    if (candidate_total == 0 && reference_total == 0) return {1, 1, 1};
    if (candidate_total == 0 || reference_total == 0 || overlap_count == 0) return {0, 0, 0};
    PRF out;
    out.precision = static_cast<double>(overlap_count) / static_cast<double>(candidate_total);
    out.recall = static_cast<double>(overlap_count) / static_cast<double>(reference_total);
    out.f1 = 2 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

inline PRF token_prf(std::string_view response, std::string_view reference) {
    const auto r = tokenize(response, NormMode::Answer).bag;
    const auto g = tokenize(reference, NormMode::Answer).bag;
    return prf_from_counts(overlap(r, g), r.total(), g.total());
}

inline double exact_match(std::string_view response, const ReferenceSet& refs) {
    const auto norm = normalize(response, NormMode::Answer);
    for (const auto& ref : refs) {
        if (normalize(ref, NormMode::Answer) == norm) return 100.0;
    }
    return 0.0;
}

namespace detail {

inline bool contains_run(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
    // an empty reference is contained only in an empty response
    if (needle.empty()) return haystack.empty();
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

}  // namespace detail

/// 100 when some normalized reference occurs as a contiguous token run of the
/// normalized response.
inline double recall_strict(std::string_view response, const ReferenceSet& refs) {
    const auto tokens = token_sequence(response, NormMode::Answer);
    for (const auto& ref : refs) {
        if (detail::contains_run(tokens, token_sequence(ref, NormMode::Answer))) return 100.0;
    }
    return 0.0;
}

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

/// ROUGE-L F-measure (beta = 1) over PlainNorm tokens.
inline double rouge_l(std::string_view response, std::string_view reference) {
    const auto r = token_sequence(response, NormMode::Plain);
    const auto g = token_sequence(reference, NormMode::Plain);
    if (r.empty() || g.empty()) return 0.0;
    const auto lcs = static_cast<double>(lcs_length(r, g));
    if (lcs == 0) return 0.0;
    const double p = lcs / static_cast<double>(r.size());
    const double rec = lcs / static_cast<double>(g.size());
    return 2 * p * rec / (p + rec);
}

struct MeteorAlignment {
    std::size_t matches = 0;
    std::size_t chunks = 0;
};

namespace detail {

// Depth-first search over exact unigram alignments. The match count is fixed
// to the bag overlap (the maximum), so the search only minimizes chunks.
class MeteorSearch {
public:
    static constexpr std::size_t kNodeBudget = 200000;

    MeteorSearch(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) : hyp_(hyp), ref_(ref) {
        used_.assign(ref.size(), false);
        const auto hb = TokenBag::from_tokens(hyp);
        const auto rb = TokenBag::from_tokens(ref);
        for (const auto& [token, n] : hb.counts()) {
            const auto m = std::min(n, rb.count(token));
            if (m > 0) need_[token] = m;
        }
        // hyp occurrences of each token at or after position i
        suffix_.assign(hyp.size() + 1, {});
        for (std::size_t i = hyp.size(); i-- > 0;) {
            suffix_[i] = suffix_[i + 1];
            ++suffix_[i][hyp[i]];
        }
        for (const auto& [_, m] : need_) target_ += m;
    }

    MeteorAlignment run() {
        if (target_ == 0) return {};
        best_chunks_ = target_ + 1;
        visit(0, 0, kNone, 0);
        return {target_, best_chunks_};
    }

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

    void visit(std::size_t i, std::size_t matched, std::size_t last_ref, std::size_t chunks) {
        if (chunks >= best_chunks_) return;
        if (matched == target_) {
            best_chunks_ = chunks;
            return;
        }
        if (i == hyp_.size() || ++nodes_ > kNodeBudget) return;

        const auto& token = hyp_[i];
        auto it = need_.find(token);
        const std::size_t still_needed = it == need_.end() ? 0 : it->second;
        if (still_needed > 0) {
            // extend the current chunk first so a good bound is found early
            if (last_ref != kNone && last_ref + 1 < ref_.size() && !used_[last_ref + 1] && ref_[last_ref + 1] == token) {
                take(i, matched, last_ref + 1, chunks, it);
            }
            for (std::size_t j = 0; j < ref_.size(); ++j) {
                if (used_[j] || ref_[j] != token || (last_ref != kNone && j == last_ref + 1)) continue;
                take(i, matched, j, chunks + 1, it);
            }
        }
        // leave hyp_[i] unaligned if the remaining occurrences can still cover the demand
        const auto rest = suffix_[i + 1].find(token);
        const std::size_t remaining = rest == suffix_[i + 1].end() ? 0 : rest->second;
        if (remaining >= still_needed) visit(i + 1, matched, kNone, chunks);
    }

    void take(std::size_t i, std::size_t matched, std::size_t j, std::size_t chunks,
              std::unordered_map<std::string, std::size_t>::iterator it) {
        used_[j] = true;
        --it->second;
        visit(i + 1, matched + 1, j, chunks);
        ++it->second;
        used_[j] = false;
    }

    const std::vector<std::string>& hyp_;
    const std::vector<std::string>& ref_;
    std::vector<bool> used_;
    std::unordered_map<std::string, std::size_t> need_;
    std::vector<std::unordered_map<std::string, std::size_t>> suffix_;
    std::size_t target_ = 0;
    std::size_t best_chunks_ = 0;
    std::size_t nodes_ = 0;
};

}  // namespace detail

/// Maximum exact-match alignment with the fewest chunks. Past the search
/// budget the best alignment found so far is returned.
inline MeteorAlignment meteor_alignment(const std::vector<std::string>& hypothesis,
                                        const std::vector<std::string>& reference) {
    return detail::MeteorSearch(hypothesis, reference).run();
}

/// METEOR restricted to the exact-match module (no stemming or synonyms):
/// Fmean = 10PR/(R+9P), penalty = 0.5 (chunks/matches)^3.
inline double meteor_exact(std::string_view response, std::string_view reference) {
    const auto hyp = token_sequence(response, NormMode::Plain);
    const auto ref = token_sequence(reference, NormMode::Plain);
    const auto [matches, chunks] = meteor_alignment(hyp, ref);
    if (matches == 0) return 0.0;
    const double p = static_cast<double>(matches) / static_cast<double>(hyp.size());
    const double r = static_cast<double>(matches) / static_cast<double>(ref.size());
    const double fmean = 10 * p * r / (r + 9 * p);
    const double frag = static_cast<double>(chunks) / static_cast<double>(matches);
    return fmean * (1 - 0.5 * frag * frag * frag);
}

/// Every field on the 0..100 scale.
struct CorrectnessScores {
    double em = 0;
    double f1 = 0;
    double precision = 0;
    double recall = 0;
    double recall_strict = 0;
    double rouge_l = 0;
    double meteor = 0;
};

/// Max over references, per metric.
inline CorrectnessScores score_multi(std::string_view response, const ReferenceSet& refs) {
    CorrectnessScores s;
    s.em = exact_match(response, refs);
    s.recall_strict = recall_strict(response, refs);
    const auto resp_bag = tokenize(response, NormMode::Answer).bag;
    for (const auto& ref : refs) {
        const auto ref_bag = tokenize(ref, NormMode::Answer).bag;
        const auto prf = prf_from_counts(overlap(resp_bag, ref_bag), resp_bag.total(), ref_bag.total());
        s.precision = std::max(s.precision, 100 * prf.precision);
        s.recall = std::max(s.recall, 100 * prf.recall);
        s.f1 = std::max(s.f1, 100 * prf.f1);
        s.rouge_l = std::max(s.rouge_l, 100 * rouge_l(response, ref));
        s.meteor = std::max(s.meteor, 100 * meteor_exact(response, ref));
    }
    return s;
}

}  // namespace raqeval
