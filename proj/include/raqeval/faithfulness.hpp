#pragma once

// Token-overlap grounding of a response in the knowledge it was given.

#include <span>
#include <string_view>

#include "raqeval/correctness.hpp"
#include "raqeval/error.hpp"
#include "raqeval/record.hpp"
#include "raqeval/textnorm.hpp"

namespace raqeval {

struct KnowledgeOptions {
    /// Count passage titles as part of the knowledge.
    bool include_titles = true;
};

/// 0..100 scale.
struct FaithfulnessScores {
    double k_f1 = 0;
    double k_precision = 0;
    double k_recall = 0;
};

/// Bag union over passages. Titles and texts are tokenized separately so no
/// token is glued across a field boundary.
inline TokenBag knowledge_bag(std::span<const Passage> knowledge, const KnowledgeOptions& opts = {}) {
    TokenBag bag;
    for (const auto& p : knowledge) {
        if (opts.include_titles) bag.merge(tokenize(p.title, NormMode::Answer).bag);
        bag.merge(tokenize(p.text, NormMode::Answer).bag);
    }
    return bag;
}

inline FaithfulnessScores k_overlap(std::string_view response, std::span<const Passage> knowledge,
                                    const KnowledgeOptions& opts = {}) {
    if (knowledge.empty()) throw Error(ErrorCode::EmptyKnowledge, "knowledge context has no passages");
    const auto resp = tokenize(response, NormMode::Answer).bag;
    const auto know = knowledge_bag(knowledge, opts);
    const auto prf = prf_from_counts(overlap(resp, know), resp.total(), know.total());
    return {100 * prf.f1, 100 * prf.precision, 100 * prf.recall};
}

}  // namespace raqeval
