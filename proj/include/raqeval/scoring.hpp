#pragma once

// Turns (record, response) pairs into long-form score rows.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "raqeval/abstention.hpp"
#include "raqeval/correctness.hpp"
#include "raqeval/faithfulness.hpp"
#include "raqeval/prompts.hpp"
#include "raqeval/record.hpp"

namespace raqeval {

inline const std::vector<std::string>& correctness_metric_names() {
    static const std::vector<std::string> names = {"em", "f1", "precision", "recall", "recall_s", "meteor", "rouge_l"};
    return names;
}

inline const std::vector<std::string>& faithfulness_metric_names() {
    static const std::vector<std::string> names = {"k_f1", "k_precision", "k_recall"};
    return names;
}

struct ScoringOptions {
    bool correctness = true;
    bool faithfulness = true;
    KnowledgeOptions knowledge;
    /// Overrides the per-task passage budget for retrieved knowledge.
    std::optional<PassageBudget> budget;
};

/// The passages a response was conditioned on: the top-k retrieved passages,
/// the gold passages, or the single irrelevant passage.
inline std::vector<Passage> knowledge_for(const EvalRecord& record, ResponseCondition condition,
                                          std::optional<PassageBudget> budget = std::nullopt) {
    switch (condition) {
        case ResponseCondition::Retrieved: {
            const auto k = budget.value_or(PassageBudget::for_task(record.task_kind)).k;
            return {record.passages.begin(), record.passages.begin() + static_cast<std::ptrdiff_t>(std::min(k, record.passages.size()))};
        }
        case ResponseCondition::GoldOnly: {
            std::vector<Passage> gold;
            for (const auto& p : record.passages) {
                if (p.is_gold) gold.push_back(p);
            }
            return gold;
        }
        case ResponseCondition::IrrelevantOnly:
            if (record.passages.empty()) return {};
            return build_irrelevant_variant(record).passages;
    }
    return {};
}

/// Faithfulness rows are skipped when the record has no knowledge for the
/// response's condition.
inline std::vector<ScoreRow> score_response(const EvalRecord& record, const ModelResponse& response,
                                            const ScoringOptions& opts = {}) {
    std::vector<ScoreRow> rows;
    auto emit = [&](const std::string& metric, double value) {
        rows.push_back({response.record_id, response.model_name, metric, value, Provenance::Computed, {}});
    };
    if (opts.correctness) {
        const auto s = score_multi(response.text, ReferenceSet(record.references));
        emit("em", s.em);
        emit("f1", s.f1);
        emit("precision", s.precision);
        emit("recall", s.recall);
        emit("recall_s", s.recall_strict);
        emit("meteor", s.meteor);
        emit("rouge_l", s.rouge_l);
    }
    if (opts.faithfulness) {
        const auto knowledge = knowledge_for(record, response.condition, opts.budget);
        if (!knowledge.empty()) {
            const auto f = k_overlap(response.text, knowledge, opts.knowledge);
            emit("k_f1", f.k_f1);
            emit("k_precision", f.k_precision);
            emit("k_recall", f.k_recall);
        }
    }
    return rows;
}

inline std::vector<ScoreRow> score_all(std::span<const EvalRecord> records, std::span<const ModelResponse> responses,
                                       const ScoringOptions& opts = {}) {
    std::map<std::string, const EvalRecord*> by_id;
    for (const auto& r : records) by_id[r.id] = &r;
    std::vector<ScoreRow> rows;
    for (const auto& resp : responses) {
        auto it = by_id.find(resp.record_id);
        if (it == by_id.end()) throw Error(ErrorCode::SchemaError, "response refers to unknown record '" + resp.record_id + "'");
        auto r = score_response(*it->second, resp, opts);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    return rows;
}

inline std::map<std::string, std::string> dataset_index(std::span<const EvalRecord> records) {
    std::map<std::string, std::string> out;
    for (const auto& r : records) out[r.id] = r.dataset;
    return out;
}

}  // namespace raqeval
