#pragma once

// Prompt templates for answer generation and for the yes/no judges.
//
// Placeholders are written {name} and filled in a single pass, so slot text
// that itself contains braces is inserted verbatim.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "raqeval/error.hpp"
#include "raqeval/record.hpp"

namespace raqeval {

enum class PromptKind { QA, ConvQA, QA_IDK, JudgeCorrectness, JudgeFaithfulness };

namespace templates {

inline constexpr std::string_view kQA =
    "Please answer the following question given the following passages:\n"
    "{passages}"
    "Question: {question}\n"
    "Answer: ";

inline constexpr std::string_view kQAIdk =
    "Please answer the following question given the following passages. If the answer is not in the passages or "
    "cannot be inferred from the passages, respond as \"I don't know\".\n"
    "{passages}"
    "Question: {question}\n"
    "Answer: ";

inline constexpr std::string_view kConvQA =
    "Please answer the following question given the following passages and the conversation history:\n"
    "{passages}"
    "{history}"
    "Agent: ";

inline constexpr std::string_view kPassage = "- title: {title}\n{text}\n";

inline constexpr std::string_view kJudgeCorrectnessSystem =
    "You are CompareGPT, a machine to verify the correctness of predictions. Answer with only yes/no.";

inline constexpr std::string_view kJudgeCorrectnessUser =
    "You are given a question, the corresponding ground-truth answer and a prediction from a model. Compare the "
    "\"Ground-truth answer\" and the \"Prediction\" to determine whether the prediction correctly answers the "
    "question. All information in the ground-truth answer must be present in the prediction, including numbers and "
    "dates. You must answer \"no\" if there are any specific details in the ground-truth answer that are not "
    "mentioned in the prediction. There should be no contradicting statements in the prediction. The prediction may "
    "contain extra information. If the prediction states something as a possibility, treat it as a definitive "
    "answer.\n"
    "\n"
    "Question: {question}\n"
    "Ground-truth answer: {reference}\n"
    "Prediction: {response}\n"
    "\n"
    "CompareGPT response:";

inline constexpr std::string_view kJudgeFaithfulnessSystem =
    "You are CompareGPT, a machine to verify the groundedness of predictions. Answer with only yes/no.";

// "in present" is verbatim from the original template.
inline constexpr std::string_view kJudgeFaithfulnessUser =
    "You are given a question, the corresponding evidence and a prediction from a model. Compare the \"Prediction\" "
    "and the \"Evidence\" to determine whether all the information of the prediction in present in the evidence or "
    "can be inferred from the evidence. You must answer \"no\" if there are any specific details in the prediction "
    "that are not mentioned in the evidence or cannot be inferred from the evidence.\n"
    "\n"
    "Question: {question}\n"
    "Prediction: {response}\n"
    "Evidence: {evidence}\n"
    "\n"
    "CompareGPT response:";

}  // namespace templates

/// Single-pass substitution of {name} placeholders.
inline std::string fill_template(std::string_view tmpl, const std::map<std::string_view, std::string_view>& slots) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                auto it = slots.find(tmpl.substr(i + 1, close - i - 1));
                if (it != slots.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

/// Number of passages shown to the model.
struct PassageBudget {
    std::size_t k = 8;

    explicit PassageBudget(std::size_t k_) : k(k_) {
        if (k == 0) throw Error(ErrorCode::InvalidArgument, "passage budget must be >= 1");
    }

    static PassageBudget for_task(TaskKind kind) {
        switch (kind) {
            case TaskKind::OpenDomain: return PassageBudget(8);
            case TaskKind::MultiHop: return PassageBudget(8);
            case TaskKind::Conversational: return PassageBudget(4);
        }
        return PassageBudget(8);
    }
};

inline std::string render_passages(std::span<const Passage> passages, PassageBudget budget) {
    std::string out;
    const auto n = std::min(passages.size(), budget.k);
    for (std::size_t i = 0; i < n; ++i) {
        out += fill_template(templates::kPassage, {{"title", passages[i].title}, {"text", passages[i].text}});
    }
    return out;
}

inline std::string render_qa(std::string_view question, std::span<const Passage> passages, PassageBudget budget,
                             bool idk = false) {
    if (passages.empty()) throw Error(ErrorCode::NoPassages, "QA prompt needs at least one passage");
    if (question.empty()) throw Error(ErrorCode::InvalidArgument, "question is empty");
    const auto block = render_passages(passages, budget);
    return fill_template(idk ? templates::kQAIdk : templates::kQA, {{"passages", block}, {"question", question}});
}

/// "User: ..." / "Agent: ..." lines, one per turn.
inline std::string render_history(std::span<const Turn> history) {
    std::string out;
    for (const auto& t : history) {
        out += t.speaker == Speaker::User ? "User: " : "Agent: ";
        out += t.text;
        out += '\n';
    }
    return out;
}

inline std::string render_conv(std::span<const Turn> history, std::span<const Passage> passages,
                               PassageBudget budget = PassageBudget(4)) {
    if (history.empty()) throw Error(ErrorCode::BadHistory, "conversation history is empty");
    if (history.back().speaker != Speaker::User)
        throw Error(ErrorCode::BadHistory, "conversation history must end with a user turn");
    if (passages.empty()) throw Error(ErrorCode::NoPassages, "conversational prompt needs at least one passage");
    const auto block = render_passages(passages, budget);
    const auto turns = render_history(history);
    return fill_template(templates::kConvQA, {{"passages", block}, {"history", turns}});
}

struct ChatPrompt {
    std::string system;
    std::string user;

    bool operator==(const ChatPrompt&) const = default;
};

/// One reference is used as is; several become "1. a, 2. b, ...".
inline std::string join_references(std::span<const std::string> references) {
    if (references.size() == 1) return references.front();
    std::string out;
    for (std::size_t i = 0; i < references.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(i + 1) + ". " + references[i];
    }
    return out;
}

namespace detail {
inline void require_slot(std::string_view value, const char* name) {
    if (value.empty()) throw Error(ErrorCode::InvalidArgument, std::string("judge prompt slot '") + name + "' is empty");
}
}  // namespace detail

inline ChatPrompt render_judge_correctness(std::string_view question, std::span<const std::string> references,
                                           std::string_view response) {
    detail::require_slot(question, "question");
    detail::require_slot(response, "response");
    if (references.empty()) throw Error(ErrorCode::InvalidArgument, "judge prompt needs a reference answer");
    const auto ref = join_references(references);
    detail::require_slot(ref, "reference");
    return {std::string(templates::kJudgeCorrectnessSystem),
            fill_template(templates::kJudgeCorrectnessUser,
                          {{"question", question}, {"reference", ref}, {"response", response}})};
}

inline ChatPrompt render_judge_correctness(std::string_view question, std::string_view reference,
                                           std::string_view response) {
    const std::string refs[] = {std::string(reference)};
    return render_judge_correctness(question, refs, response);
}

inline ChatPrompt render_judge_faithfulness(std::string_view question, std::string_view response,
                                            std::string_view evidence) {
    detail::require_slot(question, "question");
    detail::require_slot(response, "response");
    detail::require_slot(evidence, "evidence");
    return {std::string(templates::kJudgeFaithfulnessSystem),
            fill_template(templates::kJudgeFaithfulnessUser,
                          {{"question", question}, {"response", response}, {"evidence", evidence}})};
}

/// Evidence text for the faithfulness judge: "title\ntext" blocks separated by blank lines.
inline std::string render_evidence(std::span<const Passage> passages) {
    std::string out;
    for (const auto& p : passages) {
        if (!out.empty()) out += "\n\n";
        out += p.title.empty() ? p.text : p.title + "\n" + p.text;
    }
    return out;
}

/// Question slot for the judges: the question, or the full transcript of a conversation.
inline std::string judge_question(const EvalRecord& record) {
    if (!record.is_conversational()) return record.question();
    auto text = render_history(std::get<Conversation>(record.query));
    if (!text.empty()) text.pop_back();
    return text;
}

/// Generation prompt for a record under its task's default budget.
inline std::string render_for_record(const EvalRecord& record, bool idk = false,
                                     std::optional<PassageBudget> budget = std::nullopt) {
    const auto b = budget.value_or(PassageBudget::for_task(record.task_kind));
    if (record.is_conversational()) return render_conv(std::get<Conversation>(record.query), record.passages, b);
    return render_qa(record.question(), record.passages, b, idk);
}

}  // namespace raqeval
