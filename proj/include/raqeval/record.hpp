#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "raqeval/error.hpp"

namespace raqeval {

enum class TaskKind { OpenDomain, MultiHop, Conversational };
enum class Speaker { User, Agent };
enum class ResponseCondition { Retrieved, GoldOnly, IrrelevantOnly };
enum class Provenance { Computed, Imported };

struct Turn {
    Speaker speaker = Speaker::User;
    std::string text;

    bool operator==(const Turn&) const = default;
};

struct Passage {
    std::int64_t rank = 0;
    std::string title;
    std::string text;
    bool is_gold = false;

    bool operator==(const Passage&) const = default;
};

using Conversation = std::vector<Turn>;

/// One question or conversation with its references and ranked passages.
struct EvalRecord {
    std::string id;
    std::string dataset;
    TaskKind task_kind = TaskKind::OpenDomain;
    std::variant<std::string, Conversation> query;
    std::vector<std::string> references;
    std::vector<Passage> passages;
    nlohmann::json metadata = nlohmann::json::object();

    bool is_conversational() const { return std::holds_alternative<Conversation>(query); }

    /// The question text, or the last user turn of a conversation.
    std::string question() const {
        if (const auto* q = std::get_if<std::string>(&query)) return *q;
        const auto& turns = std::get<Conversation>(query);
        for (auto it = turns.rbegin(); it != turns.rend(); ++it) {
            if (it->speaker == Speaker::User) return it->text;
        }
        return {};
    }

    bool operator==(const EvalRecord&) const = default;
};

/// Sampling parameters for answer generation.
struct GenerationConfig {
    double top_p = 0.95;
    double temperature = 0.95;
    std::int64_t seed = 0;
    int min_new_tokens = 1;
    int max_new_tokens = 50;

    void validate() const {
        if (!(top_p > 0 && top_p <= 1)) throw Error(ErrorCode::InvalidArgument, "top_p must be in (0, 1]");
        if (temperature < 0) throw Error(ErrorCode::InvalidArgument, "temperature must be >= 0");
        if (min_new_tokens < 0 || min_new_tokens > max_new_tokens)
            throw Error(ErrorCode::InvalidArgument, "min_new_tokens must be in [0, max_new_tokens]");
    }

    bool operator==(const GenerationConfig&) const = default;
};

struct ModelResponse {
    std::string record_id;
    std::string model_name;
    std::string text;
    ResponseCondition condition = ResponseCondition::Retrieved;
    std::optional<GenerationConfig> generation;

    bool operator==(const ModelResponse&) const = default;
};

/// One (record, model, metric) value. A null value marks an invalid judge verdict.
struct ScoreRow {
    std::string record_id;
    std::string model_name;
    std::string metric;
    std::optional<double> value;
    Provenance provenance = Provenance::Computed;
    std::string source;

    bool operator==(const ScoreRow&) const = default;
};

/// Final human judgment joined against metric values.
struct HumanScore {
    std::string record_id;
    std::string model_name;
    double value = 0;

    bool operator==(const HumanScore&) const = default;
};

constexpr std::string_view to_string(TaskKind k) {
    switch (k) {
        case TaskKind::OpenDomain: return "open_domain";
        case TaskKind::MultiHop: return "multi_hop";
        case TaskKind::Conversational: return "conversational";
    }
    return "";
}

constexpr std::string_view to_string(Speaker s) { return s == Speaker::User ? "user" : "agent"; }

constexpr std::string_view to_string(ResponseCondition c) {
    switch (c) {
        case ResponseCondition::Retrieved: return "retrieved";
        case ResponseCondition::GoldOnly: return "gold_only";
        case ResponseCondition::IrrelevantOnly: return "irrelevant_only";
    }
    return "";
}

constexpr std::string_view to_string(Provenance p) { return p == Provenance::Computed ? "computed" : "imported"; }

inline std::optional<TaskKind> parse_task_kind(std::string_view s) {
    if (s == "open_domain") return TaskKind::OpenDomain;
    if (s == "multi_hop") return TaskKind::MultiHop;
    if (s == "conversational") return TaskKind::Conversational;
    return std::nullopt;
}

inline std::optional<Speaker> parse_speaker(std::string_view s) {
    if (s == "user") return Speaker::User;
    if (s == "agent") return Speaker::Agent;
    return std::nullopt;
}

inline std::optional<ResponseCondition> parse_condition(std::string_view s) {
    if (s == "retrieved") return ResponseCondition::Retrieved;
    if (s == "gold_only") return ResponseCondition::GoldOnly;
    if (s == "irrelevant_only") return ResponseCondition::IrrelevantOnly;
    return std::nullopt;
}

inline std::optional<Provenance> parse_provenance(std::string_view s) {
    if (s == "computed") return Provenance::Computed;
    if (s == "imported") return Provenance::Imported;
    return std::nullopt;
}

}  // namespace raqeval
