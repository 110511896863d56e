#pragma once

// JSON-Lines persistence for records, responses, scores and human scores.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "raqeval/error.hpp"
#include "raqeval/record.hpp"

namespace raqeval {

using ordered_json = nlohmann::ordered_json;

namespace detail {

// Strict field readers; a missing or mistyped field is a SchemaError at `line`.
struct FieldReader {
    const nlohmann::json& obj;
    std::size_t line;

    const nlohmann::json& require(const char* key) const {
        auto it = obj.find(key);
        if (it == obj.end()) throw line_error(ErrorCode::SchemaError, line, key, "missing");
        return *it;
    }

    std::string string(const char* key) const {
        const auto& v = require(key);
        if (!v.is_string()) throw line_error(ErrorCode::SchemaError, line, key, "expected a string");
        return v.get<std::string>();
    }

    std::string nonempty_string(const char* key) const {
        auto s = string(key);
        if (s.empty()) throw line_error(ErrorCode::SchemaError, line, key, "must not be empty");
        return s;
    }
};

inline Passage passage_from_json(const nlohmann::json& j, std::size_t line) {
    if (!j.is_object()) throw line_error(ErrorCode::SchemaError, line, "passages", "each passage must be an object");
    FieldReader f{j, line};
    Passage p;
    const auto& rank = f.require("rank");
    if (!rank.is_number_integer()) throw line_error(ErrorCode::SchemaError, line, "rank", "expected an integer");
    p.rank = rank.get<std::int64_t>();
    p.title = f.string("title");
    p.text = f.string("text");
    if (auto it = j.find("is_gold"); it != j.end()) {
        if (!it->is_boolean()) throw line_error(ErrorCode::SchemaError, line, "is_gold", "expected a boolean");
        p.is_gold = it->get<bool>();
    }
    return p;
}

}  // namespace detail

/// Parses one records.jsonl object. Fields outside the schema go into metadata.
inline EvalRecord record_from_json(const nlohmann::json& j, std::size_t line = 0) {
    if (!j.is_object()) throw line_error(ErrorCode::SchemaError, line, "", "record must be a JSON object");
    detail::FieldReader f{j, line};
    EvalRecord r;
    r.id = f.nonempty_string("id");
    r.dataset = f.string("dataset");
    const auto kind = parse_task_kind(f.string("task_kind"));
    if (!kind) throw line_error(ErrorCode::SchemaError, line, "task_kind", "expected open_domain, multi_hop or conversational");
    r.task_kind = *kind;

    const bool has_question = j.contains("question");
    const bool has_turns = j.contains("turns");
    if (has_question == has_turns)
        throw line_error(ErrorCode::SchemaError, line, "question", "exactly one of question/turns is required");
    if (has_question) {
        if (r.task_kind == TaskKind::Conversational)
            throw line_error(ErrorCode::SchemaError, line, "turns", "conversational records need turns");
        r.query = f.nonempty_string("question");
    } else {
        const auto& turns = j.at("turns");
        if (!turns.is_array() || turns.empty())
            throw line_error(ErrorCode::SchemaError, line, "turns", "expected a nonempty array");
        Conversation conv;
        for (const auto& t : turns) {
            if (!t.is_object()) throw line_error(ErrorCode::SchemaError, line, "turns", "each turn must be an object");
            detail::FieldReader tf{t, line};
            const auto speaker = parse_speaker(tf.string("speaker"));
            if (!speaker) throw line_error(ErrorCode::SchemaError, line, "speaker", "expected user or agent");
            conv.push_back({*speaker, tf.string("text")});
        }
        if (conv.back().speaker != Speaker::User)
            throw line_error(ErrorCode::SchemaError, line, "turns", "conversation must end with a user turn");
        r.query = std::move(conv);
    }

    const auto& refs = f.require("references");
    if (!refs.is_array() || refs.empty())
        throw line_error(ErrorCode::SchemaError, line, "references", "expected a nonempty array");
    for (const auto& ref : refs) {
        if (!ref.is_string()) throw line_error(ErrorCode::SchemaError, line, "references", "expected strings");
        r.references.push_back(ref.get<std::string>());
    }

    if (auto it = j.find("passages"); it != j.end()) {
        if (!it->is_array()) throw line_error(ErrorCode::SchemaError, line, "passages", "expected an array");
        for (const auto& p : *it) {
            r.passages.push_back(detail::passage_from_json(p, line));
            if (r.passages.size() > 1 && r.passages[r.passages.size() - 2].rank >= r.passages.back().rank)
                throw line_error(ErrorCode::SchemaError, line, "rank", "passage ranks must be strictly increasing");
        }
    }

    if (auto it = j.find("metadata"); it != j.end()) {
        if (!it->is_object()) throw line_error(ErrorCode::SchemaError, line, "metadata", "expected an object");
        r.metadata = *it;
    }
    static const std::set<std::string> known = {"id",         "dataset",  "task_kind", "question",
                                                "turns",      "references", "passages", "metadata"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) r.metadata[key] = value;
    }
    return r;
}

inline ordered_json to_json(const Passage& p) {
    return {{"rank", p.rank}, {"title", p.title}, {"text", p.text}, {"is_gold", p.is_gold}};
}

inline ordered_json to_json(const EvalRecord& r) {
    ordered_json j;
    j["id"] = r.id;
    j["dataset"] = r.dataset;
    j["task_kind"] = to_string(r.task_kind);
    if (const auto* q = std::get_if<std::string>(&r.query)) {
        j["question"] = *q;
    } else {
        ordered_json turns = ordered_json::array();
        for (const auto& t : std::get<Conversation>(r.query)) turns.push_back({{"speaker", to_string(t.speaker)}, {"text", t.text}});
        j["turns"] = turns;
    }
    j["references"] = r.references;
    ordered_json passages = ordered_json::array();
    for (const auto& p : r.passages) passages.push_back(to_json(p));
    j["passages"] = passages;
    j["metadata"] = ordered_json::parse(r.metadata.dump());
    return j;
}

inline ordered_json to_json(const GenerationConfig& g) {
    return {{"top_p", g.top_p},
            {"temperature", g.temperature},
            {"seed", g.seed},
            {"min_new_tokens", g.min_new_tokens},
            {"max_new_tokens", g.max_new_tokens}};
}

inline ordered_json to_json(const ModelResponse& r) {
    ordered_json j = {{"record_id", r.record_id},
                      {"model_name", r.model_name},
                      {"text", r.text},
                      {"condition", to_string(r.condition)}};
    if (r.generation) j["generation"] = to_json(*r.generation);
    return j;
}

inline ModelResponse response_from_json(const nlohmann::json& j, std::size_t line = 0) {
    if (!j.is_object()) throw line_error(ErrorCode::SchemaError, line, "", "response must be a JSON object");
    detail::FieldReader f{j, line};
    ModelResponse r;
    r.record_id = f.nonempty_string("record_id");
    r.model_name = f.nonempty_string("model_name");
    r.text = f.string("text");
    if (j.contains("condition")) {
        const auto c = parse_condition(f.string("condition"));
        if (!c) throw line_error(ErrorCode::SchemaError, line, "condition", "expected retrieved, gold_only or irrelevant_only");
        r.condition = *c;
    }
    if (auto it = j.find("generation"); it != j.end() && !it->is_null()) {
        try {
            GenerationConfig g;
            g.top_p = it->value("top_p", g.top_p);
            g.temperature = it->value("temperature", g.temperature);
            g.seed = it->value("seed", g.seed);
            g.min_new_tokens = it->value("min_new_tokens", g.min_new_tokens);
            g.max_new_tokens = it->value("max_new_tokens", g.max_new_tokens);
            r.generation = g;
        } catch (const nlohmann::json::exception& e) {
            throw line_error(ErrorCode::SchemaError, line, "generation", e.what());
        }
    }
    return r;
}

inline ordered_json to_json(const ScoreRow& s) {
    ordered_json j = {{"record_id", s.record_id}, {"model_name", s.model_name}, {"metric", s.metric}};
    j["value"] = s.value ? ordered_json(*s.value) : ordered_json(nullptr);
    j["provenance"] = to_string(s.provenance);
    if (!s.source.empty()) j["source"] = s.source;
    return j;
}

inline ScoreRow score_from_json(const nlohmann::json& j, std::size_t line = 0) {
    if (!j.is_object()) throw line_error(ErrorCode::SchemaError, line, "", "score must be a JSON object");
    detail::FieldReader f{j, line};
    ScoreRow s;
    s.record_id = f.nonempty_string("record_id");
    s.model_name = f.nonempty_string("model_name");
    s.metric = f.nonempty_string("metric");
    const auto& v = f.require("value");
    if (v.is_number()) {
        s.value = v.get<double>();
        if (*s.value < 0 || *s.value > 100) throw line_error(ErrorCode::SchemaError, line, "value", "must be in [0, 100]");
    } else if (!v.is_null()) {
        throw line_error(ErrorCode::SchemaError, line, "value", "expected a number or null");
    }
    if (j.contains("provenance")) {
        const auto p = parse_provenance(f.string("provenance"));
        if (!p) throw line_error(ErrorCode::SchemaError, line, "provenance", "expected computed or imported");
        s.provenance = *p;
    }
    if (j.contains("source")) s.source = f.string("source");
    if (s.provenance == Provenance::Imported && s.source.empty())
        throw line_error(ErrorCode::SchemaError, line, "source", "imported scores must name their source");
    return s;
}

inline ordered_json to_json(const HumanScore& h) {
    return {{"record_id", h.record_id}, {"model_name", h.model_name}, {"value", h.value}};
}

inline HumanScore human_score_from_json(const nlohmann::json& j, std::size_t line = 0) {
    if (!j.is_object()) throw line_error(ErrorCode::SchemaError, line, "", "human score must be a JSON object");
    detail::FieldReader f{j, line};
    HumanScore h;
    h.record_id = f.nonempty_string("record_id");
    h.model_name = f.nonempty_string("model_name");
    const auto& v = f.require("value");
    if (!v.is_number()) throw line_error(ErrorCode::SchemaError, line, "value", "expected a number");
    h.value = v.get<double>();
    return h;
}

/// Calls `fn(json, line)` for every nonblank line.
inline void read_jsonl(const std::string& path, const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::string text;
    std::size_t line_no = 0;
    while (std::getline(in, text)) {
        ++line_no;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw line_error(ErrorCode::ParseError, line_no, "", e.what());
        }
        fn(j, line_no);
    }
    if (in.bad()) throw Error(ErrorCode::IoError, "read failed for " + path);
}

/// Appends `lines` to `path` under an exclusive advisory lock, in one write.
inline void append_lines_locked(const std::string& path, const std::string& payload) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) throw Error(ErrorCode::IoError, "cannot open " + path + ": " + std::strerror(errno));
    struct Closer {
        int fd;
        ~Closer() {
            ::flock(fd, LOCK_UN);
            ::close(fd);
        }
    } closer{fd};
    while (::flock(fd, LOCK_EX) != 0) {
        if (errno != EINTR) throw Error(ErrorCode::IoError, "cannot lock " + path + ": " + std::strerror(errno));
    }
    std::size_t written = 0;
    while (written < payload.size()) {
        const auto n = ::write(fd, payload.data() + written, payload.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error(ErrorCode::IoError, "write failed for " + path + ": " + std::strerror(errno));
        }
        written += static_cast<std::size_t>(n);
    }
}

template <typename T>
void append_jsonl(const std::string& path, const std::vector<T>& items) {
    std::string payload;
    for (const auto& item : items) {
        payload += to_json(item).dump();
        payload += '\n';
    }
    if (!payload.empty()) append_lines_locked(path, payload);
}

/// Replaces the file contents.
template <typename T>
void write_jsonl(const std::string& path, const std::vector<T>& items) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    for (const auto& item : items) out << to_json(item).dump() << '\n';
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

/// Validated records; ids must be unique within a dataset.
inline std::vector<EvalRecord> load_records(const std::string& path) {
    std::vector<EvalRecord> out;
    std::set<std::pair<std::string, std::string>> seen;
    read_jsonl(path, [&](const nlohmann::json& j, std::size_t line) {
        auto r = record_from_json(j, line);
        if (!seen.emplace(r.dataset, r.id).second)
            throw line_error(ErrorCode::DuplicateId, line, "id", "duplicate id '" + r.id + "' in dataset '" + r.dataset + "'");
        out.push_back(std::move(r));
    });
    return out;
}

inline void save_records(const std::string& path, const std::vector<EvalRecord>& records) { write_jsonl(path, records); }

inline std::vector<ModelResponse> load_responses(const std::string& path) {
    std::vector<ModelResponse> out;
    read_jsonl(path, [&](const nlohmann::json& j, std::size_t line) { out.push_back(response_from_json(j, line)); });
    return out;
}

inline void save_responses(const std::string& path, const std::vector<ModelResponse>& rows) { append_jsonl(path, rows); }

/// Appends long-form score rows.
inline void save_scores(const std::string& path, const std::vector<ScoreRow>& rows) { append_jsonl(path, rows); }

inline std::vector<ScoreRow> load_scores(const std::string& path) {
    std::vector<ScoreRow> out;
    read_jsonl(path, [&](const nlohmann::json& j, std::size_t line) { out.push_back(score_from_json(j, line)); });
    return out;
}

inline std::vector<HumanScore> load_human_scores(const std::string& path) {
    std::vector<HumanScore> out;
    read_jsonl(path, [&](const nlohmann::json& j, std::size_t line) { out.push_back(human_score_from_json(j, line)); });
    return out;
}

inline void save_human_scores(const std::string& path, const std::vector<HumanScore>& rows) { append_jsonl(path, rows); }

/// Fails with SchemaError when a response points at an unknown record.
inline void check_responses_resolve(const std::vector<EvalRecord>& records, const std::vector<ModelResponse>& responses) {
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.id);
    for (std::size_t i = 0; i < responses.size(); ++i) {
        if (!ids.count(responses[i].record_id))
            throw line_error(ErrorCode::SchemaError, i + 1, "record_id", "unknown record '" + responses[i].record_id + "'");
    }
}

}  // namespace raqeval
