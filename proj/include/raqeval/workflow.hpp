#pragma once

// Human annotation workflow: blind task assignment, two first-round labels
// per task, a third label from a different annotator on disagreement, and
// finalization by majority vote.
//
// State lives in memory and is mirrored to a directory of JSON-Lines files,
// one subdirectory per run; constructing a workflow over an existing
// directory replays it.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "raqeval/analysis.hpp"
#include "raqeval/error.hpp"
#include "raqeval/record.hpp"
#include "raqeval/store.hpp"

namespace raqeval {

enum class AnnotationKind { Correctness, Faithfulness };

constexpr std::string_view to_string(AnnotationKind k) {
    return k == AnnotationKind::Correctness ? "correctness" : "faithfulness";
}

inline std::optional<AnnotationKind> parse_annotation_kind(std::string_view s) {
    if (s == "correctness") return AnnotationKind::Correctness;
    if (s == "faithfulness") return AnnotationKind::Faithfulness;
    return std::nullopt;
}

enum class Grounding { Not, Partially, Completely };

constexpr std::string_view to_string(Grounding g) {
    switch (g) {
        case Grounding::Not: return "not";
        case Grounding::Partially: return "partially";
        case Grounding::Completely: return "completely";
    }
    return "";
}

inline std::optional<Grounding> parse_grounding(std::string_view s) {
    if (s == "not") return Grounding::Not;
    if (s == "partially") return Grounding::Partially;
    if (s == "completely") return Grounding::Completely;
    return std::nullopt;
}

/// completely = 1.0, partially = 0.5, not = 0.
constexpr double grounding_score(Grounding g) {
    switch (g) {
        case Grounding::Not: return 0.0;
        case Grounding::Partially: return 0.5;
        case Grounding::Completely: return 1.0;
    }
    return 0.0;
}

struct HumanLabel {
    std::string task_id;
    std::string annotator_id;
    AnnotationKind kind = AnnotationKind::Correctness;
    /// Correctness: 0 or 1.
    std::optional<int> correct;
    /// Faithfulness: is the passage relevant to the query.
    std::optional<bool> relevant;
    /// Faithfulness: only when relevant.
    std::optional<Grounding> grounding;

    void validate() const {
        if (task_id.empty() || annotator_id.empty())
            throw Error(ErrorCode::InvalidArgument, "label needs task_id and annotator_id");
        if (kind == AnnotationKind::Correctness) {
            if (!correct || (*correct != 0 && *correct != 1))
                throw Error(ErrorCode::InvalidArgument, "correctness label needs value 0 or 1");
            if (relevant || grounding) throw Error(ErrorCode::InvalidArgument, "correctness label takes no grounding");
        } else {
            if (!relevant) throw Error(ErrorCode::InvalidArgument, "faithfulness label needs relevance");
            if (*relevant && !grounding) throw Error(ErrorCode::InvalidArgument, "relevant passage needs a grounding label");
            if (!*relevant && grounding)
                throw Error(ErrorCode::InvalidArgument, "grounding is recorded only for relevant passages");
            if (correct) throw Error(ErrorCode::InvalidArgument, "faithfulness label takes no correctness value");
        }
    }

    /// Comparable outcome: correctness 0/1; faithfulness -1 (irrelevant), 0, 1, 2.
    int outcome() const {
        if (kind == AnnotationKind::Correctness) return correct.value_or(0);
        if (!relevant.value_or(false)) return -1;
        return static_cast<int>(grounding.value_or(Grounding::Not));
    }
};

inline ordered_json to_json(const HumanLabel& l) {
    ordered_json j = {{"task_id", l.task_id}, {"annotator_id", l.annotator_id}, {"kind", to_string(l.kind)}};
    if (l.correct) j["value"] = *l.correct;
    if (l.relevant) j["relevance"] = *l.relevant ? "yes" : "no";
    if (l.grounding) {
        j["grounding"] = to_string(*l.grounding);
        j["value"] = grounding_score(*l.grounding);
    }
    return j;
}

inline HumanLabel label_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::SchemaError, "label must be a JSON object");
    HumanLabel l;
    try {
        l.task_id = j.at("task_id").get<std::string>();
        l.annotator_id = j.at("annotator_id").get<std::string>();
        const auto kind = parse_annotation_kind(j.at("kind").get<std::string>());
        if (!kind) throw Error(ErrorCode::SchemaError, "kind must be correctness or faithfulness");
        l.kind = *kind;
        if (l.kind == AnnotationKind::Correctness) {
            const auto& v = j.at("value");
            if (!v.is_number()) throw Error(ErrorCode::SchemaError, "value must be 0 or 1");
            const double d = v.get<double>();
            if (d != 0.0 && d != 1.0) throw Error(ErrorCode::SchemaError, "value must be 0 or 1");
            l.correct = static_cast<int>(d);
        } else {
            const auto rel = j.at("relevance").get<std::string>();
            if (rel != "yes" && rel != "no") throw Error(ErrorCode::SchemaError, "relevance must be yes or no");
            l.relevant = rel == "yes";
            if (auto it = j.find("grounding"); it != j.end() && !it->is_null()) {
                const auto g = parse_grounding(it->get<std::string>());
                if (!g) throw Error(ErrorCode::SchemaError, "grounding must be completely, partially or not");
                l.grounding = *g;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("malformed label: ") + e.what());
    }
    return l;
}

struct AnnotationTask {
    std::string task_id;
    std::string run_id;
    AnnotationKind kind = AnnotationKind::Correctness;
    std::string record_id;
    std::string model_name;
    /// What the annotator sees. Never contains the model name.
    nlohmann::json payload;
    std::string display_token;
};

struct TaskState {
    AnnotationTask task;
    std::vector<std::string> assigned;
    std::vector<HumanLabel> labels;
    std::optional<int> final_outcome;
};

struct RunProgress {
    AgreementStats agreement;
    std::size_t n_total = 0;
    std::size_t n_pending = 0;
    std::size_t n_conflict = 0;
    std::size_t n_finalized = 0;
};

struct RunSpec {
    AnnotationKind kind = AnnotationKind::Correctness;
    std::uint64_t seed = 0;
    std::vector<std::string> annotators;
    std::vector<EvalRecord> records;
    std::vector<ModelResponse> responses;
};

namespace detail {

// splitmix64: portable, so shuffles reproduce across standard libraries.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

template <typename T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
    std::uint64_t state = seed;
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(splitmix64(state) % i);
        std::swap(v[i - 1], v[j]);
    }
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

inline nlohmann::json task_payload(const EvalRecord& record, const ModelResponse& response, AnnotationKind kind,
                                   const std::string& task_id, const std::string& token) {
    nlohmann::json p;
    p["task_id"] = task_id;
    p["kind"] = to_string(kind);
    p["display_token"] = token;
    if (const auto* q = std::get_if<std::string>(&record.query)) {
        p["question"] = *q;
    } else {
        nlohmann::json turns = nlohmann::json::array();
        for (const auto& t : std::get<Conversation>(record.query))
            turns.push_back({{"speaker", to_string(t.speaker)}, {"text", t.text}});
        p["turns"] = turns;
    }
    p["references"] = record.references;
    p["response"] = response.text;
    if (kind == AnnotationKind::Faithfulness) {
        nlohmann::json passages = nlohmann::json::array();
        for (const auto& psg : record.passages) passages.push_back({{"title", psg.title}, {"text", psg.text}});
        p["passages"] = passages;
    }
    return p;
}

}  // namespace detail

class AnnotationWorkflow {
public:
    /// Empty `data_dir` keeps everything in memory.
    explicit AnnotationWorkflow(std::filesystem::path data_dir = {}) : dir_(std::move(data_dir)) {
        if (!dir_.empty()) {
            std::filesystem::create_directories(dir_);
            replay();
        }
    }

    std::string create_run(const RunSpec& spec) {
        if (spec.annotators.empty()) throw Error(ErrorCode::InvalidArgument, "a run needs at least one annotator");
        check_responses_resolve(spec.records, spec.responses);
        std::lock_guard lock(mutex_);
        const std::string run_id = "run-" + std::to_string(next_run_++);
        Run run;
        run.id = run_id;
        run.kind = spec.kind;
        run.seed = spec.seed;
        run.annotators = {spec.annotators.begin(), spec.annotators.end()};
        run.records = spec.records;
        run.responses = spec.responses;
        build_tasks(run);
        if (!dir_.empty()) persist_run(run);
        runs_.emplace(run_id, std::move(run));
        run_order_.push_back(run_id);
        return run_id;
    }

    std::vector<std::string> runs() const {
        std::lock_guard lock(mutex_);
        return run_order_;
    }

    /// Next task for this annotator, or nullopt when nothing is left. An
    /// annotator's open assignment is returned again until it is labeled.
    std::optional<AnnotationTask> next_task(const std::string& annotator, AnnotationKind kind,
                                            const std::optional<std::string>& run_id = std::nullopt) {
        std::lock_guard lock(mutex_);
        std::vector<Run*> candidates;
        if (run_id) {
            candidates.push_back(&find_run(*run_id));
        } else {
            for (const auto& id : run_order_) candidates.push_back(&runs_.at(id));
        }
        const bool registered = std::any_of(candidates.begin(), candidates.end(),
                                            [&](const Run* r) { return r->annotators.count(annotator) > 0; });
        if (!registered) throw Error(ErrorCode::UnknownAnnotator, "annotator '" + annotator + "' is not registered");

        for (Run* run : candidates) {
            if (run->kind != kind || !run->annotators.count(annotator)) continue;
            for (auto& t : run->tasks) {
                if (has(t.assigned, annotator) && !labeled_by(t, annotator)) return t.task;
            }
        }
        for (Run* run : candidates) {
            if (run->kind != kind || !run->annotators.count(annotator)) continue;
            for (auto& t : run->tasks) {
                if (t.final_outcome || has(t.assigned, annotator)) continue;
                if (t.assigned.size() < 2 || needs_tiebreak(t)) {
                    assign(*run, t, annotator);
                    return t.task;
                }
            }
        }
        return std::nullopt;
    }

    /// Records a label. Returns the final outcome when this label resolves the task.
    std::optional<int> submit_label(const HumanLabel& label) {
        label.validate();
        std::lock_guard lock(mutex_);
        auto [run, state] = find_task(label.task_id);
        if (label.kind != run->kind) throw Error(ErrorCode::InvalidArgument, "label kind does not match the task");
        if (labeled_by(*state, label.annotator_id))
            throw Error(ErrorCode::DuplicateLabel, "annotator '" + label.annotator_id + "' already labeled " + label.task_id);
        if (!has(state->assigned, label.annotator_id))
            throw Error(ErrorCode::UnassignedTask, "task " + label.task_id + " is not assigned to '" + label.annotator_id + "'");
        if (!dir_.empty()) append_jsonl((run_dir(run->id) / "annotations.jsonl").string(), std::vector<HumanLabel>{label});
        state->labels.push_back(label);
        resolve(*run, *state);
        return state->final_outcome;
    }

    RunProgress progress(const std::string& run_id) const {
        std::lock_guard lock(mutex_);
        const Run& run = find_run(run_id);
        RunProgress p;
        p.n_total = run.tasks.size();
        std::map<std::string, std::vector<int>> first_round;
        for (const auto& t : run.tasks) {
            if (t.labels.size() >= 2) first_round[t.task.task_id] = {t.labels[0].outcome(), t.labels[1].outcome()};
            if (t.final_outcome) {
                ++p.n_finalized;
                if (t.labels.size() > 2) ++p.agreement.n_conflicts_resolved;
            } else if (t.labels.size() >= 2) {
                ++p.n_conflict;
            } else {
                ++p.n_pending;
            }
        }
        const auto resolved = p.agreement.n_conflicts_resolved;
        p.agreement = agreement(first_round);
        p.agreement.n_conflicts_resolved = resolved;
        return p;
    }

    /// Finalized human scores joinable with metric scores. Faithfulness tasks
    /// judged irrelevant are left out.
    std::vector<HumanScore> final_scores(const std::string& run_id) const {
        std::lock_guard lock(mutex_);
        const Run& run = find_run(run_id);
        std::vector<HumanScore> out;
        for (const auto& t : run.tasks) {
            if (!t.final_outcome) continue;
            const int o = *t.final_outcome;
            if (run.kind == AnnotationKind::Faithfulness) {
                if (o < 0) continue;
                out.push_back({t.task.record_id, t.task.model_name, grounding_score(static_cast<Grounding>(o))});
            } else {
                out.push_back({t.task.record_id, t.task.model_name, static_cast<double>(o)});
            }
        }
        return out;
    }

    std::vector<TaskState> tasks(const std::string& run_id) const {
        std::lock_guard lock(mutex_);
        return find_run(run_id).tasks;
    }

    AnnotationKind run_kind(const std::string& run_id) const {
        std::lock_guard lock(mutex_);
        return find_run(run_id).kind;
    }

    std::vector<EvalRecord> run_records(const std::string& run_id) const {
        std::lock_guard lock(mutex_);
        return find_run(run_id).records;
    }

    std::vector<ModelResponse> run_responses(const std::string& run_id) const {
        std::lock_guard lock(mutex_);
        return find_run(run_id).responses;
    }

    std::set<std::string> model_names(const std::string& run_id) const {
        std::lock_guard lock(mutex_);
        std::set<std::string> names;
        for (const auto& r : find_run(run_id).responses) names.insert(r.model_name);
        return names;
    }

private:
    struct Run {
        std::string id;
        AnnotationKind kind = AnnotationKind::Correctness;
        std::uint64_t seed = 0;
        std::set<std::string> annotators;
        std::vector<EvalRecord> records;
        std::vector<ModelResponse> responses;
        std::vector<TaskState> tasks;
    };

    static bool has(const std::vector<std::string>& v, const std::string& s) {
        return std::find(v.begin(), v.end(), s) != v.end();
    }

    static bool labeled_by(const TaskState& t, const std::string& annotator) {
        return std::any_of(t.labels.begin(), t.labels.end(), [&](const auto& l) { return l.annotator_id == annotator; });
    }

    // Two disagreeing first-round labels and no open third assignment.
    static bool needs_tiebreak(const TaskState& t) {
        return t.labels.size() == 2 && t.assigned.size() == 2 && t.labels[0].outcome() != t.labels[1].outcome();
    }

    // Competing responses to one record are shown in a seeded order.
    void build_tasks(Run& run) {
        std::map<std::string, std::vector<std::size_t>> by_record;
        for (std::size_t i = 0; i < run.responses.size(); ++i) by_record[run.responses[i].record_id].push_back(i);
        std::map<std::string, const EvalRecord*> records;
        for (const auto& r : run.records) records[r.id] = &r;

        std::size_t n = 0;
        for (const auto& record : run.records) {
            auto it = by_record.find(record.id);
            if (it == by_record.end()) continue;
            auto order = it->second;
            detail::seeded_shuffle(order, run.seed ^ detail::fnv1a(record.id));
            for (auto idx : order) {
                const auto& resp = run.responses[idx];
                TaskState st;
                st.task.run_id = run.id;
                st.task.task_id = run.id + "-t" + std::to_string(n++);
                st.task.kind = run.kind;
                st.task.record_id = resp.record_id;
                st.task.model_name = resp.model_name;
                std::uint64_t token_state = run.seed ^ detail::fnv1a(st.task.task_id);
                st.task.display_token = detail::hex64(detail::splitmix64(token_state));
                st.task.payload = detail::task_payload(record, resp, run.kind, st.task.task_id, st.task.display_token);
                run.tasks.push_back(std::move(st));
            }
        }
    }

    void assign(Run& run, TaskState& t, const std::string& annotator) {
        t.assigned.push_back(annotator);
        if (!dir_.empty()) {
            ordered_json j = {{"task_id", t.task.task_id}, {"annotator_id", annotator}};
            append_lines_locked((run_dir(run.id) / "assignments.jsonl").string(), j.dump() + "\n");
        }
    }

    // Two agreeing labels finalize; a three-label ballot goes to majority vote.
    // Three distinct faithfulness outcomes have no majority and resolve to the
    // median outcome.
    void resolve(Run&, TaskState& t) {
        if (t.final_outcome) return;
        if (t.labels.size() == 2 && t.labels[0].outcome() == t.labels[1].outcome()) {
            t.final_outcome = t.labels[0].outcome();
        } else if (t.labels.size() >= 3) {
            std::vector<int> ballot;
            for (const auto& l : t.labels) ballot.push_back(l.outcome());
            try {
                t.final_outcome = majority_vote(ballot);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NoMajority) throw;
                std::sort(ballot.begin(), ballot.end());
                t.final_outcome = ballot[ballot.size() / 2];
            }
        }
    }

    Run& find_run(const std::string& id) {
        auto it = runs_.find(id);
        if (it == runs_.end()) throw Error(ErrorCode::UnknownRun, "no run '" + id + "'");
        return it->second;
    }

    const Run& find_run(const std::string& id) const {
        auto it = runs_.find(id);
        if (it == runs_.end()) throw Error(ErrorCode::UnknownRun, "no run '" + id + "'");
        return it->second;
    }

    std::pair<Run*, TaskState*> find_task(const std::string& task_id) {
        const auto cut = task_id.rfind("-t");
        if (cut != std::string::npos) {
            auto it = runs_.find(task_id.substr(0, cut));
            if (it != runs_.end()) {
                for (auto& t : it->second.tasks) {
                    if (t.task.task_id == task_id) return {&it->second, &t};
                }
            }
        }
        throw Error(ErrorCode::UnknownTask, "no task '" + task_id + "'");
    }

    std::filesystem::path run_dir(const std::string& run_id) const { return dir_ / run_id; }

    void persist_run(const Run& run) {
        const auto d = run_dir(run.id);
        std::filesystem::create_directories(d);
        ordered_json meta = {{"run_id", run.id},
                             {"kind", to_string(run.kind)},
                             {"seed", run.seed},
                             {"annotators", std::vector<std::string>(run.annotators.begin(), run.annotators.end())}};
        std::ofstream((d / "run.json").string()) << meta.dump(2) << '\n';
        write_jsonl((d / "records.jsonl").string(), run.records);
        write_jsonl((d / "responses.jsonl").string(), run.responses);
    }

    void replay() {
        std::vector<std::pair<std::size_t, std::filesystem::path>> found;
        for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
            const auto name = entry.path().filename().string();
            if (!entry.is_directory() || name.rfind("run-", 0) != 0) continue;
            try {
                found.emplace_back(std::stoul(name.substr(4)), entry.path());
            } catch (const std::exception&) {
            }
        }
        std::sort(found.begin(), found.end());
        for (const auto& [num, path] : found) {
            std::ifstream meta_in((path / "run.json").string());
            if (!meta_in) continue;
            const auto meta = nlohmann::json::parse(meta_in);
            Run run;
            run.id = meta.at("run_id").get<std::string>();
            run.kind = parse_annotation_kind(meta.at("kind").get<std::string>()).value_or(AnnotationKind::Correctness);
            run.seed = meta.at("seed").get<std::uint64_t>();
            for (const auto& a : meta.at("annotators")) run.annotators.insert(a.get<std::string>());
            run.records = load_records((path / "records.jsonl").string());
            run.responses = load_responses((path / "responses.jsonl").string());
            build_tasks(run);
            std::map<std::string, TaskState*> by_id;
            for (auto& t : run.tasks) by_id[t.task.task_id] = &t;
            if (std::filesystem::exists(path / "assignments.jsonl")) {
                read_jsonl((path / "assignments.jsonl").string(), [&](const nlohmann::json& j, std::size_t) {
                    if (auto it = by_id.find(j.at("task_id").get<std::string>()); it != by_id.end())
                        it->second->assigned.push_back(j.at("annotator_id").get<std::string>());
                });
            }
            if (std::filesystem::exists(path / "annotations.jsonl")) {
                read_jsonl((path / "annotations.jsonl").string(), [&](const nlohmann::json& j, std::size_t) {
                    auto label = label_from_json(j);
                    if (auto it = by_id.find(label.task_id); it != by_id.end()) {
                        it->second->labels.push_back(std::move(label));
                        resolve(run, *it->second);
                    }
                });
            }
            next_run_ = std::max(next_run_, num + 1);
            run_order_.push_back(run.id);
            runs_.emplace(run.id, std::move(run));
        }
    }

    std::filesystem::path dir_;
    mutable std::mutex mutex_;
    std::map<std::string, Run> runs_;
    std::vector<std::string> run_order_;
    std::size_t next_run_ = 1;
};

}  // namespace raqeval
