#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include <gtest/gtest.h>

#include "raqeval/store.hpp"

using namespace raqeval;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("raqeval-store-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    static int& counter() {
        static int n = 0;
        return n;
    }
    fs::path path_;
};

void write_text(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

ErrorCode code_of(const std::function<void()>& fn, std::optional<std::size_t>* line = nullptr) {
    try {
        fn();
    } catch (const Error& e) {
        if (line) *line = e.line;
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::InvalidArgument;
}

EvalRecord sample_record() {
    EvalRecord r;
    r.id = "nq-1";
    r.dataset = "nq";
    r.query = std::string("where are one direction from?");
    r.references = {"London, England", "London"};
    r.passages = {{1, "One Direction", "An English-Irish pop boy band formed in London.", true},
                  {2, "Harry Styles", "Born in Redditch.", false}};
    r.metadata = {{"split", "dev"}};
    return r;
}

}  // namespace

TEST(Records, RoundTrip) {
    TempDir dir;
    auto conv = sample_record();
    conv.id = "topi-1";
    conv.dataset = "topiocqa";
    conv.task_kind = TaskKind::Conversational;
    conv.query = Conversation{{Speaker::User, "who?"}, {Speaker::Agent, "them"}, {Speaker::User, "where?"}};
    const std::vector<EvalRecord> in = {sample_record(), conv};
    save_records(dir.file("r.jsonl"), in);
    EXPECT_EQ(load_records(dir.file("r.jsonl")), in);
}

TEST(Records, UnknownFieldsKeptInMetadata) {
    const auto r = record_from_json(nlohmann::json::parse(
        R"({"id":"a","dataset":"nq","task_kind":"open_domain","question":"q","references":["x"],"answer_type":"entity"})"));
    EXPECT_EQ(r.metadata.at("answer_type"), "entity");
    EXPECT_TRUE(r.passages.empty());
}

TEST(Records, SchemaErrorsCarryLine) {
    TempDir dir;
    const std::string good = R"({"id":"a","dataset":"nq","task_kind":"open_domain","question":"q","references":["x"]})";
    write_text(dir.file("r.jsonl"), good + "\n\n" + R"({"id":"b","dataset":"nq","task_kind":"open_domain","question":"q","references":[]})" + "\n");
    std::optional<std::size_t> line;
    EXPECT_EQ(code_of([&] { load_records(dir.file("r.jsonl")); }, &line), ErrorCode::SchemaError);
    EXPECT_EQ(line, 3u);

    write_text(dir.file("p.jsonl"), good + "\n{broken\n");
    EXPECT_EQ(code_of([&] { load_records(dir.file("p.jsonl")); }, &line), ErrorCode::ParseError);
    EXPECT_EQ(line, 2u);

    write_text(dir.file("d.jsonl"), good + "\n" + good + "\n");
    EXPECT_EQ(code_of([&] { load_records(dir.file("d.jsonl")); }, &line), ErrorCode::DuplicateId);

    EXPECT_EQ(code_of([&] { load_records(dir.file("missing.jsonl")); }), ErrorCode::IoError);
}

TEST(Records, SameIdInDifferentDatasetsIsAllowed) {
    TempDir dir;
    write_text(dir.file("r.jsonl"),
               R"({"id":"a","dataset":"nq","task_kind":"open_domain","question":"q","references":["x"]})"
               "\n"
               R"({"id":"a","dataset":"hotpotqa","task_kind":"multi_hop","question":"q","references":["x"]})"
               "\n");
    EXPECT_EQ(load_records(dir.file("r.jsonl")).size(), 2u);
}

TEST(Records, Validation) {
    auto bad = [](const char* text) {
        return code_of([&] { record_from_json(nlohmann::json::parse(text), 1); });
    };
    // both question and turns
    EXPECT_EQ(bad(R"({"id":"a","dataset":"d","task_kind":"open_domain","question":"q","turns":[],"references":["x"]})"),
              ErrorCode::SchemaError);
    // conversation ending with agent
    EXPECT_EQ(bad(R"({"id":"a","dataset":"d","task_kind":"conversational","turns":[{"speaker":"user","text":"q"},{"speaker":"agent","text":"a"}],"references":["x"]})"),
              ErrorCode::SchemaError);
    // ranks out of order
    EXPECT_EQ(bad(R"({"id":"a","dataset":"d","task_kind":"open_domain","question":"q","references":["x"],"passages":[{"rank":2,"title":"","text":""},{"rank":1,"title":"","text":""}]})"),
              ErrorCode::SchemaError);
    EXPECT_EQ(bad(R"({"id":"a","dataset":"d","task_kind":"open_qa","question":"q","references":["x"]})"), ErrorCode::SchemaError);
    EXPECT_EQ(bad(R"({"id":"","dataset":"d","task_kind":"open_domain","question":"q","references":["x"]})"), ErrorCode::SchemaError);
    EXPECT_EQ(bad(R"([1,2])"), ErrorCode::SchemaError);
}

TEST(Responses, RoundTripAndResolve) {
    TempDir dir;
    ModelResponse a{"nq-1", "gpt-3.5", "London, England", ResponseCondition::Retrieved, GenerationConfig{}};
    ModelResponse b{"nq-1", "flan-t5", "  london\n", ResponseCondition::IrrelevantOnly, std::nullopt};
    save_responses(dir.file("resp.jsonl"), {a, b});
    const auto loaded = load_responses(dir.file("resp.jsonl"));
    EXPECT_EQ(loaded, (std::vector<ModelResponse>{a, b}));
    EXPECT_NO_THROW(check_responses_resolve({sample_record()}, loaded));
    ModelResponse orphan{"nq-2", "m", "x", {}, {}};
    EXPECT_EQ(code_of([&] { check_responses_resolve({sample_record()}, {orphan}); }), ErrorCode::SchemaError);
}

TEST(Scores, RoundTripWithNullAndProvenance) {
    TempDir dir;
    std::vector<ScoreRow> rows = {{"nq-1", "m", "f1", 50.0, Provenance::Computed, ""},
                                  {"nq-1", "m", "gpt4_eval", std::nullopt, Provenance::Computed, ""},
                                  {"nq-1", "m", "bertscore", 88.5, Provenance::Imported, "bert_score 0.3.13"}};
    save_scores(dir.file("s.jsonl"), rows);
    EXPECT_EQ(load_scores(dir.file("s.jsonl")), rows);
}

TEST(Scores, Validation) {
    auto bad = [](const char* text) { return code_of([&] { score_from_json(nlohmann::json::parse(text), 1); }); };
    EXPECT_EQ(bad(R"({"record_id":"a","model_name":"m","metric":"f1","value":101})"), ErrorCode::SchemaError);
    EXPECT_EQ(bad(R"({"record_id":"a","model_name":"m","metric":"f1","value":"50"})"), ErrorCode::SchemaError);
    EXPECT_EQ(bad(R"({"record_id":"a","model_name":"m","metric":"f1","value":5,"provenance":"imported"})"),
              ErrorCode::SchemaError);
}

TEST(HumanScores, RoundTrip) {
    TempDir dir;
    std::vector<HumanScore> rows = {{"a", "m", 1.0}, {"b", "m", 0.5}};
    save_human_scores(dir.file("h.jsonl"), rows);
    EXPECT_EQ(load_human_scores(dir.file("h.jsonl")), rows);
}

TEST(Append, ConcurrentThreadsAndProcessesNeverInterleave) {
    TempDir dir;
    const auto path = dir.file("scores.jsonl");
    constexpr int kWriters = 6, kBatches = 40, kRows = 25;
    auto writer = [&](int w) {
        for (int b = 0; b < kBatches; ++b) {
            std::vector<ScoreRow> rows;
            for (int i = 0; i < kRows; ++i)
                rows.push_back({"r" + std::to_string(w) + "-" + std::to_string(b) + "-" + std::to_string(i),
                                std::string(200, static_cast<char>('a' + w % 26)), "f1", double(i), Provenance::Computed, ""});
            save_scores(path, rows);
        }
    };
    std::vector<pid_t> children;
    for (int w = 0; w < 2; ++w) {
        const pid_t pid = ::fork();
        ASSERT_GE(pid, 0);
        if (pid == 0) {
            try {
                writer(100 + w);
            } catch (...) {
                ::_exit(1);
            }
            ::_exit(0);
        }
        children.push_back(pid);
    }
    {
        std::vector<std::jthread> threads;
        for (int w = 0; w < kWriters; ++w) threads.emplace_back(writer, w);
    }
    for (auto pid : children) {
        int status = 0;
        ::waitpid(pid, &status, 0);
        EXPECT_TRUE(WIFEXITED(status) && WEXITSTATUS(status) == 0);
    }
    const auto rows = load_scores(path);
    EXPECT_EQ(rows.size(), std::size_t((kWriters + 2) * kBatches * kRows));
    std::set<std::string> ids;
    for (const auto& r : rows) ids.insert(r.record_id);
    EXPECT_EQ(ids.size(), rows.size());
}
