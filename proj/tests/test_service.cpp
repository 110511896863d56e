#include <filesystem>

#include <gtest/gtest.h>

#include "raqeval/service.hpp"
#include "raqeval/store.hpp"

using namespace raqeval;
namespace fs = std::filesystem;

namespace {

nlohmann::json run_body() {
    nlohmann::json records = nlohmann::json::array(), responses = nlohmann::json::array();
    for (int i = 0; i < 4; ++i) {
        EvalRecord r;
        r.id = "q" + std::to_string(i);
        r.dataset = "nq";
        r.query = "where is team " + std::to_string(i) + " from?";
        r.references = {"London"};
        r.passages = {{1, "Team", "The team is from London.", true}};
        records.push_back(nlohmann::json::parse(to_json(r).dump()));
        responses.push_back({{"record_id", r.id}, {"model_name", "secret-model-a"}, {"text", i % 2 ? "London" : "Paris"}});
        responses.push_back({{"record_id", r.id}, {"model_name", "secret-model-b"}, {"text", "They are from London, England"}});
    }
    return {{"kind", "correctness"}, {"seed", 3}, {"annotators", {"alice", "bob", "carol"}}, {"records", records}, {"responses", responses}};
}

class ServiceTest : public testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("raqeval-svc-" + std::to_string(::getpid()));
        fs::remove_all(dir_);
        service_ = std::make_unique<EvalService>(ServiceOptions{dir_, {}});
        port_ = service_->start_background();
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    }
    void TearDown() override {
        service_->stop();
        fs::remove_all(dir_);
    }

    std::pair<int, nlohmann::json> post(const std::string& path, const nlohmann::json& body) {
        auto res = client_->Post(path, body.dump(), "application/json");
        EXPECT_TRUE(res);
        return {res->status, nlohmann::json::parse(res->body)};
    }
    std::pair<int, nlohmann::json> get(const std::string& path, const httplib::Headers& headers = {}) {
        auto res = client_->Get(path, headers);
        EXPECT_TRUE(res);
        return {res->status, nlohmann::json::parse(res->body)};
    }

    fs::path dir_;
    std::unique_ptr<EvalService> service_;
    int port_ = 0;
    std::unique_ptr<httplib::Client> client_;
};

}  // namespace

TEST_F(ServiceTest, FullAnnotationRound) {
    auto [status, created] = post("/runs", run_body());
    ASSERT_EQ(status, 201) << created.dump();
    const auto run = created["run_id"].get<std::string>();
    EXPECT_EQ(created["tasks"], 8);

    // every annotator-visible payload is blind
    int labeled = 0;
    for (int round = 0; round < 40; ++round) {
        bool any = false;
        for (const char* who : {"alice", "bob", "carol"}) {
            auto [s, body] = get("/tasks/next?kind=correctness&annotator=" + std::string(who));
            ASSERT_EQ(s, 200);
            if (body["task"].is_null()) continue;
            any = true;
            const auto dumped = body.dump();
            EXPECT_EQ(dumped.find("secret-model"), std::string::npos);
            const auto text = body["task"]["response"].get<std::string>();
            // bob marks everything correct, the others only responses mentioning London
            const int value = std::string(who) == "bob" ? 1 : (text.find("London") != std::string::npos ? 1 : 0);
            auto [ls, ack] = post("/labels", {{"task_id", body["task"]["task_id"]}, {"annotator_id", who}, {"kind", "correctness"}, {"value", value}});
            ASSERT_EQ(ls, 201) << ack.dump();
            ++labeled;
        }
        if (!any) break;
    }
    auto [ps, progress] = get("/progress/" + run);
    ASSERT_EQ(ps, 200);
    EXPECT_EQ(progress["finalized"], 8);
    EXPECT_EQ(progress["total"], 8);
    EXPECT_EQ(progress["n_tasks"], 8);

    auto [rs, report] = get("/report/" + run);
    ASSERT_EQ(rs, 200);
    EXPECT_EQ(report["kind"], "correctness");
    EXPECT_FALSE(report["scores"].empty());
    bool saw_recall = false;
    for (const auto& c : report["correlations"]) {
        if (c["metric"] == "recall") {
            saw_recall = true;
            EXPECT_NEAR(c["spearman_rho"].get<double>(), 1.0, 1e-12);
        }
    }
    EXPECT_TRUE(saw_recall);
}

TEST_F(ServiceTest, AnnotatorHeaderAndErrors) {
    auto [status, created] = post("/runs", run_body());
    ASSERT_EQ(status, 201);
    auto [s1, t] = get("/tasks/next?kind=correctness", {{"X-Annotator-Id", "alice"}});
    EXPECT_EQ(s1, 200);
    EXPECT_FALSE(t["task"].is_null());

    auto [s2, e2] = get("/tasks/next?kind=correctness&annotator=mallory");
    EXPECT_EQ(s2, 404);
    EXPECT_EQ(e2["code"], "UnknownAnnotator");

    auto [s3, e3] = get("/progress/run-77");
    EXPECT_EQ(s3, 404);
    EXPECT_EQ(e3["code"], "UnknownRun");

    const auto task_id = t["task"]["task_id"];
    auto [s4, e4] = post("/labels", {{"task_id", task_id}, {"annotator_id", "bob"}, {"kind", "correctness"}, {"value", 1}});
    EXPECT_EQ(s4, 409);
    EXPECT_EQ(e4["code"], "UnassignedTask");

    post("/labels", {{"task_id", task_id}, {"annotator_id", "alice"}, {"kind", "correctness"}, {"value", 1}});
    auto [s5, e5] = post("/labels", {{"task_id", task_id}, {"annotator_id", "alice"}, {"kind", "correctness"}, {"value", 1}});
    EXPECT_EQ(s5, 409);
    EXPECT_EQ(e5["code"], "DuplicateLabel");

    auto res = client_->Post("/runs", "{nope", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(nlohmann::json::parse(res->body)["code"], "ParseError");

    auto bad = run_body();
    bad["records"][0].erase("references");
    auto [s6, e6] = post("/runs", bad);
    EXPECT_EQ(s6, 400);
    EXPECT_EQ(e6["code"], "SchemaError");
}

TEST_F(ServiceTest, PlaceholderUiAndRestart) {
    auto res = client_->Get("/");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_NE(res->body.find("raqeval"), std::string::npos);

    auto [status, created] = post("/runs", run_body());
    ASSERT_EQ(status, 201);
    service_->stop();
    service_ = std::make_unique<EvalService>(ServiceOptions{dir_, {}});
    port_ = service_->start_background();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    auto [ps, progress] = get("/progress/" + created["run_id"].get<std::string>());
    EXPECT_EQ(ps, 200);
    EXPECT_EQ(progress["total"], 8);
}

TEST_F(ServiceTest, ServesUiDirectory) {
    const auto ui = dir_ / "ui";
    fs::create_directories(ui);
    std::ofstream(ui / "index.html") << "<p>annotator</p>";
    service_->stop();
    service_ = std::make_unique<EvalService>(ServiceOptions{dir_ / "data", ui});
    port_ = service_->start_background();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    auto res = client_->Get("/index.html");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->body, "<p>annotator</p>");
    res = client_->Get("/");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->body, "<p>annotator</p>");
}
