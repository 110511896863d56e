#include <atomic>
#include <deque>
#include <mutex>

#include <gtest/gtest.h>

#include "raqeval/judge.hpp"

using namespace raqeval;
using namespace std::chrono_literals;

namespace {

HttpResponse completion(const std::string& text) {
    return {200, nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}}.dump(), {}};
}

// Replays scripted responses and records each request.
class ScriptedTransport : public Transport {
public:
    explicit ScriptedTransport(std::deque<HttpResponse> script) : script_(std::move(script)) {}

    HttpResponse post(const HttpRequest& request) override {
        std::lock_guard lock(mu_);
        requests.push_back(request);
        if (script_.empty()) return completion("yes");
        auto r = script_.front();
        script_.pop_front();
        if (r.status == 0) throw Error(ErrorCode::TransportError, "connection refused");
        return r;
    }

    std::vector<HttpRequest> requests;

private:
    std::mutex mu_;
    std::deque<HttpResponse> script_;
};

struct Harness {
    std::shared_ptr<ScriptedTransport> transport;
    std::vector<std::chrono::milliseconds> sleeps;
    ChatClient client;

    explicit Harness(std::deque<HttpResponse> script, std::string key = "k")
        : transport(std::make_shared<ScriptedTransport>(std::move(script))),
          client(Endpoint{"http://unused", std::move(key), "judge-model"}, transport, options()) {}

    ClientOptions options() {
        ClientOptions o;
        o.sleep = [this](std::chrono::milliseconds d) { sleeps.push_back(d); };
        return o;
    }
};

const JudgeInput kSame{"Where are they from?", {"London, England"}, "London, England", ""};

}  // namespace

TEST(ParseVerdict, Labels) {
    EXPECT_EQ(parse_verdict("Yes").label, VerdictLabel::Yes);
    EXPECT_EQ(parse_verdict("Yes").score, 1);
    EXPECT_EQ(parse_verdict("no.").label, VerdictLabel::No);
    EXPECT_EQ(parse_verdict("no.").score, 0);
    EXPECT_EQ(parse_verdict("  \"YES\", because").label, VerdictLabel::Yes);
    EXPECT_EQ(parse_verdict("\n- No").label, VerdictLabel::No);
    const auto v = parse_verdict("It depends");
    EXPECT_EQ(v.label, VerdictLabel::Invalid);
    EXPECT_FALSE(v.score.has_value());
    EXPECT_EQ(parse_verdict("").label, VerdictLabel::Invalid);
    EXPECT_EQ(parse_verdict("yesterday").label, VerdictLabel::Invalid);
    EXPECT_EQ(parse_verdict("nope").label, VerdictLabel::Invalid);
    EXPECT_EQ(parse_verdict("Yes").raw, "Yes");
}

TEST(ParseVerdict, Total) {
    for (const char* s : {"\xff\xfe", "???", "1", "yes/no", "N O"}) {
        const auto v = parse_verdict(s);
        EXPECT_EQ(v.score.has_value(), v.label != VerdictLabel::Invalid);
    }
}

TEST(Judge, MockYes) {
    Harness h({completion("Yes")});
    const auto v = judge(h.client, JudgeKind::Correctness, kSame);
    EXPECT_EQ(v.label, VerdictLabel::Yes);
    ASSERT_EQ(h.transport->requests.size(), 1u);
    const auto body = nlohmann::json::parse(h.transport->requests[0].body);
    EXPECT_EQ(body["temperature"], 0.0);
    EXPECT_EQ(body["model"], "judge-model");
    EXPECT_EQ(body["messages"][0]["role"], "system");
    EXPECT_EQ(body["messages"][1]["content"], render_judge_correctness(kSame.question, kSame.references, kSame.response).user);
    EXPECT_EQ(h.transport->requests[0].path, "/chat/completions");
    EXPECT_EQ(h.transport->requests[0].headers[0].second, "Bearer k");
}

TEST(Judge, MockNo) {
    Harness h({completion("no")});
    EXPECT_EQ(judge(h.client, JudgeKind::Faithfulness, {"q", {}, "r", "evidence"}).score, 0);
}

TEST(Retry, TwoRateLimitsThenYes) {
    HttpResponse limited{429, "slow down", {{"retry-after", "2"}}};
    Harness h({limited, limited, completion("yes")});
    EXPECT_EQ(judge(h.client, JudgeKind::Correctness, kSame).label, VerdictLabel::Yes);
    EXPECT_EQ(h.client.calls(), 3u);
    ASSERT_EQ(h.sleeps.size(), 2u);
    // Retry-After of 2 s exceeds the 500 ms and 1 s backoff steps
    EXPECT_EQ(h.sleeps[0], 2000ms);
    EXPECT_EQ(h.sleeps[1], 2000ms);
}

TEST(Retry, BackoffIsExponentialAndCapped) {
    RetryPolicy p;
    EXPECT_EQ(p.delay_for(0), 500ms);
    EXPECT_EQ(p.delay_for(1), 1000ms);
    EXPECT_EQ(p.delay_for(2), 2000ms);
    EXPECT_EQ(p.delay_for(20), 30000ms);
}

TEST(Retry, ServerErrorsAndTransportFailuresRetried) {
    Harness h({HttpResponse{503, "", {}}, HttpResponse{0, "", {}}, completion("No")});
    EXPECT_EQ(judge(h.client, JudgeKind::Correctness, kSame).label, VerdictLabel::No);
    EXPECT_EQ(h.sleeps, (std::vector<std::chrono::milliseconds>{500ms, 1000ms}));
}

TEST(Retry, ExhaustedRateLimitCarriesRetryAfter) {
    HttpResponse limited{429, "", {{"Retry-After", "1.5"}}};
    Harness h({limited, limited, limited, limited, limited, limited});
    try {
        judge(h.client, JudgeKind::Correctness, kSame);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::RateLimited);
        ASSERT_TRUE(e.retry_after.has_value());
        EXPECT_EQ(*e.retry_after, 1500ms);
    }
    EXPECT_EQ(h.client.calls(), 5u);
}

TEST(Errors, AuthIsNotRetried) {
    Harness h({HttpResponse{401, "", {}}});
    try {
        judge(h.client, JudgeKind::Correctness, kSame);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::AuthError);
    }
    EXPECT_EQ(h.client.calls(), 1u);
}

TEST(Errors, MissingKeyIsAuthError) {
    Harness h({}, "");
    try {
        generate(h.client, "hi");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::AuthError);
    }
    EXPECT_EQ(h.client.calls(), 0u);
}

TEST(Errors, ClientErrorsAndMalformedBodiesFailFast) {
    Harness h({HttpResponse{400, "bad", {}}, HttpResponse{200, "{not json", {}}});
    EXPECT_THROW(judge(h.client, JudgeKind::Correctness, kSame), Error);
    EXPECT_THROW(judge(h.client, JudgeKind::Correctness, kSame), Error);
    EXPECT_EQ(h.client.calls(), 2u);
    EXPECT_TRUE(h.sleeps.empty());
}

TEST(Generate, ForwardsSamplingAndKeepsTextVerbatim) {
    Harness h({completion("  Paris \n")});
    GenerationConfig cfg;
    cfg.max_new_tokens = 17;
    EXPECT_EQ(generate(h.client, "prompt", cfg), "  Paris \n");
    const auto body = nlohmann::json::parse(h.transport->requests[0].body);
    EXPECT_EQ(body["max_tokens"], 17);
    EXPECT_EQ(body["min_tokens"], 1);
    EXPECT_DOUBLE_EQ(body["top_p"].get<double>(), 0.95);
    EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.95);
    EXPECT_EQ(body["seed"], 0);
    EXPECT_EQ(body["messages"].size(), 1u);
}

TEST(Batch, PreservesOrderUnderConcurrency) {
    Harness h({});
    std::vector<JudgeInput> inputs;
    for (int i = 0; i < 40; ++i) inputs.push_back({"q" + std::to_string(i), {"r"}, i % 3 ? "yes" : "no", ""});

    // The response echoes the verdict carried in the prompt itself.
    class Echo : public Transport {
    public:
        HttpResponse post(const HttpRequest& req) override {
            const auto body = nlohmann::json::parse(req.body);
            const auto user = body["messages"][1]["content"].get<std::string>();
            const auto at = user.find("Prediction: ") + 12;
            return completion(user.substr(at, user.find('\n', at) - at));
        }
    };
    ChatClient client(Endpoint{"http://unused", "k", "m"}, std::make_shared<Echo>());
    const auto out = judge_batch(client, JudgeKind::Correctness, inputs, 8);
    ASSERT_EQ(out.size(), inputs.size());
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i].label, i % 3 ? VerdictLabel::Yes : VerdictLabel::No);
}

TEST(Batch, ConcurrencyLimitRespected) {
    class Slow : public Transport {
    public:
        std::atomic<int> live{0}, peak{0};
        HttpResponse post(const HttpRequest&) override {
            const int now = ++live;
            int p = peak.load();
            while (now > p && !peak.compare_exchange_weak(p, now)) {
            }
            std::this_thread::sleep_for(5ms);
            --live;
            return completion("yes");
        }
    };
    auto slow = std::make_shared<Slow>();
    ClientOptions o;
    o.max_concurrency = 2;
    ChatClient client(Endpoint{"http://unused", "k", "m"}, slow, o);
    std::vector<JudgeInput> inputs(20, kSame);
    judge_batch(client, JudgeKind::Correctness, inputs, 8);
    EXPECT_LE(slow->peak.load(), 2);
    EXPECT_EQ(client.calls(), 20u);
}

TEST(Batch, FirstErrorPropagates) {
    Harness h({HttpResponse{403, "", {}}});
    std::vector<JudgeInput> inputs(3, kSame);
    EXPECT_THROW(judge_batch(h.client, JudgeKind::Correctness, inputs, 1), Error);
}

TEST(RateLimit, SpacesRequestStarts) {
    Harness h({});
    ClientOptions o;
    o.min_interval = 100ms;
    std::vector<std::chrono::milliseconds> sleeps;
    o.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
    ChatClient client(Endpoint{"http://unused", "k", "m"}, h.transport, o);
    for (int i = 0; i < 3; ++i) judge(client, JudgeKind::Correctness, kSame);
    // the injected sleep does not advance the clock, so each call waits longer
    ASSERT_EQ(sleeps.size(), 2u);
    EXPECT_GT(sleeps[0].count(), 50);
    EXPECT_GT(sleeps[1], sleeps[0]);
}

TEST(Endpoint, BaseUrlSplit) {
    auto b = BaseUrl::parse("https://api.example.com/v1/");
    EXPECT_EQ(b.origin, "https://api.example.com");
    EXPECT_EQ(b.prefix, "/v1");
    b = BaseUrl::parse("http://127.0.0.1:8080");
    EXPECT_EQ(b.origin, "http://127.0.0.1:8080");
    EXPECT_EQ(b.prefix, "");
}

TEST(Http, LocalMockServerRoundTrip) {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        if (hits++ < 2) {
            res.status = 429;
            res.set_header("Retry-After", "0");
            return;
        }
        EXPECT_EQ(req.get_header_value("Authorization"), "Bearer secret");
        const auto body = nlohmann::json::parse(req.body);
        res.set_content(completion(body["messages"].back()["content"].get<std::string>().substr(0, 3) == "You" ? "Yes" : "No").body,
                        "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    ClientOptions o;
    o.sleep = [](std::chrono::milliseconds) {};
    o.timeout = 5000ms;
    auto client = ChatClient::over_http(Endpoint{"http://127.0.0.1:" + std::to_string(port) + "/v1", "secret", "m"}, o);
    EXPECT_EQ(judge(client, JudgeKind::Correctness, kSame).label, VerdictLabel::Yes);
    EXPECT_EQ(hits.load(), 3);
    server.stop();
    t.join();
}

TEST(Http, ConnectionRefusedIsTransportError) {
    ClientOptions o;
    o.sleep = [](std::chrono::milliseconds) {};
    o.retry.max_retries = 1;
    o.timeout = 1000ms;
    auto client = ChatClient::over_http(Endpoint{"http://127.0.0.1:1", "k", "m"}, o);
    try {
        judge(client, JudgeKind::Correctness, kSame);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TransportError);
    }
    EXPECT_EQ(client.calls(), 2u);
}
