#pragma once

// Chat-completion client used for answer generation and for the yes/no judges.
//
// All network traffic goes through the Transport interface; tests inject a
// scripted transport and never touch the network.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "raqeval/error.hpp"
#include "raqeval/prompts.hpp"
#include "raqeval/record.hpp"

namespace raqeval {

struct HttpRequest {
    std::string path;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
};

struct HttpResponse {
    int status = 0;
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;

    std::optional<std::string> header(std::string_view name) const {
        for (const auto& [k, v] : headers) {
            if (k.size() == name.size() &&
                std::equal(k.begin(), k.end(), name.begin(), [](char a, char b) {
                    return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
                }))
                return v;
        }
        return std::nullopt;
    }
};

/// POSTs a request. Connection-level failures throw TransportError; any HTTP
/// status is returned as a response.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// Splits "https://host:port/prefix" into the origin and the path prefix.
struct BaseUrl {
    std::string origin;
    std::string prefix;

    static BaseUrl parse(std::string_view url) {
        const auto scheme_end = url.find("://");
        const auto host_start = scheme_end == std::string_view::npos ? 0 : scheme_end + 3;
        const auto path_start = url.find('/', host_start);
        BaseUrl out;
        out.origin = std::string(url.substr(0, path_start));
        if (path_start != std::string_view::npos) out.prefix = std::string(url.substr(path_start));
        while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
        return out;
    }
};

class HttplibTransport : public Transport {
public:
    HttplibTransport(const std::string& base_url, std::chrono::milliseconds timeout)
        : base_(BaseUrl::parse(base_url)), timeout_(timeout) {}

    HttpResponse post(const HttpRequest& request) override {
        httplib::Client client(base_.origin);
        client.set_connection_timeout(timeout_);
        client.set_read_timeout(timeout_);
        client.set_write_timeout(timeout_);
        httplib::Headers headers;
        for (const auto& [k, v] : request.headers) headers.emplace(k, v);
        auto result = client.Post(base_.prefix + request.path, headers, request.body, "application/json");
        if (!result) {
            throw Error(ErrorCode::TransportError, "request to " + base_.origin + " failed: " + httplib::to_string(result.error()));
        }
        HttpResponse out;
        out.status = result->status;
        out.body = result->body;
        for (const auto& [k, v] : result->headers) out.headers.emplace_back(k, v);
        return out;
    }

private:
    BaseUrl base_;
    std::chrono::milliseconds timeout_;
};

struct Endpoint {
    std::string base_url;
    std::string api_key;
    std::string model;

    /// RAQEVAL_API_BASE, RAQEVAL_API_KEY, RAQEVAL_JUDGE_MODEL.
    static Endpoint from_env() {
        auto get = [](const char* name) {
            const char* v = std::getenv(name);
            return v ? std::string(v) : std::string();
        };
        return {get("RAQEVAL_API_BASE"), get("RAQEVAL_API_KEY"), get("RAQEVAL_JUDGE_MODEL")};
    }
};

struct RetryPolicy {
    int max_retries = 4;
    std::chrono::milliseconds base_delay{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_delay{30000};

    std::chrono::milliseconds delay_for(int attempt) const {
        double d = static_cast<double>(base_delay.count());
        for (int i = 0; i < attempt; ++i) d *= multiplier;
        return std::chrono::milliseconds(static_cast<std::int64_t>(std::min(d, static_cast<double>(max_delay.count()))));
    }
};

struct ClientOptions {
    RetryPolicy retry;
    std::chrono::milliseconds timeout{60000};
    /// Simultaneous in-flight requests.
    std::ptrdiff_t max_concurrency = 4;
    /// Minimum spacing between request starts; zero disables rate limiting.
    std::chrono::milliseconds min_interval{0};
    std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
        std::this_thread::sleep_for(d);
    };
};

/// Sampling fields sent with a request.
struct SamplingParams {
    double temperature = 0;
    std::optional<double> top_p;
    std::optional<std::int64_t> seed;
    std::optional<int> min_tokens;
    std::optional<int> max_tokens;

    static SamplingParams from(const GenerationConfig& g) {
        g.validate();
        return {g.temperature, g.top_p, g.seed, g.min_new_tokens, g.max_new_tokens};
    }
};

class ChatClient {
public:
    ChatClient(Endpoint endpoint, std::shared_ptr<Transport> transport, ClientOptions options = {})
        : endpoint_(std::move(endpoint)),
          transport_(std::move(transport)),
          options_(std::move(options)),
          slots_(std::max<std::ptrdiff_t>(1, options_.max_concurrency)) {}

    /// Client over HTTP for the configured endpoint.
    static ChatClient over_http(Endpoint endpoint, ClientOptions options = {}) {
        auto transport = std::make_shared<HttplibTransport>(endpoint.base_url, options.timeout);
        return ChatClient(std::move(endpoint), std::move(transport), std::move(options));
    }

    const Endpoint& endpoint() const noexcept { return endpoint_; }
    std::size_t calls() const noexcept { return calls_.load(); }

    static nlohmann::json request_body(const std::string& model, const ChatPrompt& prompt, const SamplingParams& params) {
        nlohmann::json messages = nlohmann::json::array();
        if (!prompt.system.empty()) messages.push_back({{"role", "system"}, {"content", prompt.system}});
        messages.push_back({{"role", "user"}, {"content", prompt.user}});
        nlohmann::json body = {{"model", model}, {"messages", messages}, {"temperature", params.temperature}};
        if (params.top_p) body["top_p"] = *params.top_p;
        if (params.seed) body["seed"] = *params.seed;
        if (params.min_tokens) body["min_tokens"] = *params.min_tokens;
        if (params.max_tokens) body["max_tokens"] = *params.max_tokens;
        return body;
    }

    /// One chat completion, with retries on 429, 5xx and transport failures.
    std::string complete(const ChatPrompt& prompt, const SamplingParams& params) {
        if (endpoint_.api_key.empty()) throw Error(ErrorCode::AuthError, "no API key configured (RAQEVAL_API_KEY)");
        HttpRequest req;
        req.path = "/chat/completions";
        req.headers = {{"Authorization", "Bearer " + endpoint_.api_key}};
        req.body = request_body(endpoint_.model, prompt, params).dump();

        std::optional<Error> last;
        for (int attempt = 0; attempt <= options_.retry.max_retries; ++attempt) {
            if (attempt > 0) {
                auto wait = options_.retry.delay_for(attempt - 1);
                if (last->retry_after) wait = std::max(wait, *last->retry_after);
                spdlog::warn("chat request failed ({}); retry {}/{} in {} ms", last->what(), attempt,
                             options_.retry.max_retries, wait.count());
                options_.sleep(wait);
            }
            auto outcome = send_once(req);
            if (auto* text = std::get_if<std::string>(&outcome)) return std::move(*text);
            last = std::get<Error>(std::move(outcome));
        }
        throw *last;
    }

private:
    // Returns the completion text, or a retryable failure. Anything else throws.
    std::variant<std::string, Error> send_once(const HttpRequest& req) {
        slots_.acquire();
        struct Release {
            std::counting_semaphore<>& s;
            ~Release() { s.release(); }
        } release{slots_};
        pace();
        ++calls_;
        HttpResponse resp;
        try {
            resp = transport_->post(req);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::TransportError) return e;
            throw;
        }
        if (resp.status == 401 || resp.status == 403) {
            throw Error(ErrorCode::AuthError, "endpoint rejected credentials (HTTP " + std::to_string(resp.status) + ")");
        }
        if (resp.status == 429) {
            Error e(ErrorCode::RateLimited, "endpoint rate limited the request");
            if (auto ra = resp.header("Retry-After")) {
                try {
                    e.retry_after = std::chrono::milliseconds(static_cast<std::int64_t>(std::stod(*ra) * 1000));
                } catch (const std::exception&) {
                }
            }
            return e;
        }
        if (resp.status >= 500) {
            return Error(ErrorCode::TransportError, "endpoint returned HTTP " + std::to_string(resp.status));
        }
        if (resp.status < 200 || resp.status >= 300) {
            throw Error(ErrorCode::TransportError,
                        "endpoint returned HTTP " + std::to_string(resp.status) + ": " + resp.body.substr(0, 200));
        }
        try {
            const auto body = nlohmann::json::parse(resp.body);
            return body.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& ex) {
            throw Error(ErrorCode::TransportError, std::string("malformed chat completion response: ") + ex.what());
        }
    }

    void pace() {
        if (options_.min_interval.count() <= 0) return;
        std::chrono::milliseconds wait{0};
        {
            std::lock_guard lock(pace_mutex_);
            const auto now = std::chrono::steady_clock::now();
            if (next_start_ > now) wait = std::chrono::duration_cast<std::chrono::milliseconds>(next_start_ - now);
            next_start_ = std::max(now, next_start_) + options_.min_interval;
        }
        if (wait.count() > 0) options_.sleep(wait);
    }

    Endpoint endpoint_;
    std::shared_ptr<Transport> transport_;
    ClientOptions options_;
    std::counting_semaphore<> slots_;
    std::atomic<std::size_t> calls_{0};
    std::mutex pace_mutex_;
    std::chrono::steady_clock::time_point next_start_{};
};

enum class VerdictLabel { Yes, No, Invalid };

constexpr std::string_view to_string(VerdictLabel v) {
    switch (v) {
        case VerdictLabel::Yes: return "yes";
        case VerdictLabel::No: return "no";
        case VerdictLabel::Invalid: return "invalid";
    }
    return "";
}

struct JudgeVerdict {
    std::string raw;
    VerdictLabel label = VerdictLabel::Invalid;
    std::optional<int> score;
};

/// First word after leading whitespace and punctuation, case-insensitive:
/// "yes" -> 1, "no" -> 0, anything else is Invalid.
inline JudgeVerdict parse_verdict(std::string_view raw) {
    JudgeVerdict v{std::string(raw), VerdictLabel::Invalid, std::nullopt};
    icu::UnicodeString text =
        icu::UnicodeString::fromUTF8(icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
    text.foldCase(U_FOLD_CASE_DEFAULT);
    int32_t i = 0;
    while (i < text.length()) {
        const UChar32 c = text.char32At(i);
        if (!(u_isUWhiteSpace(c) || u_ispunct(c) || u_charType(c) == U_FORMAT_CHAR)) break;
        i += U16_LENGTH(c);
    }
    std::string word;
    while (i < text.length()) {
        const UChar32 c = text.char32At(i);
        if (!u_isalpha(c)) break;
        icu::UnicodeString(c).toUTF8String(word);
        i += U16_LENGTH(c);
    }
    if (word == "yes") {
        v.label = VerdictLabel::Yes;
        v.score = 1;
    } else if (word == "no") {
        v.label = VerdictLabel::No;
        v.score = 0;
    }
    return v;
}

enum class JudgeKind { Correctness, Faithfulness };

struct JudgeInput {
    std::string question;
    std::vector<std::string> references;
    std::string response;
    std::string evidence;
};

inline ChatPrompt judge_prompt(JudgeKind kind, const JudgeInput& in) {
    return kind == JudgeKind::Correctness ? render_judge_correctness(in.question, in.references, in.response)
                                          : render_judge_faithfulness(in.question, in.response, in.evidence);
}

/// Judging runs at temperature 0.
inline JudgeVerdict judge(ChatClient& client, JudgeKind kind, const JudgeInput& input) {
    return parse_verdict(client.complete(judge_prompt(kind, input), SamplingParams{}));
}

/// Judges every input with up to `parallelism` workers; results keep input order.
inline std::vector<JudgeVerdict> judge_batch(ChatClient& client, JudgeKind kind, std::span<const JudgeInput> inputs,
                                             std::size_t parallelism = 4) {
    std::vector<JudgeVerdict> out(inputs.size());
    std::vector<std::optional<Error>> errors(inputs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < inputs.size(); i = next++) {
            try {
                out[i] = judge(client, kind, inputs[i]);
            } catch (const Error& e) {
                errors[i] = e;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const auto n = std::max<std::size_t>(1, std::min(parallelism, inputs.size()));
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
        if (e) throw *e;
    }
    return out;
}

/// Response text is returned verbatim.
inline std::string generate(ChatClient& client, const std::string& prompt, const GenerationConfig& config = {}) {
    return client.complete(ChatPrompt{"", prompt}, SamplingParams::from(config));
}

}  // namespace raqeval
