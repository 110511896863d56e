#pragma once

// HTTP+JSON front end of the annotation workflow.
//
//   POST /runs                       ingest records + responses, returns run_id
//   GET  /tasks/next?annotator=&kind=[&run=]
//   POST /labels
//   GET  /progress/:run_id
//   GET  /report/:run_id             score + correlation tables
//   GET  /                           annotator UI (static files)
//
// Errors are {"code": ..., "message": ...}.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "raqeval/analysis.hpp"
#include "raqeval/error.hpp"
#include "raqeval/scoring.hpp"
#include "raqeval/store.hpp"
#include "raqeval/workflow.hpp"

namespace raqeval {

inline int http_status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownRun:
        case ErrorCode::UnknownTask:
        case ErrorCode::UnknownAnnotator: return 404;
        case ErrorCode::DuplicateLabel:
        case ErrorCode::UnassignedTask: return 409;
        case ErrorCode::IoError: return 500;
        default: return 400;
    }
}

inline nlohmann::json progress_json(const std::string& run_id, const RunProgress& p) {
    return {{"run_id", run_id},
            {"n_tasks", p.agreement.n_tasks},
            {"n_agree", p.agreement.n_agree},
            {"percent_agreement", p.agreement.percent_agreement},
            {"n_conflicts_resolved", p.agreement.n_conflicts_resolved},
            {"total", p.n_total},
            {"pending", p.n_pending},
            {"conflict", p.n_conflict},
            {"finalized", p.n_finalized}};
}

/// Lexical scores of the run's responses, their aggregate table and their
/// correlation with the finalized human labels.
inline nlohmann::json run_report(const AnnotationWorkflow& wf, const std::string& run_id) {
    const auto kind = wf.run_kind(run_id);
    const auto records = wf.run_records(run_id);
    const auto responses = wf.run_responses(run_id);
    ScoringOptions opts;
    opts.correctness = kind == AnnotationKind::Correctness;
    opts.faithfulness = kind == AnnotationKind::Faithfulness;
    const auto scores = score_all(records, responses, opts);
    const auto humans = wf.final_scores(run_id);

    nlohmann::json table = nlohmann::json::array();
    for (const auto& c : aggregate_table(scores, dataset_index(records))) {
        table.push_back({{"dataset", c.dataset}, {"model", c.model}, {"metric", c.metric}, {"mean", c.mean}, {"n", c.n}});
    }
    nlohmann::json human_table = nlohmann::json::array();
    {
        std::map<std::string, std::pair<double, std::size_t>> by_model;
        for (const auto& h : humans) {
            by_model[h.model_name].first += 100 * h.value;
            ++by_model[h.model_name].second;
        }
        for (const auto& [model, acc] : by_model)
            human_table.push_back({{"model", model}, {"mean", acc.first / static_cast<double>(acc.second)}, {"n", acc.second}});
    }
    nlohmann::json correlations = nlohmann::json::array();
    const auto& metrics = opts.correctness ? correctness_metric_names() : faithfulness_metric_names();
    for (const auto& m : metrics) {
        nlohmann::json entry = {{"metric", m}};
        try {
            const auto r = correlate_with_humans(scores, humans, m);
            entry["spearman_rho"] = r.spearman_rho;
            entry["kendall_tau"] = r.kendall_tau;
            entry["n"] = r.n;
        } catch (const Error& e) {
            entry["spearman_rho"] = nullptr;
            entry["kendall_tau"] = nullptr;
            entry["error"] = std::string(to_string(e.code()));
        }
        correlations.push_back(entry);
    }
    return {{"run_id", run_id}, {"kind", to_string(kind)}, {"scores", table}, {"human", human_table}, {"correlations", correlations}};
}

struct ServiceOptions {
    std::filesystem::path data_dir;
    /// Directory served at "/"; empty serves a placeholder page.
    std::filesystem::path ui_dir;
};

class EvalService {
public:
    explicit EvalService(ServiceOptions opts) : opts_(std::move(opts)), workflow_(opts_.data_dir) { routes(); }

    AnnotationWorkflow& workflow() { return workflow_; }

    /// Binds and serves on the calling thread.
    bool listen(const std::string& host, int port) { return server_.listen(host, port); }

    /// Binds to an ephemeral port and serves on a background thread.
    int start_background(const std::string& host = "127.0.0.1") {
        const int port = server_.bind_to_any_port(host);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port;
    }

    void stop() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    ~EvalService() { stop(); }

private:
    static void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json; charset=utf-8");
    }

    static void send_error(httplib::Response& res, const Error& e) {
        send_json(res, http_status_for(e.code()), {{"code", std::string(to_string(e.code()))}, {"message", e.what()}});
    }

    template <typename Fn>
    static void guarded(httplib::Response& res, Fn&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            send_error(res, e);
        } catch (const nlohmann::json::exception& e) {
            send_error(res, Error(ErrorCode::ParseError, e.what()));
        }
    }

    static std::optional<std::string> annotator_of(const httplib::Request& req) {
        if (req.has_param("annotator")) return req.get_param_value("annotator");
        if (req.has_header("X-Annotator-Id")) return req.get_header_value("X-Annotator-Id");
        return std::nullopt;
    }

    void routes() {
        server_.Post("/runs", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto body = parse_body(req.body);
                RunSpec spec;
                const auto kind = parse_annotation_kind(body.value("kind", std::string("correctness")));
                if (!kind) throw Error(ErrorCode::SchemaError, "kind must be correctness or faithfulness");
                spec.kind = *kind;
                spec.seed = body.value("seed", std::uint64_t{0});
                spec.annotators = body.value("annotators", std::vector<std::string>{});
                std::size_t i = 0;
                for (const auto& r : body.at("records")) spec.records.push_back(record_from_json(r, ++i));
                i = 0;
                for (const auto& r : body.at("responses")) spec.responses.push_back(response_from_json(r, ++i));
                const auto run_id = workflow_.create_run(spec);
                spdlog::info("created {} with {} responses", run_id, spec.responses.size());
                send_json(res, 201, {{"run_id", run_id}, {"tasks", workflow_.tasks(run_id).size()}});
            });
        });

        server_.Get("/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto annotator = annotator_of(req);
                if (!annotator || annotator->empty()) throw Error(ErrorCode::InvalidArgument, "annotator is required");
                const auto kind = parse_annotation_kind(req.has_param("kind") ? req.get_param_value("kind") : "correctness");
                if (!kind) throw Error(ErrorCode::InvalidArgument, "kind must be correctness or faithfulness");
                std::optional<std::string> run;
                if (req.has_param("run")) run = req.get_param_value("run");
                const auto task = workflow_.next_task(*annotator, *kind, run);
                send_json(res, 200, {{"task", task ? task->payload : nlohmann::json(nullptr)}});
            });
        });

        server_.Post("/labels", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                auto body = parse_body(req.body);
                if (!body.contains("annotator_id")) {
                    if (auto a = annotator_of(req)) body["annotator_id"] = *a;
                }
                const auto label = label_from_json(body);
                const auto final_outcome = workflow_.submit_label(label);
                send_json(res, 201, {{"ok", true}, {"task_id", label.task_id}, {"finalized", final_outcome.has_value()}});
            });
        });

        server_.Get(R"(/progress/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto run_id = req.matches[1].str();
                send_json(res, 200, progress_json(run_id, workflow_.progress(run_id)));
            });
        });

        server_.Get(R"(/report/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { send_json(res, 200, run_report(workflow_, req.matches[1].str())); });
        });

        if (!opts_.ui_dir.empty() && std::filesystem::is_directory(opts_.ui_dir)) {
            server_.set_mount_point("/", opts_.ui_dir.string());
        } else {
            server_.Get("/", [](const httplib::Request&, httplib::Response& res) {
                res.set_content("<!doctype html><title>raqeval</title><p>Annotator UI not installed. "
                                "Start the service with --ui-dir pointing at the built UI.</p>",
                                "text/html; charset=utf-8");
            });
        }
    }

    static nlohmann::json parse_body(const std::string& body) {
        try {
            return nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::ParseError, e.what());
        }
    }

    ServiceOptions opts_;
    AnnotationWorkflow workflow_;
    httplib::Server server_;
    std::thread thread_;
};

}  // namespace raqeval
