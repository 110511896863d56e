// raqeval command-line front end.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "raqeval/raqeval.hpp"

using namespace raqeval;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << text;
}

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw Error(ErrorCode::ParseError, "unterminated quoted CSV field");
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Client settings from a JSON file: timeout_ms, max_retries, base_delay_ms,
/// max_delay_ms, max_concurrency, min_interval_ms.
ClientOptions client_options(const std::string& config_path) {
    ClientOptions o;
    if (config_path.empty()) return o;
    const auto j = nlohmann::json::parse(read_file(config_path));
    o.timeout = std::chrono::milliseconds(j.value("timeout_ms", o.timeout.count()));
    o.retry.max_retries = j.value("max_retries", o.retry.max_retries);
    o.retry.base_delay = std::chrono::milliseconds(j.value("base_delay_ms", o.retry.base_delay.count()));
    o.retry.max_delay = std::chrono::milliseconds(j.value("max_delay_ms", o.retry.max_delay.count()));
    o.max_concurrency = j.value("max_concurrency", o.max_concurrency);
    o.min_interval = std::chrono::milliseconds(j.value("min_interval_ms", o.min_interval.count()));
    return o;
}

Endpoint endpoint_from_env(const std::string& model_override) {
    auto e = Endpoint::from_env();
    if (!model_override.empty()) e.model = model_override;
    if (e.base_url.empty()) throw Error(ErrorCode::InvalidArgument, "RAQEVAL_API_BASE is not set");
    if (e.model.empty()) throw Error(ErrorCode::InvalidArgument, "no model name (RAQEVAL_JUDGE_MODEL or --model)");
    return e;
}

std::map<std::string, const EvalRecord*> index_records(const std::vector<EvalRecord>& records) {
    std::map<std::string, const EvalRecord*> out;
    for (const auto& r : records) out[r.id] = &r;
    return out;
}

std::optional<ResponseCondition> condition_arg(const std::string& s) {
    if (s.empty()) return std::nullopt;
    auto c = parse_condition(s);
    if (!c) throw Error(ErrorCode::InvalidArgument, "condition must be retrieved, gold_only or irrelevant_only");
    return c;
}

// Known metrics first in their usual order, then anything imported.
std::vector<std::string> metric_order(const std::vector<AggregateCell>& cells) {
    std::set<std::string> present;
    for (const auto& c : cells) present.insert(c.metric);
    std::vector<std::string> order;
    for (const auto* names : {&correctness_metric_names(), &faithfulness_metric_names()}) {
        for (const auto& m : *names) {
            if (present.erase(m)) order.push_back(m);
        }
    }
    order.insert(order.end(), present.begin(), present.end());
    return order;
}

void warn_idk(const EvalRecord& r, bool idk) {
    if (idk && r.task_kind == TaskKind::Conversational)
        spdlog::warn("record {}: conversational prompts have no I-don't-know variant", r.id);
}

// ---------------------------------------------------------------------------

struct ScoreArgs {
    std::string records, responses, out, metrics = "all", format = "md";
    std::size_t k = 0;
    bool no_titles = false;
};

int cmd_score(const ScoreArgs& a) {
    const auto records = load_records(a.records);
    const auto responses = load_responses(a.responses);
    check_responses_resolve(records, responses);
    ScoringOptions opts;
    opts.correctness = a.metrics == "all" || a.metrics == "correctness";
    opts.faithfulness = a.metrics == "all" || a.metrics == "faithfulness";
    opts.knowledge.include_titles = !a.no_titles;
    if (a.k) opts.budget = PassageBudget(a.k);
    const auto rows = score_all(records, responses, opts);
    if (!a.out.empty()) {
        save_scores(a.out, rows);
        spdlog::info("appended {} score rows to {}", rows.size(), a.out);
    }
    const auto cells = aggregate_table(rows, dataset_index(records));
    std::cout << (a.format == "csv" ? aggregate_csv(cells) : aggregate_markdown(cells, metric_order(cells)));
    return 0;
}

struct CorrelateArgs {
    std::string scores, human, records, format = "md", out;
    std::vector<std::string> metrics;
    bool per_dataset = false;
};

int cmd_correlate(const CorrelateArgs& a) {
    const auto scores = load_scores(a.scores);
    const auto humans = load_human_scores(a.human);
    std::vector<std::string> metrics = a.metrics;
    if (metrics.empty()) {
        std::set<std::string> seen;
        for (const auto& s : scores) {
            if (seen.insert(s.metric).second) metrics.push_back(s.metric);
        }
    }

    std::map<std::string, std::vector<ScoreRow>> groups;
    if (a.per_dataset) {
        if (a.records.empty()) throw Error(ErrorCode::InvalidArgument, "--per-dataset needs --records");
        const auto ds = dataset_index(load_records(a.records));
        for (const auto& s : scores) {
            auto it = ds.find(s.record_id);
            groups[it == ds.end() ? std::string("(unknown)") : it->second].push_back(s);
        }
    } else {
        groups["all"] = scores;
    }

    std::string text;
    for (const auto& [name, rows] : groups) {
        std::vector<CorrelationEntry> entries;
        for (const auto& m : metrics) {
            CorrelationEntry e{m, std::nullopt, {}};
            try {
                e.result = correlate_with_humans(rows, humans, m);
            } catch (const Error& err) {
                e.error = std::string(to_string(err.code()));
            }
            entries.push_back(e);
        }
        if (a.per_dataset) text += (a.format == "csv" ? "# " : "### ") + name + "\n";
        text += a.format == "csv" ? correlation_csv(entries) : correlation_markdown(entries);
        if (a.per_dataset) text += "\n";
    }
    write_output(a.out, text);
    return 0;
}

struct AbstentionArgs {
    std::string records, responses, lexicon, make_variants;
};

int cmd_abstention(const AbstentionArgs& a) {
    const auto records = load_records(a.records);
    if (!a.make_variants.empty()) {
        std::vector<EvalRecord> variants;
        std::size_t fallbacks = 0;
        for (const auto& r : records) {
            if (r.passages.empty()) {
                spdlog::warn("record {} has no passages; skipped", r.id);
                continue;
            }
            variants.push_back(build_irrelevant_variant(r));
            fallbacks += variants.back().metadata.value(kIrrelevantFallbackKey, false);
        }
        save_records(a.make_variants, variants);
        spdlog::info("wrote {} irrelevant-passage records to {} ({} used the last passage)", variants.size(),
                     a.make_variants, fallbacks);
        if (a.responses.empty()) return 0;
    }
    if (a.responses.empty()) throw Error(ErrorCode::InvalidArgument, "--responses is required");
    const auto lexicon = a.lexicon.empty() ? RefusalLexicon() : RefusalLexicon::from_file(a.lexicon);
    const auto responses = load_responses(a.responses);
    check_responses_resolve(records, responses);

    std::map<std::string, std::vector<AbstentionLabel>> by_model;
    for (const auto& r : responses) {
        if (r.condition == ResponseCondition::Retrieved) continue;
        const auto cond = r.condition == ResponseCondition::GoldOnly ? KnowledgeCondition::Gold : KnowledgeCondition::Irrelevant;
        by_model[r.model_name].push_back({cond, detect_refusal(r.text, lexicon)});
    }
    std::cout << "| Model | Incorrect Psg. (refusal %) | Gold Psg. (refusal %) | n irrelevant | n gold |\n"
                 "|---|---:|---:|---:|---:|\n";
    for (const auto& [model, labels] : by_model) {
        try {
            const auto rep = abstention_rates(labels);
            std::cout << "| " << model << " | " << format_fixed(rep.refusal_rate_irrelevant, 2) << " | "
                      << format_fixed(rep.refusal_rate_gold, 2) << " | " << rep.n_irrelevant << " | " << rep.n_gold << " |\n";
        } catch (const Error& e) {
            spdlog::warn("{}: {}", model, e.what());
        }
    }
    return 0;
}

struct ReportArgs {
    std::string scores, records, format = "md", invalid = "zero", out;
};

int cmd_report(const ReportArgs& a) {
    const auto scores = load_scores(a.scores);
    std::map<std::string, std::string> ds;
    if (!a.records.empty()) ds = dataset_index(load_records(a.records));
    const auto policy = a.invalid == "skip" ? InvalidPolicy::Skip : InvalidPolicy::Zero;
    const auto cells = aggregate_table(scores, ds, policy);
    std::size_t invalid = 0;
    for (const auto& c : cells) invalid += c.n_invalid;
    if (invalid) spdlog::info("{} null scores ({})", invalid, policy == InvalidPolicy::Skip ? "skipped" : "scored 0");
    write_output(a.out, a.format == "csv" ? aggregate_csv(cells) : aggregate_markdown(cells, metric_order(cells)));
    return 0;
}

struct PromptArgs {
    std::string records, responses, id, judge, condition;
    bool idk = false;
    std::size_t k = 0;
};

int cmd_prompt(const PromptArgs& a) {
    const auto records = load_records(a.records);
    std::optional<PassageBudget> budget;
    if (a.k) budget = PassageBudget(a.k);
    bool first = true;
    auto separator = [&](const std::string& label) {
        if (!first) std::cout << "\n";
        first = false;
        std::cout << "===== " << label << " =====\n";
    };
    if (a.judge.empty()) {
        for (const auto& r : records) {
            if (!a.id.empty() && r.id != a.id) continue;
            warn_idk(r, a.idk);
            separator(r.id);
            std::cout << render_for_record(r, a.idk, budget) << "\n";
        }
        return 0;
    }
    if (a.responses.empty()) throw Error(ErrorCode::InvalidArgument, "--judge needs --responses");
    const auto kind = a.judge == "faithfulness" ? JudgeKind::Faithfulness : JudgeKind::Correctness;
    const auto by_id = index_records(records);
    for (const auto& resp : load_responses(a.responses)) {
        if (!a.id.empty() && resp.record_id != a.id) continue;
        auto it = by_id.find(resp.record_id);
        if (it == by_id.end()) throw Error(ErrorCode::SchemaError, "unknown record " + resp.record_id);
        const auto& r = *it->second;
        JudgeInput in{judge_question(r), r.references, resp.text, render_evidence(knowledge_for(r, resp.condition, budget))};
        const auto p = judge_prompt(kind, in);
        separator(resp.record_id + " / " + resp.model_name);
        std::cout << "[system]\n" << p.system << "\n[user]\n" << p.user << "\n";
    }
    return 0;
}

struct GenerateArgs {
    std::string records, out, model, client_config, condition = "retrieved";
    bool idk = false;
    std::size_t k = 0;
    GenerationConfig gen;
};

int cmd_generate(const GenerateArgs& a) {
    a.gen.validate();
    const auto records = load_records(a.records);
    auto client = ChatClient::over_http(endpoint_from_env(a.model), client_options(a.client_config));
    const auto cond = condition_arg(a.condition).value_or(ResponseCondition::Retrieved);
    std::optional<PassageBudget> budget;
    if (a.k) budget = PassageBudget(a.k);
    std::size_t done = 0;
    for (const auto& r : records) {
        EvalRecord view = r;
        view.passages = knowledge_for(r, cond, budget);
        if (view.passages.empty()) {
            spdlog::warn("record {} has no passages for condition {}; skipped", r.id, to_string(cond));
            continue;
        }
        warn_idk(r, a.idk);
        const auto prompt = render_for_record(view, a.idk, PassageBudget(view.passages.size()));
        ModelResponse resp{r.id, client.endpoint().model, generate(client, prompt, a.gen), cond, a.gen};
        save_responses(a.out, {resp});
        ++done;
    }
    spdlog::info("generated {} responses ({} requests)", done, client.calls());
    return 0;
}

struct JudgeArgs {
    std::string records, responses, out, kind = "correctness", metric, model, client_config, k_override;
    std::size_t parallel = 4, k = 0;
};

int cmd_judge(const JudgeArgs& a) {
    const auto records = load_records(a.records);
    const auto responses = load_responses(a.responses);
    check_responses_resolve(records, responses);
    const auto kind = a.kind == "faithfulness" ? JudgeKind::Faithfulness : JudgeKind::Correctness;
    const auto metric = a.metric.empty() ? (kind == JudgeKind::Correctness ? "llm_eval" : "llm_critic") : a.metric;
    std::optional<PassageBudget> budget;
    if (a.k) budget = PassageBudget(a.k);
    const auto by_id = index_records(records);
    std::vector<JudgeInput> inputs;
    for (const auto& resp : responses) {
        const auto& r = *by_id.at(resp.record_id);
        inputs.push_back({judge_question(r), r.references, resp.text,
                          kind == JudgeKind::Faithfulness ? render_evidence(knowledge_for(r, resp.condition, budget)) : ""});
    }
    auto client = ChatClient::over_http(endpoint_from_env(a.model), client_options(a.client_config));
    const auto verdicts = judge_batch(client, kind, inputs, a.parallel);
    std::vector<ScoreRow> rows;
    std::size_t invalid = 0;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        std::optional<double> value;
        if (verdicts[i].score) value = 100.0 * *verdicts[i].score;
        else ++invalid;
        rows.push_back({responses[i].record_id, responses[i].model_name, metric, value, Provenance::Computed, ""});
    }
    save_scores(a.out, rows);
    spdlog::info("{} verdicts written to {}; {} invalid, {} requests", rows.size(), a.out, invalid, client.calls());
    return 0;
}

struct ImportArgs {
    std::string input, out, source;
    double scale = 1.0;
};

int cmd_import(const ImportArgs& a) {
    if (a.source.empty()) throw Error(ErrorCode::InvalidArgument, "--source is required for imported scores");
    std::vector<ScoreRow> rows;
    auto add = [&](const std::string& rec, const std::string& model, const std::string& metric, std::optional<double> v,
                   std::size_t line) {
        if (v) {
            *v *= a.scale;
            if (*v < 0 || *v > 100) throw line_error(ErrorCode::SchemaError, line, metric, "value outside [0, 100] after scaling");
        }
        rows.push_back({rec, model, metric, v, Provenance::Imported, a.source});
    };
    const bool csv = a.input.size() >= 4 && a.input.compare(a.input.size() - 4, 4, ".csv") == 0;
    if (csv) {
        const auto table = parse_csv(read_file(a.input));
        if (table.empty()) throw Error(ErrorCode::SchemaError, "empty CSV");
        const auto& header = table[0];
        auto col = [&](const std::string& name) {
            auto it = std::find(header.begin(), header.end(), name);
            if (it == header.end()) throw Error(ErrorCode::SchemaError, "CSV needs a '" + name + "' column");
            return static_cast<std::size_t>(it - header.begin());
        };
        const auto rc = col("record_id"), mc = col("model_name");
        for (std::size_t i = 1; i < table.size(); ++i) {
            const auto& row = table[i];
            if (row.size() != header.size()) throw line_error(ErrorCode::SchemaError, i + 1, "", "wrong number of fields");
            for (std::size_t c = 0; c < header.size(); ++c) {
                if (c == rc || c == mc) continue;
                std::optional<double> v;
                if (!row[c].empty()) {
                    try {
                        std::size_t used = 0;
                        v = std::stod(row[c], &used);
                        if (used != row[c].size()) throw std::invalid_argument(row[c]);
                    } catch (const std::exception&) {
                        throw line_error(ErrorCode::SchemaError, i + 1, header[c], "not a number: " + row[c]);
                    }
                }
                add(row[rc], row[mc], header[c], v, i + 1);
            }
        }
    } else {
        read_jsonl(a.input, [&](const nlohmann::json& j, std::size_t line) {
            detail::FieldReader f{j, line};
            const auto rec = f.nonempty_string("record_id");
            const auto model = f.nonempty_string("model_name");
            for (const auto& [key, value] : j.items()) {
                if (key == "record_id" || key == "model_name") continue;
                if (!value.is_number() && !value.is_null()) throw line_error(ErrorCode::SchemaError, line, key, "expected a number");
                add(rec, model, key, value.is_null() ? std::nullopt : std::optional<double>(value.get<double>()), line);
            }
        });
    }
    save_scores(a.out, rows);
    spdlog::info("imported {} score rows from {}", rows.size(), a.input);
    return 0;
}

struct FailuresArgs {
    std::string input, format = "md";
};

/// Input lines are "subcategory" or "subcategory,count".
int cmd_failures(const FailuresArgs& a) {
    std::ifstream in(a.input);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + a.input);
    std::map<FailureSubcategory, std::size_t> counts;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        std::string name = line;
        std::size_t n = 1;
        if (const auto comma = line.rfind(','); comma != std::string::npos) {
            name = line.substr(0, comma);
            try {
                n = std::stoul(line.substr(comma + 1));
            } catch (const std::exception&) {
                throw line_error(ErrorCode::ParseError, line_no, "count", "bad count");
            }
        }
        const auto sub = parse_failure_subcategory(name);
        if (!sub) throw line_error(ErrorCode::SchemaError, line_no, "subcategory", "unknown failure subcategory '" + name + "'");
        counts[*sub] += n;
    }
    const auto rows = failure_table(counts);
    if (a.format == "csv") {
        std::cout << "category,subcategory,count,percent\n";
        for (const auto& r : rows)
            std::cout << category_name(r.subcategory) << ',' << subcategory_name(r.subcategory) << ',' << r.count << ','
                      << format_fixed(r.percent, 2) << '\n';
    } else {
        std::cout << failure_markdown(rows);
    }
    return 0;
}

struct ServeArgs {
    std::string data_dir = "raqeval-data", host = "127.0.0.1", ui_dir;
    int port = 8080;
};

int cmd_serve(const ServeArgs& a) {
    EvalService service(ServiceOptions{a.data_dir, a.ui_dir});
    spdlog::info("serving {} on http://{}:{}", a.data_dir, a.host, a.port);
    if (!service.listen(a.host, a.port)) throw Error(ErrorCode::IoError, "cannot bind " + a.host + ":" + std::to_string(a.port));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"raqeval: evaluation toolkit for retrieval-augmented QA"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    ScoreArgs score;
    auto* sc = app.add_subcommand("score", "Compute lexical correctness and knowledge-overlap metrics");
    sc->add_option("--records", score.records, "records.jsonl")->required()->check(CLI::ExistingFile);
    sc->add_option("--responses", score.responses, "responses.jsonl")->required()->check(CLI::ExistingFile);
    sc->add_option("--out", score.out, "Append score rows to this JSONL file");
    sc->add_option("--metrics", score.metrics, "all, correctness or faithfulness")
        ->check(CLI::IsMember({"all", "correctness", "faithfulness"}));
    sc->add_option("--k", score.k, "Passages counted as knowledge (default per task: 8/8/4)");
    sc->add_flag("--no-titles", score.no_titles, "Leave passage titles out of the knowledge bag");
    sc->add_option("--format", score.format, "md or csv")->check(CLI::IsMember({"md", "csv"}));

    CorrelateArgs corr;
    auto* cc = app.add_subcommand("correlate", "Spearman and Kendall correlation of metrics with human scores");
    cc->add_option("--scores", corr.scores, "scores.jsonl")->required()->check(CLI::ExistingFile);
    cc->add_option("--human", corr.human, "human.jsonl (record_id, model_name, value)")->required()->check(CLI::ExistingFile);
    cc->add_option("--records", corr.records, "records.jsonl, needed for --per-dataset");
    cc->add_option("--metric", corr.metrics, "Metrics to correlate (default: all in the scores file)");
    cc->add_flag("--per-dataset", corr.per_dataset, "One table per dataset instead of pooling");
    cc->add_option("--format", corr.format, "md or csv")->check(CLI::IsMember({"md", "csv"}));
    cc->add_option("--out", corr.out, "Output file (default stdout)");

    AbstentionArgs abst;
    auto* ac = app.add_subcommand("abstention", "Refusal rates given irrelevant vs gold passages");
    ac->add_option("--records", abst.records, "records.jsonl")->required()->check(CLI::ExistingFile);
    ac->add_option("--responses", abst.responses, "responses.jsonl with gold_only / irrelevant_only conditions");
    ac->add_option("--lexicon", abst.lexicon, "Refusal phrases, one per line")->check(CLI::ExistingFile);
    ac->add_option("--make-variants", abst.make_variants, "Write irrelevant-passage variants of the records here");

    ReportArgs rep;
    auto* rc = app.add_subcommand("report", "Aggregate score table per dataset and model");
    rc->add_option("--scores", rep.scores, "scores.jsonl")->required()->check(CLI::ExistingFile);
    rc->add_option("--records", rep.records, "records.jsonl (for dataset names)");
    rc->add_option("--format", rep.format, "md or csv")->check(CLI::IsMember({"md", "csv"}));
    rc->add_option("--invalid", rep.invalid, "Invalid judge verdicts: zero or skip")->check(CLI::IsMember({"zero", "skip"}));
    rc->add_option("--out", rep.out, "Output file (default stdout)");

    PromptArgs pr;
    auto* pc = app.add_subcommand("prompt", "Print rendered generation or judge prompts");
    pc->add_option("--records", pr.records, "records.jsonl")->required()->check(CLI::ExistingFile);
    pc->add_option("--responses", pr.responses, "responses.jsonl (judge prompts)");
    pc->add_option("--id", pr.id, "Only this record");
    pc->add_flag("--idk", pr.idk, "Use the I-don't-know instruction");
    pc->add_option("--k", pr.k, "Passage budget override");
    pc->add_option("--judge", pr.judge, "correctness or faithfulness")->check(CLI::IsMember({"correctness", "faithfulness"}));

    GenerateArgs gen;
    auto* gc = app.add_subcommand("generate", "Generate responses through a chat-completion endpoint");
    gc->add_option("--records", gen.records, "records.jsonl")->required()->check(CLI::ExistingFile);
    gc->add_option("--out", gen.out, "Append responses to this JSONL file")->required();
    gc->add_option("--model", gen.model, "Model name (default RAQEVAL_JUDGE_MODEL)");
    gc->add_option("--condition", gen.condition, "retrieved, gold_only or irrelevant_only");
    gc->add_flag("--idk", gen.idk, "Use the I-don't-know instruction");
    gc->add_option("--k", gen.k, "Passage budget override");
    gc->add_option("--top-p", gen.gen.top_p, "Nucleus sampling");
    gc->add_option("--temperature", gen.gen.temperature, "Sampling temperature");
    gc->add_option("--seed", gen.gen.seed, "Sampling seed");
    gc->add_option("--min-new-tokens", gen.gen.min_new_tokens);
    gc->add_option("--max-new-tokens", gen.gen.max_new_tokens);
    gc->add_option("--client-config", gen.client_config, "JSON with timeout and retry settings")->check(CLI::ExistingFile);

    JudgeArgs jd;
    auto* jc = app.add_subcommand("judge", "Score responses with an LLM judge (yes/no)");
    jc->add_option("--records", jd.records, "records.jsonl")->required()->check(CLI::ExistingFile);
    jc->add_option("--responses", jd.responses, "responses.jsonl")->required()->check(CLI::ExistingFile);
    jc->add_option("--out", jd.out, "Append score rows here")->required();
    jc->add_option("--kind", jd.kind, "correctness or faithfulness")->check(CLI::IsMember({"correctness", "faithfulness"}));
    jc->add_option("--metric", jd.metric, "Metric name for the rows (default llm_eval / llm_critic)");
    jc->add_option("--model", jd.model, "Judge model (default RAQEVAL_JUDGE_MODEL)");
    jc->add_option("--parallel", jd.parallel, "Concurrent requests");
    jc->add_option("--k", jd.k, "Passage budget for the evidence");
    jc->add_option("--client-config", jd.client_config, "JSON with timeout and retry settings")->check(CLI::ExistingFile);

    ImportArgs im;
    auto* ic = app.add_subcommand("import", "Import precomputed metric columns (BERTScore, BEM, ...)");
    ic->add_option("--input", im.input, ".csv or .jsonl with record_id, model_name and one column per metric")
        ->required()
        ->check(CLI::ExistingFile);
    ic->add_option("--out", im.out, "Append score rows here")->required();
    ic->add_option("--source", im.source, "Tool and version that produced the values")->required();
    ic->add_option("--scale", im.scale, "Multiply values by this (100 for fractions)");

    FailuresArgs fa;
    auto* fc = app.add_subcommand("failures", "Failure-category table from labeled cases");
    fc->add_option("--labels", fa.input, "One subcategory per line, or 'subcategory,count'")->required()->check(CLI::ExistingFile);
    fc->add_option("--format", fa.format, "md or csv")->check(CLI::IsMember({"md", "csv"}));

    ServeArgs sv;
    auto* svc = app.add_subcommand("serve", "Run the annotation service");
    svc->add_option("--data-dir", sv.data_dir, "Run storage directory");
    svc->add_option("--host", sv.host);
    svc->add_option("--port", sv.port);
    svc->add_option("--ui-dir", sv.ui_dir, "Built annotator UI to serve at /");

    CLI11_PARSE(app, argc, argv);

    auto logger = spdlog::stderr_color_mt("raqeval");
    spdlog::set_default_logger(logger);
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        if (*sc) return cmd_score(score);
        if (*cc) return cmd_correlate(corr);
        if (*ac) return cmd_abstention(abst);
        if (*rc) return cmd_report(rep);
        if (*pc) return cmd_prompt(pr);
        if (*gc) return cmd_generate(gen);
        if (*jc) return cmd_judge(jd);
        if (*ic) return cmd_import(im);
        if (*fc) return cmd_failures(fa);
        if (*svc) return cmd_serve(sv);
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    return 0;
}
