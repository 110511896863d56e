#pragma once

// Rank correlation against human judgments, annotator agreement, majority
// vote, failure-category statistics and aggregate score tables.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "raqeval/error.hpp"
#include "raqeval/record.hpp"
#include "raqeval/textnorm.hpp"

namespace raqeval {

namespace detail {

inline void check_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw Error(ErrorCode::LengthMismatch,
                    "vectors have lengths " + std::to_string(x.size()) + " and " + std::to_string(y.size()));
    if (x.size() < 2) throw Error(ErrorCode::LengthMismatch, "need at least two paired observations");
    auto constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
    };
    if (constant(x) || constant(y)) throw Error(ErrorCode::ConstantInput, "correlation undefined for a constant vector");
}

}  // namespace detail

/// 1-based ranks; tied values share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double mean = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Pearson correlation of average ranks.
inline double spearman(std::span<const double> x, std::span<const double> y) {
    detail::check_pair(x, y);
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

/// Tau-b via Knight's O(n log n) algorithm: sort by (x, y), then count the
/// exchanges a merge sort on y needs.
inline double kendall_tau(std::span<const double> x, std::span<const double> y) {
    detail::check_pair(x, y);
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
    });

    auto tied_pairs = [](std::size_t run) { return static_cast<std::int64_t>(run * (run - 1) / 2); };
    std::int64_t ties_x = 0, ties_xy = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
        ties_x += tied_pairs(j - i + 1);
        for (std::size_t a = i; a <= j;) {
            std::size_t b = a;
            while (b + 1 <= j && y[idx[b + 1]] == y[idx[a]]) ++b;
            ties_xy += tied_pairs(b - a + 1);
            a = b + 1;
        }
        i = j + 1;
    }

    std::vector<double> ys(n), buf(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
    std::int64_t swaps = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo < n; lo += 2 * width) {
            const std::size_t mid = std::min(lo + width, n), hi = std::min(lo + 2 * width, n);
            std::size_t a = lo, b = mid, k = lo;
            while (a < mid && b < hi) {
                if (ys[b] < ys[a]) {
                    swaps += static_cast<std::int64_t>(mid - a);
                    buf[k++] = ys[b++];
                } else {
                    buf[k++] = ys[a++];
                }
            }
            while (a < mid) buf[k++] = ys[a++];
            while (b < hi) buf[k++] = ys[b++];
        }
        std::swap(ys, buf);
    }

    std::int64_t ties_y = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && ys[j + 1] == ys[i]) ++j;
        ties_y += tied_pairs(j - i + 1);
        i = j + 1;
    }

    const std::int64_t total = tied_pairs(n);
    const double numerator = static_cast<double>(total - ties_x - ties_y + ties_xy - 2 * swaps);
    // one sqrt of the product keeps perfect (dis)concordance at exactly +-1
    const double denominator = std::sqrt(static_cast<double>(total - ties_x) * static_cast<double>(total - ties_y));
    return std::clamp(numerator / denominator, -1.0, 1.0);
}

struct CorrelationResult {
    double spearman_rho = 0;
    double kendall_tau = 0;
    std::size_t n = 0;
};

inline CorrelationResult correlate(std::span<const double> x, std::span<const double> y) {
    return {spearman(x, y), kendall_tau(x, y), x.size()};
}

struct AgreementStats {
    std::size_t n_tasks = 0;
    std::size_t n_agree = 0;
    double percent_agreement = 0;
    std::size_t n_conflicts_resolved = 0;
};

/// Exact-match agreement of the first two labels of every task.
template <typename Label>
AgreementStats agreement(const std::map<std::string, std::vector<Label>>& labels) {
    AgreementStats s;
    for (const auto& [task, ls] : labels) {
        if (ls.size() < 2) throw Error(ErrorCode::MissingLabel, "task '" + task + "' has fewer than two labels");
        ++s.n_tasks;
        if (ls[0] == ls[1]) ++s.n_agree;
    }
    if (s.n_tasks > 0) s.percent_agreement = 100.0 * static_cast<double>(s.n_agree) / static_cast<double>(s.n_tasks);
    return s;
}

/// Most frequent label of an odd-sized ballot. Throws NoMajority when the top
/// count is shared (possible with three or more distinct labels).
template <typename Label>
Label majority_vote(std::span<const Label> labels) {
    if (labels.empty() || labels.size() % 2 == 0)
        throw Error(ErrorCode::EvenBallot, "majority vote needs an odd number of labels, got " + std::to_string(labels.size()));
    std::vector<std::pair<Label, std::size_t>> counts;
    for (const auto& l : labels) {
        auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& c) { return c.first == l; });
        if (it == counts.end()) counts.emplace_back(l, 1);
        else ++it->second;
    }
    std::stable_sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (counts.size() > 1 && counts[0].second == counts[1].second)
        throw Error(ErrorCode::NoMajority, "no label is strictly most frequent");
    return counts.front().first;
}

template <typename Label>
Label majority_vote(const std::vector<Label>& labels) {
    return majority_vote(std::span<const Label>(labels));
}

// ---------------------------------------------------------------------------
// Failure taxonomy for responses that lexical metrics reject but humans accept.

enum class FailureSubcategory {
    MultinominalEntities,
    SynonymousAnswers,
    MoreElaborateAnswers,
    SymbolicEquivalence,
    IntrinsicAmbiguity,
    TemporalGranularity,
    SpatialGranularity,
    ListOfNamedEntities,
    OpenEndedQuestions,
    EnumerationOfReferenceAnswers,
    SatisfactorySubset,
    IncorrectGoldAnswers,
};

inline constexpr FailureSubcategory kFailureTaxonomy[] = {
    FailureSubcategory::MultinominalEntities, FailureSubcategory::SynonymousAnswers,
    FailureSubcategory::MoreElaborateAnswers, FailureSubcategory::SymbolicEquivalence,
    FailureSubcategory::IntrinsicAmbiguity,   FailureSubcategory::TemporalGranularity,
    FailureSubcategory::SpatialGranularity,   FailureSubcategory::ListOfNamedEntities,
    FailureSubcategory::OpenEndedQuestions,   FailureSubcategory::EnumerationOfReferenceAnswers,
    FailureSubcategory::SatisfactorySubset,   FailureSubcategory::IncorrectGoldAnswers,
};

constexpr std::string_view category_name(FailureSubcategory s) {
    switch (s) {
        case FailureSubcategory::MultinominalEntities:
        case FailureSubcategory::SynonymousAnswers:
        case FailureSubcategory::MoreElaborateAnswers: return "Semantic Equivalence";
        case FailureSubcategory::SymbolicEquivalence: return "Symbolic Equivalence";
        case FailureSubcategory::IntrinsicAmbiguity: return "Intrinsic Ambiguity";
        case FailureSubcategory::TemporalGranularity:
        case FailureSubcategory::SpatialGranularity: return "Granularity";
        case FailureSubcategory::ListOfNamedEntities:
        case FailureSubcategory::OpenEndedQuestions: return "Incomplete Reference Answers";
        case FailureSubcategory::EnumerationOfReferenceAnswers: return "Enumeration of Reference Answers";
        case FailureSubcategory::SatisfactorySubset: return "Satisfactory Subset";
        case FailureSubcategory::IncorrectGoldAnswers: return "Incorrect Gold Answers";
    }
    return "";
}

constexpr std::string_view subcategory_name(FailureSubcategory s) {
    switch (s) {
        case FailureSubcategory::MultinominalEntities: return "Multinominal Entities";
        case FailureSubcategory::SynonymousAnswers: return "Synonymous Answers";
        case FailureSubcategory::MoreElaborateAnswers: return "More Elaborate Answers";
        case FailureSubcategory::SymbolicEquivalence: return "Symbolic Equivalence";
        case FailureSubcategory::IntrinsicAmbiguity: return "Intrinsic Ambiguity";
        case FailureSubcategory::TemporalGranularity: return "Temporal";
        case FailureSubcategory::SpatialGranularity: return "Spatial";
        case FailureSubcategory::ListOfNamedEntities: return "List of Named Entities";
        case FailureSubcategory::OpenEndedQuestions: return "Open-ended Questions";
        case FailureSubcategory::EnumerationOfReferenceAnswers: return "Enumeration of Reference Answers";
        case FailureSubcategory::SatisfactorySubset: return "Satisfactory Subset";
        case FailureSubcategory::IncorrectGoldAnswers: return "Incorrect Gold Answers";
    }
    return "";
}

/// Accepts the subcategory names above plus common spellings of them
/// ("Sufficient subset", "Ambiguous Questions", "Temporal granularity discrepancy", ...).
inline std::optional<FailureSubcategory> parse_failure_subcategory(std::string_view name) {
    const auto key = normalize(name, NormMode::Plain);
    static const std::vector<std::pair<std::string_view, FailureSubcategory>> aliases = {
        {"multinominal entities", FailureSubcategory::MultinominalEntities},
        {"multinomial entities", FailureSubcategory::MultinominalEntities},
        {"synonymous answers", FailureSubcategory::SynonymousAnswers},
        {"more elaborate answers", FailureSubcategory::MoreElaborateAnswers},
        {"symbolic equivalence", FailureSubcategory::SymbolicEquivalence},
        {"intrinsic ambiguity", FailureSubcategory::IntrinsicAmbiguity},
        {"intrinsic ambiguity in questions", FailureSubcategory::IntrinsicAmbiguity},
        {"ambiguous questions", FailureSubcategory::IntrinsicAmbiguity},
        {"temporal", FailureSubcategory::TemporalGranularity},
        {"temporal granularity", FailureSubcategory::TemporalGranularity},
        {"temporal granularity discrepancy", FailureSubcategory::TemporalGranularity},
        {"spatial", FailureSubcategory::SpatialGranularity},
        {"spatial granularity", FailureSubcategory::SpatialGranularity},
        {"spatial granularity discrepancy", FailureSubcategory::SpatialGranularity},
        {"list of named entities", FailureSubcategory::ListOfNamedEntities},
        {"openended questions", FailureSubcategory::OpenEndedQuestions},
        {"enumeration of reference answers", FailureSubcategory::EnumerationOfReferenceAnswers},
        {"satisfactory subset", FailureSubcategory::SatisfactorySubset},
        {"satisfactory subset responses", FailureSubcategory::SatisfactorySubset},
        {"sufficient subset", FailureSubcategory::SatisfactorySubset},
        {"incorrect gold answers", FailureSubcategory::IncorrectGoldAnswers},
    };
    for (const auto& [alias, sub] : aliases) {
        if (key == alias) return sub;
    }
    return std::nullopt;
}

struct FailureRow {
    FailureSubcategory subcategory;
    std::size_t count = 0;
    /// Exact share; render with two decimals.
    double percent = 0;
};

/// Rows in taxonomy order, omitting subcategories with no cases.
inline std::vector<FailureRow> failure_table(const std::map<FailureSubcategory, std::size_t>& counts) {
    std::size_t total = 0;
    for (const auto& [_, c] : counts) total += c;
    if (total == 0) throw Error(ErrorCode::InvalidArgument, "failure table needs at least one labeled case");
    std::vector<FailureRow> rows;
    for (auto sub : kFailureTaxonomy) {
        auto it = counts.find(sub);
        if (it == counts.end() || it->second == 0) continue;
        rows.push_back({sub, it->second, 100.0 * static_cast<double>(it->second) / static_cast<double>(total)});
    }
    return rows;
}

inline std::vector<FailureRow> failure_table(std::span<const FailureSubcategory> labels) {
    std::map<FailureSubcategory, std::size_t> counts;
    for (auto l : labels) ++counts[l];
    return failure_table(counts);
}

inline std::string format_fixed(double value, int decimals) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(decimals);
    os << value;
    return os.str();
}

// ---------------------------------------------------------------------------
// Aggregate tables.

enum class InvalidPolicy {
    /// null (invalid judge verdict) counts as 0
    Zero,
    /// null rows are left out of the mean
    Skip,
};

struct AggregateCell {
    std::string dataset;
    std::string model;
    std::string metric;
    double mean = 0;
    std::size_t n = 0;
    std::size_t n_invalid = 0;
};

/// Mean per (dataset, model, metric), sorted by that key. Scores whose record
/// is not in `dataset_of` are grouped under an empty dataset name.
inline std::vector<AggregateCell> aggregate_table(std::span<const ScoreRow> scores,
                                                  const std::map<std::string, std::string>& dataset_of,
                                                  InvalidPolicy policy = InvalidPolicy::Zero) {
    struct Acc {
        double sum = 0;
        std::size_t n = 0, invalid = 0;
    };
    std::map<std::tuple<std::string, std::string, std::string>, Acc> groups;
    for (const auto& s : scores) {
        auto it = dataset_of.find(s.record_id);
        auto& acc = groups[{it == dataset_of.end() ? std::string() : it->second, s.model_name, s.metric}];
        if (!s.value) {
            ++acc.invalid;
            if (policy == InvalidPolicy::Skip) continue;
        }
        acc.sum += s.value.value_or(0.0);
        ++acc.n;
    }
    std::vector<AggregateCell> out;
    for (const auto& [key, acc] : groups) {
        const auto& [dataset, model, metric] = key;
        out.push_back({dataset, model, metric, acc.n ? acc.sum / static_cast<double>(acc.n) : 0.0, acc.n, acc.invalid});
    }
    return out;
}

/// Joins metric values with human scores on (record, model).
inline CorrelationResult correlate_with_humans(std::span<const ScoreRow> scores, std::span<const HumanScore> humans,
                                               std::string_view metric) {
    std::map<std::pair<std::string, std::string>, double> human;
    for (const auto& h : humans) human[{h.record_id, h.model_name}] = h.value;
    std::vector<double> xs, ys;
    for (const auto& s : scores) {
        if (s.metric != metric) continue;
        auto it = human.find({s.record_id, s.model_name});
        if (it == human.end()) continue;
        xs.push_back(s.value.value_or(0.0));
        ys.push_back(it->second);
    }
    if (xs.empty()) throw Error(ErrorCode::JoinEmpty, "no (record, model) pairs shared by metric '" + std::string(metric) + "' and human labels");
    return correlate(xs, ys);
}

// ---------------------------------------------------------------------------
// Report emitters.

namespace detail {

inline std::vector<std::string> metric_columns(std::span<const AggregateCell> cells) {
    std::vector<std::string> metrics;
    for (const auto& c : cells) {
        if (std::find(metrics.begin(), metrics.end(), c.metric) == metrics.end()) metrics.push_back(c.metric);
    }
    return metrics;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace detail

/// Wide layout: one row per (dataset, model), one column per metric.
inline std::string aggregate_markdown(std::span<const AggregateCell> cells, const std::vector<std::string>& metric_order = {}) {
    const auto metrics = metric_order.empty() ? detail::metric_columns(cells) : metric_order;
    std::map<std::pair<std::string, std::string>, std::map<std::string, double>> rows;
    for (const auto& c : cells) rows[{c.dataset, c.model}][c.metric] = c.mean;
    std::ostringstream os;
    os << "| Dataset | Model |";
    for (const auto& m : metrics) os << ' ' << m << " |";
    os << "\n|---|---|";
    for (std::size_t i = 0; i < metrics.size(); ++i) os << "---:|";
    os << '\n';
    for (const auto& [key, values] : rows) {
        os << "| " << key.first << " | " << key.second << " |";
        for (const auto& m : metrics) {
            auto it = values.find(m);
            os << ' ' << (it == values.end() ? std::string("-") : format_fixed(it->second, 1)) << " |";
        }
        os << '\n';
    }
    return os.str();
}

/// Long layout: dataset,model,metric,mean,n,n_invalid.
inline std::string aggregate_csv(std::span<const AggregateCell> cells) {
    std::ostringstream os;
    os << "dataset,model,metric,mean,n,n_invalid\n";
    for (const auto& c : cells) {
        os << detail::csv_field(c.dataset) << ',' << detail::csv_field(c.model) << ',' << detail::csv_field(c.metric)
           << ',' << format_fixed(c.mean, 1) << ',' << c.n << ',' << c.n_invalid << '\n';
    }
    return os.str();
}

struct CorrelationEntry {
    std::string metric;
    std::optional<CorrelationResult> result;
    std::string error;
};

inline std::string correlation_markdown(std::span<const CorrelationEntry> entries) {
    std::ostringstream os;
    os << "| Metric | Spearman rho | Kendall tau | n |\n|---|---:|---:|---:|\n";
    for (const auto& e : entries) {
        if (e.result) {
            os << "| " << e.metric << " | " << format_fixed(100 * e.result->spearman_rho, 2) << " | "
               << format_fixed(100 * e.result->kendall_tau, 2) << " | " << e.result->n << " |\n";
        } else {
            os << "| " << e.metric << " | - | - | " << e.error << " |\n";
        }
    }
    return os.str();
}

inline std::string correlation_csv(std::span<const CorrelationEntry> entries) {
    std::ostringstream os;
    os << "metric,spearman_rho,kendall_tau,n\n";
    for (const auto& e : entries) {
        os << detail::csv_field(e.metric) << ',';
        if (e.result) {
            os << format_fixed(e.result->spearman_rho, 6) << ',' << format_fixed(e.result->kendall_tau, 6) << ','
               << e.result->n << '\n';
        } else {
            os << ",,\n";
        }
    }
    return os.str();
}

inline std::string failure_markdown(std::span<const FailureRow> rows) {
    std::ostringstream os;
    os << "| Category | Subcategory | Count | Percentage |\n|---|---|---:|---:|\n";
    for (const auto& r : rows) {
        os << "| " << category_name(r.subcategory) << " | " << subcategory_name(r.subcategory) << " | " << r.count
           << " | " << format_fixed(r.percent, 2) << " |\n";
    }
    return os.str();
}

}  // namespace raqeval
