#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sphx/analysis.hpp"
#include "sphx/embedding.hpp"
#include "sphx/error.hpp"

namespace sphx {

struct IndexConfig {
    std::uint32_t m = 0;
    double r = 0.0;
    double h_index = 0.0;
    double h_query = 0.0;
    TransformKind kind = TransformKind::Gaussian;
    std::uint32_t d = 0;
    std::uint64_t seed = 0;

    /// Documents are encoded at h = sqrt(2 r ln m), queries at
    /// sqrt(2 q r ln m) with q >= 1.
    static IndexConfig from_params(std::uint32_t m, double r, double q, TransformKind kind, std::uint32_t d,
                                   std::uint64_t seed)
    {
        if (!(q >= 1.0)) {
            fail(Errc::InvalidParams, "query threshold multiplier q must be >= 1");
        }
        IndexConfig c;
        c.m = m;
        c.r = r;
        c.h_index = threshold_h(m, r);
        c.h_query = threshold_h(m, q * r);
        c.kind = kind;
        c.d = d;
        c.seed = seed;
        return c;
    }

    void validate() const
    {
        if (m == 0 || d == 0) {
            fail(Errc::InvalidDimensions, "index config needs m >= 1 and d >= 1");
        }
        if (!(h_index >= 0.0) || !(h_query >= h_index)) {
            fail(Errc::InvalidParams, "index config needs 0 <= h_index <= h_query");
        }
    }

    [[nodiscard]] Transform make_transform() const { return Transform::make(kind, d, m, seed); }

    friend bool operator==(const IndexConfig&, const IndexConfig&) = default;
};

inline nlohmann::json to_json(const IndexConfig& c)
{
    return {{"m", c.m}, {"r", c.r}, {"h_index", c.h_index}, {"h_query", c.h_query},
            {"kind", std::string(to_string(c.kind))}, {"d", c.d}, {"seed", c.seed}};
}

/// Posting lists over sparse codes. Internal document numbers follow the
/// lexicographic order of external ids, so the index does not depend on the
/// order codes were supplied in.
class InvertedIndex {
public:
    InvertedIndex() = default;

    static InvertedIndex build(std::vector<std::pair<std::string, SparseCode>> codes, const IndexConfig& config)
    {
        config.validate();
        std::sort(codes.begin(), codes.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 1; i < codes.size(); ++i) {
            if (codes[i].first == codes[i - 1].first) {
                fail(Errc::DuplicateDocId, "duplicate document id '" + codes[i].first + "'");
            }
        }
        InvertedIndex index;
        index.config_ = config;
        index.postings_.assign(config.m, {});
        index.ids_.reserve(codes.size());
        index.doc_k_.reserve(codes.size());
        for (std::size_t doc = 0; doc < codes.size(); ++doc) {
            const auto& [id, code] = codes[doc];
            if (code.m() != config.m) {
                fail(Errc::CodeLengthMismatch, "code for '" + id + "' has m=" + std::to_string(code.m()));
            }
            for (auto dim : code.support()) {
                index.postings_[dim].push_back(static_cast<std::uint32_t>(doc));
            }
            index.ids_.push_back(id);
            index.doc_k_.push_back(static_cast<std::uint32_t>(code.k()));
        }
        index.rebuild_lookup();
        return index;
    }

    /// Assembles an index from raw parts (used by the loader); checks every
    /// structural invariant.
    static InvertedIndex from_parts(IndexConfig config, std::vector<std::string> ids,
                                    std::vector<std::vector<std::uint32_t>> postings)
    {
        config.validate();
        if (postings.size() != config.m) {
            fail(Errc::CorruptStream, "posting list count differs from m");
        }
        InvertedIndex index;
        index.config_ = config;
        index.ids_ = std::move(ids);
        index.postings_ = std::move(postings);
        index.doc_k_.assign(index.ids_.size(), 0);
        for (const auto& list : index.postings_) {
            for (std::size_t i = 0; i < list.size(); ++i) {
                if (list[i] >= index.ids_.size() || (i > 0 && list[i] <= list[i - 1])) {
                    fail(Errc::CorruptStream, "posting list is not strictly ascending within [0, n)");
                }
                ++index.doc_k_[list[i]];
            }
        }
        for (std::size_t i = 1; i < index.ids_.size(); ++i) {
            if (index.ids_[i] <= index.ids_[i - 1]) {
                fail(Errc::CorruptStream, "document id table is not strictly ascending");
            }
        }
        index.rebuild_lookup();
        return index;
    }

    [[nodiscard]] const IndexConfig& config() const noexcept { return config_; }
    [[nodiscard]] std::size_t size() const noexcept { return ids_.size(); }
    [[nodiscard]] const std::string& doc_id(std::uint32_t doc) const { return ids_.at(doc); }
    [[nodiscard]] std::span<const std::string> doc_ids() const noexcept { return ids_; }
    [[nodiscard]] std::uint32_t doc_k(std::uint32_t doc) const { return doc_k_.at(doc); }
    [[nodiscard]] std::span<const std::uint32_t> postings(std::uint32_t dim) const { return postings_.at(dim); }

    [[nodiscard]] std::optional<std::uint32_t> find(std::string_view id) const
    {
        auto it = lookup_.find(std::string(id));
        if (it == lookup_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    [[nodiscard]] std::size_t total_postings() const noexcept
    {
        std::size_t total = 0;
        for (const auto& list : postings_) {
            total += list.size();
        }
        return total;
    }

    /// Forward view: every document's code, rebuilt from the postings.
    [[nodiscard]] std::vector<SparseCode> document_codes() const
    {
        std::vector<std::vector<std::uint32_t>> supports(ids_.size());
        for (std::uint32_t dim = 0; dim < postings_.size(); ++dim) {
            for (auto doc : postings_[dim]) {
                supports[doc].push_back(dim);
            }
        }
        std::vector<SparseCode> codes;
        codes.reserve(ids_.size());
        for (auto& s : supports) {
            codes.emplace_back(config_.m, std::move(s));
        }
        return codes;
    }

    friend bool operator==(const InvertedIndex& a, const InvertedIndex& b)
    {
        return a.config_ == b.config_ && a.ids_ == b.ids_ && a.postings_ == b.postings_ && a.doc_k_ == b.doc_k_;
    }

private:
    void rebuild_lookup()
    {
        lookup_.clear();
        lookup_.reserve(ids_.size());
        for (std::uint32_t i = 0; i < ids_.size(); ++i) {
            lookup_.emplace(ids_[i], i);
        }
    }

    IndexConfig config_;
    std::vector<std::string> ids_;
    std::vector<std::vector<std::uint32_t>> postings_;
    std::vector<std::uint32_t> doc_k_;
    std::unordered_map<std::string, std::uint32_t> lookup_;
};

inline InvertedIndex build_index(std::vector<std::pair<std::string, SparseCode>> codes, const IndexConfig& config)
{
    return InvertedIndex::build(std::move(codes), config);
}

// ---------------------------------------------------------------------------
// Search
// ---------------------------------------------------------------------------

enum class CutoffMode : std::uint8_t { ThresholdLambda, TopK, NearestNeighbour };

constexpr std::string_view to_string(CutoffMode mode) noexcept
{
    switch (mode) {
    case CutoffMode::ThresholdLambda: return "threshold";
    case CutoffMode::TopK: return "top_k";
    case CutoffMode::NearestNeighbour: return "nearest";
    }
    return "unknown";
}

struct Cutoff {
    CutoffMode mode = CutoffMode::TopK;
    double lambda = 0.0;
    std::size_t k = 10;
    double eta = 1.645;

    static Cutoff threshold(double lambda) { return {CutoffMode::ThresholdLambda, lambda, 0, 0.0}; }
    static Cutoff top_k(std::size_t k) { return {CutoffMode::TopK, 0.0, k, 0.0}; }
    static Cutoff nearest(double lambda0, double eta = 1.645) { return {CutoffMode::NearestNeighbour, lambda0, 0, eta}; }
};

/// A cutoff turned into a raw-count rule: retrieved iff raw_count >= count.
struct ResolvedCutoff {
    CutoffMode mode = CutoffMode::TopK;
    double lambda = 0.0;     ///< lambda the count was computed at
    double count = 0.0;      ///< m mu(lambda), at h_index
    double epsilon = 0.0;    ///< nearest mode: epsilon-minus at lambda0
    std::size_t k = 0;
};

inline ResolvedCutoff resolve_cutoff(const IndexConfig& config, const Cutoff& cutoff)
{
    ResolvedCutoff out;
    out.mode = cutoff.mode;
    out.k = cutoff.k;
    switch (cutoff.mode) {
    case CutoffMode::TopK:
        break;
    case CutoffMode::ThresholdLambda:
        if (!(std::abs(cutoff.lambda) <= 1.0)) {
            fail(Errc::InvalidCutoff, "threshold lambda must lie in [-1, 1]");
        }
        out.lambda = cutoff.lambda;
        out.count = config.m * mean_score(cutoff.lambda, config.h_index);
        break;
    case CutoffMode::NearestNeighbour: {
        if (!(cutoff.lambda > 2.0 * config.r - 1.0) || !(cutoff.lambda < 1.0)) {
            fail(Errc::InvalidCutoff, "nearest-neighbour lambda must lie in (2r-1, 1)");
        }
        const auto sol = solve_epsilons(cutoff.lambda, config.m, config.r, cutoff.eta);
        if (!sol.minus) {
            fail(Errc::InvalidCutoff, "no epsilon-minus solution at this lambda and m");
        }
        out.epsilon = *sol.minus;
        out.lambda = std::max(-1.0, cutoff.lambda - out.epsilon);
        out.count = config.m * mean_score(out.lambda, config.h_index);
        break;
    }
    }
    return out;
}

struct SearchResult {
    std::uint32_t doc = 0;
    std::uint32_t raw_count = 0;
    double score = 0.0;  ///< raw_count / m
    CutoffMode retrieved_by = CutoffMode::TopK;

    friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

enum class Accumulator { Auto, Dense, Hash };

struct SearchStats {
    std::size_t postings_examined = 0;  ///< documents visited while accumulating
    std::size_t candidates = 0;         ///< distinct documents with count > 0
    Accumulator used = Accumulator::Dense;
};

/// Per-query counters for the cost report. Safe to update concurrently.
class CostMeter {
public:
    void record(const SearchStats& s)
    {
        queries_.fetch_add(1, std::memory_order_relaxed);
        examined_.fetch_add(s.postings_examined, std::memory_order_relaxed);
        candidates_.fetch_add(s.candidates, std::memory_order_relaxed);
    }
    [[nodiscard]] std::uint64_t queries() const { return queries_.load(); }
    [[nodiscard]] std::uint64_t examined() const { return examined_.load(); }
    [[nodiscard]] std::uint64_t candidates() const { return candidates_.load(); }

private:
    std::atomic<std::uint64_t> queries_{0};
    std::atomic<std::uint64_t> examined_{0};
    std::atomic<std::uint64_t> candidates_{0};
};

/// (doc, count) for every document sharing at least one active dimension with
/// the query, in ascending doc order. Only the query's postings are read.
inline std::vector<std::pair<std::uint32_t, std::uint32_t>>
accumulate_overlaps(const InvertedIndex& index, const SparseCode& query, Accumulator strategy = Accumulator::Auto,
                    SearchStats* stats = nullptr)
{
    if (query.m() != index.config().m) {
        fail(Errc::CodeLengthMismatch, "query code length differs from index m");
    }
    std::size_t traffic = 0;
    for (auto dim : query.support()) {
        traffic += index.postings(dim).size();
    }
    if (strategy == Accumulator::Auto) {
        strategy = traffic * 16 < index.size() ? Accumulator::Hash : Accumulator::Dense;
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> hits;
    if (strategy == Accumulator::Dense) {
        std::vector<std::uint32_t> counts(index.size(), 0);
        std::vector<std::uint32_t> touched;
        for (auto dim : query.support()) {
            for (auto doc : index.postings(dim)) {
                if (counts[doc]++ == 0) {
                    touched.push_back(doc);
                }
            }
        }
        std::sort(touched.begin(), touched.end());
        hits.reserve(touched.size());
        for (auto doc : touched) {
            hits.emplace_back(doc, counts[doc]);
        }
    } else {
        std::unordered_map<std::uint32_t, std::uint32_t> counts;
        counts.reserve(traffic);
        for (auto dim : query.support()) {
            for (auto doc : index.postings(dim)) {
                ++counts[doc];
            }
        }
        hits.assign(counts.begin(), counts.end());
        std::sort(hits.begin(), hits.end());
    }
    if (stats) {
        stats->postings_examined = traffic;
        stats->candidates = hits.size();
        stats->used = strategy;
    }
    return hits;
}

struct SearchOptions {
    Accumulator accumulator = Accumulator::Auto;
    std::size_t max_results = 0;  ///< 0 = unlimited
};

/// Ranked results: descending score, ties by ascending doc.
///
/// Threshold/nearest modes return every document with raw_count >= the
/// resolved count (documents with no overlap qualify only when that count is
/// <= 0). Top-k is the first k of the full ranking.
inline std::vector<SearchResult> search(const InvertedIndex& index, const SparseCode& query,
                                        const ResolvedCutoff& cutoff, const SearchOptions& options = {},
                                        SearchStats* stats = nullptr)
{
    const auto hits = accumulate_overlaps(index, query, options.accumulator, stats);
    const double m = index.config().m;
    std::vector<SearchResult> results;
    auto push = [&](std::uint32_t doc, std::uint32_t count) {
        results.push_back({doc, count, count / m, cutoff.mode});
    };
    if (cutoff.mode == CutoffMode::TopK) {
        for (const auto& [doc, count] : hits) {
            push(doc, count);
        }
        // Fewer overlapping documents than k: fill with zero-score ones,
        // ascending doc, exactly as a full ranking would.
        std::size_t next = 0;
        for (std::uint32_t doc = 0; doc < index.size() && results.size() < cutoff.k; ++doc) {
            if (next < hits.size() && hits[next].first == doc) {
                ++next;
            } else {
                push(doc, 0);
            }
        }
    } else if (cutoff.count <= 0.0) {
        std::size_t next = 0;
        for (std::uint32_t doc = 0; doc < index.size(); ++doc) {
            if (next < hits.size() && hits[next].first == doc) {
                push(doc, hits[next].second);
                ++next;
            } else {
                push(doc, 0);
            }
        }
    } else {
        for (const auto& [doc, count] : hits) {
            if (static_cast<double>(count) >= cutoff.count) {
                push(doc, count);
            }
        }
    }
    auto order = [](const SearchResult& a, const SearchResult& b) {
        return a.raw_count != b.raw_count ? a.raw_count > b.raw_count : a.doc < b.doc;
    };
    std::size_t limit = results.size();
    if (cutoff.mode == CutoffMode::TopK) {
        limit = std::min(limit, cutoff.k);
    }
    if (options.max_results > 0) {
        limit = std::min(limit, options.max_results);
    }
    if (limit < results.size()) {
        std::partial_sort(results.begin(), results.begin() + static_cast<std::ptrdiff_t>(limit), results.end(), order);
        results.resize(limit);
    } else {
        std::sort(results.begin(), results.end(), order);
    }
    return results;
}

inline std::vector<SearchResult> search(const InvertedIndex& index, const SparseCode& query, const Cutoff& cutoff,
                                        const SearchOptions& options = {}, SearchStats* stats = nullptr)
{
    return search(index, query, resolve_cutoff(index.config(), cutoff), options, stats);
}

// ---------------------------------------------------------------------------
// Token export
// ---------------------------------------------------------------------------

/// "t000003 t000017": one token per active dimension, ascending.
inline std::string export_tokens(const SparseCode& code)
{
    std::string out;
    char buf[32];
    for (auto dim : code.support()) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        std::snprintf(buf, sizeof buf, "t%06u", static_cast<unsigned>(dim));
        out += buf;
    }
    return out;
}

inline std::vector<std::string> export_tokens(std::span<const std::pair<std::string, SparseCode>> codes)
{
    std::vector<std::string> lines;
    lines.reserve(codes.size());
    for (const auto& [id, code] : codes) {
        lines.push_back(id + "\t" + export_tokens(code));
    }
    return lines;
}

inline SparseCode parse_tokens(std::string_view text, std::uint32_t m)
{
    std::vector<std::uint32_t> support;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && text[pos] == ' ') {
            ++pos;
        }
        if (pos >= text.size()) {
            break;
        }
        auto end = text.find(' ', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto token = text.substr(pos, end - pos);
        std::uint32_t dim = 0;
        if (token.size() < 2 || token[0] != 't' ||
            std::from_chars(token.data() + 1, token.data() + token.size(), dim).ptr != token.data() + token.size()) {
            fail(Errc::ParseError, "bad token '" + std::string(token) + "'");
        }
        support.push_back(dim);
        pos = end;
    }
    return SparseCode(m, std::move(support));
}

// ---------------------------------------------------------------------------
// Cost report
// ---------------------------------------------------------------------------

struct CostReport {
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t total_postings = 0;  ///< indexing cost, sum of k over documents
    double mean_posting_length = 0.0;
    std::size_t max_posting_length = 0;
    double mean_k = 0.0;
    double theory_k = 0.0;             ///< m (1 - Phi(h_index))
    double model_nk = 0.0;             ///< n * mean_k
    double model_nk2_over_m = 0.0;     ///< n * mean_k^2 / m
    std::uint64_t queries = 0;
    double measured_mean_examined = 0.0;
    double measured_mean_candidates = 0.0;
};

inline CostReport index_stats(const InvertedIndex& index, const CostMeter* meter = nullptr)
{
    CostReport report;
    report.n = index.size();
    report.m = index.config().m;
    for (std::uint32_t dim = 0; dim < index.config().m; ++dim) {
        const auto len = index.postings(dim).size();
        report.total_postings += len;
        report.max_posting_length = std::max(report.max_posting_length, len);
    }
    if (report.n == 0) {
        return report;
    }
    report.mean_posting_length = static_cast<double>(report.total_postings) / static_cast<double>(report.m);
    report.mean_k = static_cast<double>(report.total_postings) / static_cast<double>(report.n);
    report.theory_k = report.m * normal_sf(index.config().h_index);
    report.model_nk = static_cast<double>(report.n) * report.mean_k;
    report.model_nk2_over_m = static_cast<double>(report.n) * report.mean_k * report.mean_k / report.m;
    if (meter && meter->queries() > 0) {
        report.queries = meter->queries();
        report.measured_mean_examined = static_cast<double>(meter->examined()) / report.queries;
        report.measured_mean_candidates = static_cast<double>(meter->candidates()) / report.queries;
    }
    return report;
}

inline nlohmann::json to_json(const CostReport& r)
{
    return {{"n", r.n},
            {"m", r.m},
            {"total_postings", r.total_postings},
            {"mean_posting_length", r.mean_posting_length},
            {"max_posting_length", r.max_posting_length},
            {"mean_k", r.mean_k},
            {"theory_k", r.theory_k},
            {"model_nk", r.model_nk},
            {"model_nk2_over_m", r.model_nk2_over_m},
            {"queries", r.queries},
            {"measured_mean_examined", r.measured_mean_examined},
            {"measured_mean_candidates", r.measured_mean_candidates}};
}

}  // namespace sphx
