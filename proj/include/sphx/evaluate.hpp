#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "sphx/analysis.hpp"
#include "sphx/corpus.hpp"
#include "sphx/embedding.hpp"
#include "sphx/error.hpp"
#include "sphx/index.hpp"
#include "sphx/parallel.hpp"

namespace sphx {

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
    bool empty_retrieved = false;  ///< precision set to 1 by convention
    bool empty_relevant = false;   ///< recall set to 1 by convention
};

/// Sets are anything with size() and count(key).
template <class Set>
PrecisionRecall precision_recall(const Set& relevant, const Set& retrieved)
{
    std::size_t both = 0;
    for (const auto& key : retrieved) {
        both += relevant.count(key) ? 1 : 0;
    }
    PrecisionRecall pr;
    pr.empty_retrieved = retrieved.size() == 0;
    pr.empty_relevant = relevant.size() == 0;
    pr.precision = pr.empty_retrieved ? 1.0 : static_cast<double>(both) / static_cast<double>(retrieved.size());
    pr.recall = pr.empty_relevant ? 1.0 : static_cast<double>(both) / static_cast<double>(relevant.size());
    return pr;
}

// ---------------------------------------------------------------------------
// Error events
// ---------------------------------------------------------------------------

enum class Band { EpsRelevant, Gray, EpsIrrelevant };

constexpr std::string_view to_string(Band b) noexcept
{
    switch (b) {
    case Band::EpsRelevant: return "eps_relevant";
    case Band::Gray: return "gray";
    case Band::EpsIrrelevant: return "eps_irrelevant";
    }
    return "unknown";
}

struct RelevanceJudgment {
    std::uint32_t doc = 0;
    double true_inner = 0.0;
    bool relevant = false;  ///< true_inner >= lambda
    Band band = Band::Gray;
};

inline RelevanceJudgment judge(std::uint32_t doc, double true_inner, double lambda, double eps_minus, double eps_plus)
{
    RelevanceJudgment j{doc, true_inner, true_inner >= lambda, Band::Gray};
    if (true_inner >= lambda + eps_plus) {
        j.band = Band::EpsRelevant;
    } else if (true_inner <= lambda - eps_minus) {
        j.band = Band::EpsIrrelevant;
    }
    return j;
}

struct ErrorCounts {
    std::size_t type_I = 0;          ///< eps-irrelevant and retrieved
    std::size_t type_II = 0;         ///< eps-relevant and not retrieved
    std::size_t gray_retrieved = 0;
    std::size_t gray = 0;            ///< gray-zone documents (never errors)
    std::size_t correct = 0;

    ErrorCounts& operator+=(const ErrorCounts& o)
    {
        type_I += o.type_I;
        type_II += o.type_II;
        gray_retrieved += o.gray_retrieved;
        gray += o.gray;
        correct += o.correct;
        return *this;
    }
};

inline ErrorCounts count_error_events(std::span<const RelevanceJudgment> judgments,
                                      const std::unordered_set<std::uint32_t>& retrieved)
{
    ErrorCounts c;
    for (const auto& j : judgments) {
        const bool got = retrieved.count(j.doc) > 0;
        switch (j.band) {
        case Band::EpsRelevant: (got ? c.correct : c.type_II) += 1; break;
        case Band::EpsIrrelevant: (got ? c.type_I : c.correct) += 1; break;
        case Band::Gray:
            ++c.gray;
            c.gray_retrieved += got ? 1 : 0;
            break;
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// Corpus-level evaluation against an index
// ---------------------------------------------------------------------------

/// An index together with the original vectors it was built from; true
/// inner products always come from here, never from codes.
struct EvalSetup {
    const InvertedIndex* index = nullptr;
    const Corpus* corpus = nullptr;
    std::vector<std::uint32_t> doc_of_row;  ///< corpus row -> index doc

    EvalSetup(const InvertedIndex& idx, const Corpus& c) : index(&idx), corpus(&c)
    {
        if (c.size() != idx.size()) {
            fail(Errc::DimensionMismatch, "corpus and index hold different numbers of documents");
        }
        if (c.size() > 0 && c.d != idx.config().d) {
            fail(Errc::DimensionMismatch, "corpus dimension differs from index d");
        }
        doc_of_row.resize(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            const auto doc = idx.find(c.ids[i]);
            if (!doc) {
                fail(Errc::NotFound, "corpus id '" + c.ids[i] + "' missing from index");
            }
            doc_of_row[i] = *doc;
        }
    }

    /// Inner products indexed by index doc number.
    [[nodiscard]] std::vector<double> true_inner(const UnitVector& q) const
    {
        std::vector<double> out(corpus->size());
        for (std::size_t i = 0; i < corpus->size(); ++i) {
            out[doc_of_row[i]] = corpus->vectors[i].dot(q);
        }
        return out;
    }
};

struct PRPoint {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double se_precision = 0.0;
    double se_recall = 0.0;
    std::size_t queries = 0;
    std::size_t empty_retrieved = 0;  ///< queries where the precision convention applied
    std::size_t empty_relevant = 0;   ///< queries where the recall convention applied
};

/// One point per T: relevant = {<q,x> >= T}, retrieved = threshold search at T.
/// Means and standard errors (sample sd / sqrt(#queries)) over queries.
inline std::vector<PRPoint> pr_curve(const EvalSetup& setup, const Corpus& queries, std::span<const double> thresholds,
                                     unsigned threads = 1)
{
    const auto& index = *setup.index;
    const auto transform = index.config().make_transform();
    const auto qcodes = map_vectors(transform, queries.vectors, index.config().h_query);
    std::vector<ResolvedCutoff> cutoffs;
    for (double t : thresholds) {
        cutoffs.push_back(resolve_cutoff(index.config(), Cutoff::threshold(t)));
    }
    const std::size_t nq = queries.size();
    const std::size_t nt = thresholds.size();
    std::vector<PrecisionRecall> cells(nq * nt);
    parallel_for(nq, threads, [&](std::size_t q) {
        const auto inner = setup.true_inner(queries.vectors[q]);
        for (std::size_t t = 0; t < nt; ++t) {
            std::unordered_set<std::uint32_t> relevant, retrieved;
            for (std::uint32_t doc = 0; doc < inner.size(); ++doc) {
                if (inner[doc] >= thresholds[t]) {
                    relevant.insert(doc);
                }
            }
            for (const auto& r : search(index, qcodes[q], cutoffs[t])) {
                retrieved.insert(r.doc);
            }
            cells[q * nt + t] = precision_recall(relevant, retrieved);
        }
    });
    std::vector<PRPoint> points(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        auto& p = points[t];
        p.threshold = thresholds[t];
        p.queries = nq;
        if (nq == 0) {
            continue;
        }
        double sp = 0, sr = 0, spp = 0, srr = 0;
        for (std::size_t q = 0; q < nq; ++q) {
            const auto& c = cells[q * nt + t];
            sp += c.precision;
            sr += c.recall;
            spp += c.precision * c.precision;
            srr += c.recall * c.recall;
            p.empty_retrieved += c.empty_retrieved;
            p.empty_relevant += c.empty_relevant;
        }
        const double n = static_cast<double>(nq);
        p.precision = sp / n;
        p.recall = sr / n;
        if (nq > 1) {
            const double var_p = std::max(0.0, (spp - n * p.precision * p.precision) / (n - 1));
            const double var_r = std::max(0.0, (srr - n * p.recall * p.recall) / (n - 1));
            p.se_precision = std::sqrt(var_p / n);
            p.se_recall = std::sqrt(var_r / n);
        }
    }
    return points;
}

/// Trapezoidal area under precision(recall), points sorted by recall, with
/// the curve extended flat to recall 0 at the lowest-recall point's precision.
/// Not extended beyond the largest recall reached.
inline double pr_area(std::span<const PRPoint> points)
{
    if (points.empty()) {
        return 0.0;
    }
    std::vector<std::pair<double, double>> rp;
    for (const auto& p : points) {
        rp.emplace_back(p.recall, p.precision);
    }
    std::sort(rp.begin(), rp.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : a.second > b.second;
    });
    double area = rp.front().first * rp.front().second;
    for (std::size_t i = 1; i < rp.size(); ++i) {
        area += (rp[i].first - rp[i - 1].first) * 0.5 * (rp[i].second + rp[i - 1].second);
    }
    return area;
}

/// Error events for one query at (lambda, eta): bands from solve_epsilons,
/// retrieval from a threshold search at lambda.
inline ErrorCounts query_error_events(const EvalSetup& setup, const SparseCode& qcode, const UnitVector& q,
                                      double lambda, const EpsilonSolution& eps)
{
    const auto inner = setup.true_inner(q);
    std::vector<RelevanceJudgment> judgments;
    judgments.reserve(inner.size());
    const double em = eps.minus.value_or(2.0);
    const double ep = eps.plus.value_or(2.0);
    for (std::uint32_t doc = 0; doc < inner.size(); ++doc) {
        judgments.push_back(judge(doc, inner[doc], lambda, em, ep));
    }
    std::unordered_set<std::uint32_t> retrieved;
    for (const auto& r : search(*setup.index, qcode, Cutoff::threshold(lambda))) {
        retrieved.insert(r.doc);
    }
    return count_error_events(judgments, retrieved);
}

inline void write_pr_csv(std::ostream& out, std::span<const PRPoint> points)
{
    out << "threshold,precision,recall,se_precision,se_recall,queries,empty_retrieved,empty_relevant\n";
    for (const auto& p : points) {
        out << format_double(p.threshold) << ',' << format_double(p.precision) << ',' << format_double(p.recall) << ','
            << format_double(p.se_precision) << ',' << format_double(p.se_recall) << ',' << p.queries << ','
            << p.empty_retrieved << ',' << p.empty_relevant << '\n';
    }
}

}  // namespace sphx
