#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/random/uniform_real_distribution.hpp>
#include <json.hpp>

#include "sphx/embedding.hpp"
#include "sphx/error.hpp"
#include "sphx/rng.hpp"
#include "sphx/sampling.hpp"

namespace sphx {

struct RawRecord {
    std::string id;
    std::vector<double> values;
};

/// Unnormalized records sharing one dimension.
struct RawCorpus {
    std::vector<RawRecord> records;
    std::size_t d = 0;
};

/// Unit vectors with external ids, in input order.
struct Corpus {
    std::vector<std::string> ids;
    std::vector<UnitVector> vectors;
    std::size_t d = 0;

    [[nodiscard]] std::size_t size() const noexcept { return ids.size(); }

    [[nodiscard]] std::optional<std::size_t> find(std::string_view id) const
    {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] == id) {
                return i;
            }
        }
        return std::nullopt;
    }
};

inline Corpus normalize_corpus(const RawCorpus& raw)
{
    Corpus out;
    out.d = raw.d;
    out.ids.reserve(raw.records.size());
    out.vectors.reserve(raw.records.size());
    for (const auto& rec : raw.records) {
        if (rec.values.size() != raw.d) {
            fail(Errc::RaggedDimensions, "record '" + rec.id + "' has " + std::to_string(rec.values.size()) +
                                             " values, expected " + std::to_string(raw.d));
        }
        try {
            out.vectors.push_back(UnitVector::normalize(rec.values));
        } catch (const Error& e) {
            if (e.code() == Errc::ZeroVector) {
                fail(Errc::ZeroVector, "zero vector for id '" + rec.id + "'");
            }
            throw;
        }
        out.ids.push_back(rec.id);
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV / JSONL vectors
// ---------------------------------------------------------------------------

enum class VectorFormat { Csv, Jsonl };

inline VectorFormat parse_vector_format(std::string_view name)
{
    if (name == "csv") return VectorFormat::Csv;
    if (name == "jsonl") return VectorFormat::Jsonl;
    fail(Errc::InvalidParams, "unknown vector format '" + std::string(name) + "' (csv|jsonl)");
}

/// By file extension; CSV unless it ends in .jsonl / .ndjson.
inline VectorFormat format_for_path(std::string_view path)
{
    auto ends = [&](std::string_view s) { return path.size() >= s.size() && path.substr(path.size() - s.size()) == s; };
    return ends(".jsonl") || ends(".ndjson") ? VectorFormat::Jsonl : VectorFormat::Csv;
}

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) {
            return fields;
        }
        start = comma + 1;
    }
}

inline bool parse_double(std::string_view s, double& out)
{
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

[[noreturn]] inline void parse_fail(std::size_t line_no, const std::string& what)
{
    fail(Errc::ParseError, "line " + std::to_string(line_no) + ": " + what);
}

inline bool skippable(std::string_view line)
{
    line = trim(line);
    return line.empty() || line.front() == '#';
}

}  // namespace detail

/// Reads "id,v1,...,vd" rows (optional "id,..." header, '#' comments) or
/// JSONL {"id": ..., "vector": [...]} objects. Vectors are not normalized.
inline RawCorpus read_raw_vectors(std::istream& in, VectorFormat format)
{
    RawCorpus raw;
    std::string line;
    std::size_t line_no = 0;
    bool first_data = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (detail::skippable(line)) {
            continue;
        }
        RawRecord rec;
        if (format == VectorFormat::Csv) {
            const auto fields = detail::split_csv(line);
            if (first_data && !fields.empty()) {
                std::string head(fields[0]);
                std::transform(head.begin(), head.end(), head.begin(), [](unsigned char c) { return std::tolower(c); });
                first_data = false;
                if (head == "id") {
                    continue;
                }
            }
            if (fields.size() < 2 || fields[0].empty()) {
                detail::parse_fail(line_no, "expected 'id,v1,...,vd'");
            }
            rec.id = std::string(fields[0]);
            rec.values.resize(fields.size() - 1);
            for (std::size_t i = 1; i < fields.size(); ++i) {
                if (!detail::parse_double(fields[i], rec.values[i - 1])) {
                    detail::parse_fail(line_no, "bad number '" + std::string(fields[i]) + "'");
                }
            }
        } else {
            nlohmann::json obj;
            try {
                obj = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                detail::parse_fail(line_no, e.what());
            }
            if (!obj.is_object() || !obj.contains("id") || !obj.contains("vector") || !obj["vector"].is_array()) {
                detail::parse_fail(line_no, "expected {\"id\": ..., \"vector\": [...]}");
            }
            const auto& id = obj["id"];
            rec.id = id.is_string() ? id.get<std::string>() : id.dump();
            for (const auto& v : obj["vector"]) {
                if (!v.is_number() || !std::isfinite(v.get<double>())) {
                    detail::parse_fail(line_no, "vector entries must be finite numbers");
                }
                rec.values.push_back(v.get<double>());
            }
            if (rec.values.empty()) {
                detail::parse_fail(line_no, "empty vector");
            }
        }
        if (raw.records.empty()) {
            raw.d = rec.values.size();
        } else if (rec.values.size() != raw.d) {
            fail(Errc::RaggedDimensions, "line " + std::to_string(line_no) + ": record '" + rec.id + "' has " +
                                             std::to_string(rec.values.size()) + " values, expected " +
                                             std::to_string(raw.d));
        }
        raw.records.push_back(std::move(rec));
    }
    return raw;
}

inline Corpus load_vectors(std::istream& in, VectorFormat format)
{
    return normalize_corpus(read_raw_vectors(in, format));
}

inline Corpus load_vectors_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        fail(Errc::Io, "cannot open '" + path + "'");
    }
    return load_vectors(in, format_for_path(path));
}

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void save_vectors(std::ostream& out, const Corpus& corpus, VectorFormat format)
{
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto coords = corpus.vectors[i].coords();
        if (format == VectorFormat::Csv) {
            out << corpus.ids[i];
            for (double c : coords) {
                out << ',' << format_double(c);
            }
            out << '\n';
        } else {
            nlohmann::json obj = {{"id", corpus.ids[i]}, {"vector", std::vector<double>(coords.begin(), coords.end())}};
            out << obj.dump() << '\n';
        }
    }
}

inline void save_vectors_file(const Corpus& corpus, const std::string& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        fail(Errc::Io, "cannot open '" + path + "' for writing");
    }
    save_vectors(out, corpus, format_for_path(path));
}

// ---------------------------------------------------------------------------
// Time series windows
// ---------------------------------------------------------------------------

struct PricePoint {
    std::string date;
    double close = 0.0;
};

/// "date,close" rows; optional header and '#' comments.
inline std::vector<PricePoint> read_series(std::istream& in)
{
    std::vector<PricePoint> series;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (detail::skippable(line)) {
            continue;
        }
        const auto fields = detail::split_csv(line);
        if (fields.size() != 2) {
            detail::parse_fail(line_no, "expected 'date,close'");
        }
        PricePoint p{std::string(fields[0]), 0.0};
        if (!detail::parse_double(fields[1], p.close)) {
            if (series.empty() && line_no == 1) {
                continue;  // header
            }
            detail::parse_fail(line_no, "bad close '" + std::string(fields[1]) + "'");
        }
        series.push_back(std::move(p));
    }
    return series;
}

/// For each day t with half_window full day-pairs on both sides: the relative
/// differences (c[s+1] - c[s]) / c[s] for s = t-hw .. t+hw-1, i.e. hw pairs
/// ending at t and hw pairs starting at t. Id = date of t. Not normalized.
inline RawCorpus window_series(const std::vector<PricePoint>& series, std::size_t half_window)
{
    if (half_window < 1) {
        fail(Errc::InvalidParams, "half_window must be >= 1");
    }
    if (series.size() < 2 * half_window + 1) {
        fail(Errc::SeriesTooShort, "series of length " + std::to_string(series.size()) + " needs at least " +
                                       std::to_string(2 * half_window + 1) + " points");
    }
    for (const auto& p : series) {
        if (!(p.close > 0.0) || !std::isfinite(p.close)) {
            fail(Errc::NonPositivePrice, "non-positive close on " + p.date);
        }
    }
    std::vector<double> diff(series.size() - 1);
    for (std::size_t s = 0; s + 1 < series.size(); ++s) {
        diff[s] = (series[s + 1].close - series[s].close) / series[s].close;
    }
    RawCorpus raw;
    raw.d = 2 * half_window;
    for (std::size_t t = half_window; t + half_window < series.size(); ++t) {
        RawRecord rec{series[t].date, {}};
        rec.values.assign(diff.begin() + static_cast<std::ptrdiff_t>(t - half_window),
                          diff.begin() + static_cast<std::ptrdiff_t>(t + half_window));
        raw.records.push_back(std::move(rec));
    }
    return raw;
}

// ---------------------------------------------------------------------------
// Histograms
// ---------------------------------------------------------------------------

struct Histogram {
    std::vector<double> counts;
    std::size_t dropped = 0;  ///< values outside [edges.front(), edges.back()]
};

/// Bins are [e_i, e_{i+1}) except the last, which is closed.
inline Histogram histogram_bin(const std::vector<double>& values, const std::vector<double>& edges)
{
    if (edges.size() < 2) {
        fail(Errc::BadEdges, "need at least two edges");
    }
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i] > edges[i - 1])) {
            fail(Errc::BadEdges, "edges must be strictly ascending");
        }
    }
    Histogram hist;
    hist.counts.assign(edges.size() - 1, 0.0);
    for (double v : values) {
        if (!(v >= edges.front()) || !(v <= edges.back())) {
            ++hist.dropped;
            continue;
        }
        auto it = std::upper_bound(edges.begin(), edges.end(), v);
        auto bin = static_cast<std::size_t>(it - edges.begin()) - 1;
        hist.counts[std::min(bin, hist.counts.size() - 1)] += 1.0;
    }
    return hist;
}

// ---------------------------------------------------------------------------
// Synthetic corpora
// ---------------------------------------------------------------------------

/// n uniform unit vectors in R^d, ids "u000000", ...
inline Corpus uniform_corpus(std::size_t n, std::size_t d, std::uint64_t seed)
{
    Corpus c;
    c.d = d;
    auto engine = make_engine(seed, stream::input_base + 1);
    char buf[32];
    for (std::size_t i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "u%06zu", i);
        c.ids.emplace_back(buf);
        c.vectors.push_back(random_unit(d, engine));
    }
    return c;
}

struct ClusteredCorpusSpec {
    std::size_t n = 5000;
    std::size_t d = 128;
    std::size_t clusters = 50;
    std::size_t members = 20;      ///< per cluster; the rest of n is background
    double lambda_lo = 0.85;       ///< member inner products with the center,
    double lambda_hi = 0.95;       ///< uniform on [lo, hi]
    std::uint64_t seed = 0;
};

/// Corpus plus cluster centers. Centers are the natural queries and are not
/// themselves in the corpus. Background vectors are uniform on the sphere,
/// hence near-orthogonal to everything for moderate d.
struct ClusteredCorpus {
    Corpus corpus;
    Corpus centers;
    std::vector<std::size_t> cluster_of;  ///< per corpus row; clusters = background
};

inline ClusteredCorpus clustered_corpus(const ClusteredCorpusSpec& spec)
{
    if (spec.clusters * spec.members > spec.n || spec.d < 2) {
        fail(Errc::InvalidParams, "clustered corpus needs clusters*members <= n and d >= 2");
    }
    if (!(spec.lambda_lo <= spec.lambda_hi) || !(spec.lambda_lo >= -1.0) || !(spec.lambda_hi <= 1.0)) {
        fail(Errc::InvalidLambda, "cluster inner products must satisfy -1 <= lo <= hi <= 1");
    }
    ClusteredCorpus out;
    out.corpus.d = out.centers.d = spec.d;
    auto engine = make_engine(spec.seed, stream::input_base + 2);
    boost::random::uniform_real_distribution<double> lam(spec.lambda_lo, spec.lambda_hi);
    char buf[48];
    for (std::size_t c = 0; c < spec.clusters; ++c) {
        std::snprintf(buf, sizeof buf, "q%04zu", c);
        out.centers.ids.emplace_back(buf);
        out.centers.vectors.push_back(random_unit(spec.d, engine));
        for (std::size_t j = 0; j < spec.members; ++j) {
            std::snprintf(buf, sizeof buf, "c%04zu_%04zu", c, j);
            out.corpus.ids.emplace_back(buf);
            out.corpus.vectors.push_back(vector_at_inner_product(out.centers.vectors.back(), lam(engine), engine));
            out.cluster_of.push_back(c);
        }
    }
    for (std::size_t i = spec.clusters * spec.members; i < spec.n; ++i) {
        std::snprintf(buf, sizeof buf, "b%06zu", i);
        out.corpus.ids.emplace_back(buf);
        out.corpus.vectors.push_back(random_unit(spec.d, engine));
        out.cluster_of.push_back(spec.clusters);
    }
    return out;
}

}  // namespace sphx
