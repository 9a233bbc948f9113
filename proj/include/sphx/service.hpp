#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "sphx/analysis.hpp"
#include "sphx/corpus.hpp"
#include "sphx/embedding.hpp"
#include "sphx/error.hpp"
#include "sphx/index.hpp"
#include "sphx/index_io.hpp"

namespace sphx {

struct ServiceConfig {
    std::string index_path;
    std::string vectors_path;  ///< optional original vectors (true inner products, /doc vectors)
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t max_results = 100;
    std::vector<std::string> cors_allowlist;  ///< exact origins; "*" allows any
};

struct Response {
    int status = 200;
    nlohmann::json body;
};

inline Response error_response(int status, std::string_view code, const std::string& message)
{
    return {status, {{"error", {{"code", std::string(code)}, {"message", message}}}}};
}

/// Read-only search over one index. Everything is built in the constructor
/// and never modified; handlers may run concurrently.
class SearchService {
public:
    SearchService(InvertedIndex index, std::optional<Corpus> vectors, std::size_t max_results = 100)
        : index_(std::move(index)),
          transform_(index_.config().make_transform()),
          codes_(index_.document_codes()),
          max_results_(max_results)
    {
        if (transform_.kind() == TransformKind::Gaussian) {
            transform_.materialize();
        }
        if (vectors) {
            if (vectors->d != index_.config().d) {
                fail(Errc::DimensionMismatch, "vector store dimension differs from index d");
            }
            vectors_.assign(index_.size(), std::nullopt);
            for (std::size_t i = 0; i < vectors->size(); ++i) {
                if (auto doc = index_.find(vectors->ids[i])) {
                    vectors_[*doc] = vectors->vectors[i];
                }
            }
        }
    }

    static SearchService from_config(const ServiceConfig& config)
    {
        auto index = load_index_file(config.index_path);
        std::optional<Corpus> vectors;
        if (!config.vectors_path.empty()) {
            vectors = load_vectors_file(config.vectors_path);
        }
        return SearchService(std::move(index), std::move(vectors), config.max_results);
    }

    [[nodiscard]] const InvertedIndex& index() const noexcept { return index_; }
    [[nodiscard]] const CostMeter& meter() const noexcept { return meter_; }

    [[nodiscard]] Response handle_healthz() const
    {
        return {200,
                {{"status", "ok"},
                 {"n", index_.size()},
                 {"config", to_json(index_.config())},
                 {"has_vectors", !vectors_.empty()}}};
    }

    [[nodiscard]] Response handle_doc(const std::string& id) const
    {
        const auto doc = index_.find(id);
        if (!doc) {
            return error_response(404, "NotFound", "unknown doc_id '" + id + "'");
        }
        nlohmann::json body = {{"doc_id", id},
                               {"k", index_.doc_k(*doc)},
                               {"tokens", export_tokens(codes_[*doc])},
                               {"metadata", {{"internal_doc", *doc}, {"m", index_.config().m}}}};
        if (const auto* v = vector_of(*doc)) {
            body["vector"] = std::vector<double>(v->coords().begin(), v->coords().end());
        } else {
            body["vector"] = nullptr;
        }
        return {200, body};
    }

    /// Body: {vector | doc_id, mode: "top_k" | "threshold" | "nearest",
    /// lambda, k, q, eta}. q >= 1 re-encodes the query at sqrt(2 q r ln m);
    /// without it the index's h_query is used.
    [[nodiscard]] Response handle_search(const nlohmann::json& body) const
    {
        try {
            return search_impl(body);
        } catch (const Error& e) {
            switch (e.code()) {
            case Errc::InvalidCutoff:
            case Errc::OutOfPhaseRegion:
            case Errc::NoSolution: return error_response(422, to_string(e.code()), e.what());
            case Errc::NotFound: return error_response(404, to_string(e.code()), e.what());
            default: return error_response(400, to_string(e.code()), e.what());
            }
        } catch (const nlohmann::json::exception& e) {
            return error_response(400, "ParseError", e.what());
        }
    }

    [[nodiscard]] Response handle_search_text(const std::string& text) const
    {
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            return error_response(400, "ParseError", e.what());
        }
        return handle_search(body);
    }

private:
    [[nodiscard]] const UnitVector* vector_of(std::uint32_t doc) const
    {
        if (vectors_.empty() || !vectors_[doc]) {
            return nullptr;
        }
        return &*vectors_[doc];
    }

    static double number(const nlohmann::json& body, const char* key)
    {
        const auto& v = body.at(key);
        if (!v.is_number()) {
            fail(Errc::InvalidParams, std::string("'") + key + "' must be a number");
        }
        return v.get<double>();
    }

    Response search_impl(const nlohmann::json& body) const
    {
        if (!body.is_object()) {
            fail(Errc::InvalidParams, "request body must be a JSON object");
        }
        const bool has_vector = body.contains("vector");
        const bool has_doc = body.contains("doc_id");
        if (has_vector == has_doc) {
            fail(Errc::InvalidParams, "give exactly one of 'vector' or 'doc_id'");
        }
        const auto& cfg = index_.config();
        double h_query = cfg.h_query;
        if (body.contains("q")) {
            const double q = number(body, "q");
            if (!(q >= 1.0)) {
                fail(Errc::InvalidParams, "q must be >= 1");
            }
            h_query = threshold_h(cfg.m, q * cfg.r);
        }

        std::optional<UnitVector> query_vector;
        SparseCode query_code;
        if (has_vector) {
            const auto& arr = body["vector"];
            if (!arr.is_array()) {
                fail(Errc::InvalidParams, "'vector' must be an array of numbers");
            }
            std::vector<double> raw;
            for (const auto& v : arr) {
                if (!v.is_number()) {
                    fail(Errc::InvalidParams, "'vector' must be an array of numbers");
                }
                raw.push_back(v.get<double>());
            }
            if (raw.size() != cfg.d) {
                fail(Errc::DimensionMismatch,
                     "query has d=" + std::to_string(raw.size()) + ", index expects d=" + std::to_string(cfg.d));
            }
            double sq = 0.0;
            for (double c : raw) {
                sq += c * c;
            }
            if (!(std::abs(std::sqrt(sq) - 1.0) <= 0.01)) {
                fail(Errc::InvalidParams, "query vector norm must be within 1% of 1 (got " +
                                              format_double(std::sqrt(sq)) + ")");
            }
            query_vector = UnitVector::normalize(std::move(raw));
            query_code = map_vector(transform_, *query_vector, h_query);
        } else {
            if (!body["doc_id"].is_string()) {
                fail(Errc::InvalidParams, "'doc_id' must be a string");
            }
            const auto id = body["doc_id"].get<std::string>();
            const auto doc = index_.find(id);
            if (!doc) {
                fail(Errc::NotFound, "unknown doc_id '" + id + "'");
            }
            if (const auto* v = vector_of(*doc)) {
                query_vector = *v;
                query_code = map_vector(transform_, *v, h_query);
            } else {
                query_code = codes_[*doc];  // stored code, encoded at h_index
            }
        }

        const std::string mode = body.value("mode", std::string("top_k"));
        Cutoff cutoff;
        if (mode == "top_k") {
            const auto& k = body.contains("k") ? body["k"] : nlohmann::json(10);
            if (!k.is_number_integer() || k.get<std::int64_t>() < 1) {
                fail(Errc::InvalidParams, "'k' must be a positive integer");
            }
            cutoff = Cutoff::top_k(static_cast<std::size_t>(k.get<std::int64_t>()));
        } else if (mode == "threshold" || mode == "nearest") {
            if (!body.contains("lambda")) {
                fail(Errc::InvalidParams, "mode '" + mode + "' needs 'lambda'");
            }
            const double lambda = number(body, "lambda");
            if (mode == "threshold") {
                if (!(std::abs(lambda) <= 1.0)) {
                    fail(Errc::InvalidParams, "'lambda' must lie in [-1, 1]");
                }
                cutoff = Cutoff::threshold(lambda);
            } else {
                cutoff = Cutoff::nearest(lambda, body.contains("eta") ? number(body, "eta") : 1.645);
            }
        } else {
            fail(Errc::InvalidParams, "unknown mode '" + mode + "' (top_k|threshold|nearest)");
        }

        const auto resolved = resolve_cutoff(cfg, cutoff);
        SearchStats stats;
        // one extra result tells whether the list was cut
        auto results = search(index_, query_code, resolved,
                              {Accumulator::Auto, max_results_ > 0 ? max_results_ + 1 : 0}, &stats);
        meter_.record(stats);
        const bool truncated = max_results_ > 0 && results.size() > max_results_;
        if (truncated) {
            results.resize(max_results_);
        }

        nlohmann::json items = nlohmann::json::array();
        for (const auto& r : results) {
            nlohmann::json item = {{"doc_id", index_.doc_id(r.doc)}, {"score", r.score}, {"raw_count", r.raw_count}};
            const auto* v = vector_of(r.doc);
            if (v && query_vector) {
                item["true_inner"] = v->dot(*query_vector);
            }
            items.push_back(std::move(item));
        }
        nlohmann::json resolved_json = {{"mode", std::string(to_string(resolved.mode))}};
        if (resolved.mode == CutoffMode::TopK) {
            resolved_json["k"] = resolved.k;
        } else {
            resolved_json["lambda"] = resolved.lambda;
            resolved_json["count"] = resolved.count;
            if (resolved.mode == CutoffMode::NearestNeighbour) {
                resolved_json["epsilon"] = resolved.epsilon;
                resolved_json["lambda0"] = cutoff.lambda;
            }
        }
        return {200,
                {{"results", std::move(items)},
                 {"cutoff", std::move(resolved_json)},
                 {"query", {{"k", query_code.k()}, {"h", h_query}, {"source", has_vector ? "vector" : "doc_id"}}},
                 {"truncated", truncated}}};
    }

    InvertedIndex index_;
    Transform transform_;
    std::vector<SparseCode> codes_;
    std::vector<std::optional<UnitVector>> vectors_;
    std::size_t max_results_;
    mutable CostMeter meter_;
};

// ---------------------------------------------------------------------------
// HTTP binding
// ---------------------------------------------------------------------------

inline void apply_cors(const httplib::Request& req, httplib::Response& res, const std::vector<std::string>& allowlist)
{
    const auto origin = req.get_header_value("Origin");
    if (origin.empty()) {
        return;
    }
    const bool any = std::find(allowlist.begin(), allowlist.end(), "*") != allowlist.end();
    if (any || std::find(allowlist.begin(), allowlist.end(), origin) != allowlist.end()) {
        res.set_header("Access-Control-Allow-Origin", any ? "*" : origin);
        res.set_header("Vary", "Origin");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
    }
}

inline std::unique_ptr<httplib::Server> make_http_server(const SearchService& service,
                                                         std::vector<std::string> cors_allowlist)
{
    auto server = std::make_unique<httplib::Server>();
    auto reply = [cors = std::move(cors_allowlist)](const httplib::Request& req, httplib::Response& res,
                                                    const Response& out) {
        apply_cors(req, res, cors);
        res.status = out.status;
        res.set_content(out.body.dump(), "application/json");
    };
    server->Get("/healthz", [&service, reply](const httplib::Request& req, httplib::Response& res) {
        reply(req, res, service.handle_healthz());
    });
    server->Get(R"(/doc/(.+))", [&service, reply](const httplib::Request& req, httplib::Response& res) {
        reply(req, res, service.handle_doc(httplib::detail::decode_url(req.matches[1], false)));
    });
    server->Post("/search", [&service, reply](const httplib::Request& req, httplib::Response& res) {
        reply(req, res, service.handle_search_text(req.body));
    });
    server->Options(R"(/.*)", [reply](const httplib::Request& req, httplib::Response& res) {
        reply(req, res, {204, nullptr});
        res.body.clear();
    });
    return server;
}

/// Blocks serving until the process is stopped.
inline void run_service(const ServiceConfig& config)
{
    const auto service = SearchService::from_config(config);
    auto server = make_http_server(service, config.cors_allowlist);
    if (!server->listen(config.host, config.port)) {
        fail(Errc::Io, "cannot listen on " + config.host + ":" + std::to_string(config.port));
    }
}

}  // namespace sphx
