#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sphx/analysis.hpp"
#include "sphx/corpus.hpp"
#include "sphx/embedding.hpp"
#include "sphx/error.hpp"
#include "sphx/evaluate.hpp"
#include "sphx/index.hpp"
#include "sphx/index_io.hpp"
#include "sphx/service.hpp"
#include "sphx/simulate.hpp"

namespace sphx::cli {

// Exit codes: 0 ok, 1 module error, 2 usage error. Errors are one JSON
// object on stderr: {"error": {"code": ..., "message": ...}}.
inline constexpr int exit_ok = 0;
inline constexpr int exit_module_error = 1;
inline constexpr int exit_usage_error = 2;

namespace detail {

inline std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

/// Deterministic body plus a separate metadata field for anything that varies.
inline nlohmann::json artifact(const std::string& command, nlohmann::json config, nlohmann::json result)
{
    return {{"command", command},
            {"config", std::move(config)},
            {"result", std::move(result)},
            {"metadata", {{"generated_at", utc_timestamp()}, {"tool", "sphx"}}}};
}

inline void write_text(const std::string& path, const std::string& text, std::ostream& out)
{
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        fail(Errc::Io, "cannot open '" + path + "' for writing");
    }
    f << text;
}

inline void print_error(std::ostream& err, std::string_view code, const std::string& message)
{
    err << nlohmann::json{{"error", {{"code", std::string(code)}, {"message", message}}}}.dump() << '\n';
}

/// Input files are part of the invocation: a missing one is a usage error.
inline bool missing_file(const std::string& path, std::ostream& err)
{
    if (std::ifstream(path).good()) {
        return false;
    }
    print_error(err, "UsageError", "file not found: " + path);
    return true;
}

inline std::string csv_config_line(const nlohmann::json& config)
{
    return "# config: " + config.dump() + "\n";
}

}  // namespace detail

/// Runs one invocation; never throws.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Sparse binary codes for inner-product search: ingest, index, search, simulate, evaluate"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Normalize a vector corpus (CSV/JSONL) or window a price series");
    std::string ingest_input, ingest_series, ingest_output = "-";
    std::size_t half_window = 5;
    ingest->add_option("--input", ingest_input, "id,v1,...,vd CSV or JSONL {id, vector}")->check(CLI::ExistingFile);
    ingest->add_option("--series", ingest_series, "date,close CSV; emits windowed relative differences")
        ->check(CLI::ExistingFile);
    ingest->add_option("--half-window", half_window, "series windowing: differences each side of the day")
        ->capture_default_str();
    ingest->add_option("--output", ingest_output, "vector store (.csv or .jsonl; '-' = stdout)")->capture_default_str();

    // index
    auto* index_cmd = app.add_subcommand("index", "Build an index from a normalized vector store");
    std::string index_vectors, index_output = "index.sphx", kind_name = "structured";
    std::uint32_t index_m = 1u << 16;
    double index_r = 0.5, index_q = 1.0;
    std::uint64_t index_seed = 0;
    index_cmd->add_option("--vectors", index_vectors, "vector store")->required()->check(CLI::ExistingFile);
    index_cmd->add_option("--output", index_output, "index file")->capture_default_str();
    index_cmd->add_option("--m", index_m, "code length")->capture_default_str();
    index_cmd->add_option("--r", index_r, "sparsity: h = sqrt(2 r ln m)")->capture_default_str();
    index_cmd->add_option("--q", index_q, "query threshold multiplier, h_query = sqrt(2 q r ln m)")
        ->capture_default_str();
    index_cmd->add_option("--kind", kind_name, "gaussian | structured | biased")->capture_default_str();
    index_cmd->add_option("--seed", index_seed, "transform seed")->capture_default_str();

    // search
    auto* search_cmd = app.add_subcommand("search", "Query an index");
    std::string search_index = "index.sphx", search_vectors, query_id, search_format = "json", search_output = "-";
    std::vector<double> query_vector;
    std::optional<std::size_t> top_k;
    std::optional<double> search_lambda, search_q;
    bool nearest = false;
    double search_eta = 1.645;
    std::size_t search_max = 0;
    search_cmd->add_option("--index", search_index, "index file")->capture_default_str()->check(CLI::ExistingFile);
    search_cmd->add_option("--vectors", search_vectors, "vector store (true inner products; query-id re-encoding)")
        ->check(CLI::ExistingFile);
    auto* qid = search_cmd->add_option("--query-id", query_id, "use a stored document as the query");
    auto* qvec = search_cmd->add_option("--query-vector", query_vector, "comma-separated query vector")->delimiter(',');
    qid->excludes(qvec);
    auto* topk_opt = search_cmd->add_option("--top-k", top_k, "top-k cutoff");
    auto* lambda_opt = search_cmd->add_option("--lambda", search_lambda, "threshold cutoff at m mu(lambda)");
    topk_opt->excludes(lambda_opt);
    search_cmd->add_flag("--nearest", nearest, "with --lambda: cut at m mu(lambda - eps_minus)");
    search_cmd->add_option("--eta", search_eta, "normal quantile for --nearest")->capture_default_str();
    search_cmd->add_option("--q", search_q, "query threshold multiplier (default: index h_query)");
    search_cmd->add_option("--max-results", search_max, "cap on returned results (0 = none)");
    search_cmd->add_option("--format", search_format, "json | csv")->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    search_cmd->add_option("--output", search_output, "output file ('-' = stdout)")->capture_default_str();

    // export-tokens
    auto* export_cmd = app.add_subcommand("export-tokens", "Write doc_id<TAB>tokens lines for a text engine");
    std::string export_index = "index.sphx", export_output = "-";
    export_cmd->add_option("--index", export_index, "index file")->capture_default_str()->check(CLI::ExistingFile);
    export_cmd->add_option("--output", export_output, "token file")->capture_default_str();

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo experiment");
    ExperimentSpec sim;
    std::string sim_mode = "type1", sim_kind = "gaussian", sim_output;
    std::optional<std::size_t> sim_d;
    std::vector<std::uint32_t> sim_m;
    std::vector<double> sim_r;
    std::optional<double> sim_h;
    sim_cmd->add_option("--mode", sim_mode, "type1 | type2 | cdf | sparsity | phase | domination")
        ->capture_default_str();
    sim_cmd->add_option("--kind", sim_kind, "gaussian | structured | biased")->capture_default_str();
    sim_cmd->add_option("--d", sim_d, "input dimension (default 2 gaussian, 100 structured)");
    sim_cmd->add_option("--m", sim_m, "code length(s), comma-separated")->delimiter(',');
    sim_cmd->add_option("--r", sim_r, "sparsity parameter(s), comma-separated")->delimiter(',');
    sim_cmd->add_option("--lambda", sim.lambda, "inner product (domination: lower one)")->capture_default_str();
    sim_cmd->add_option("--lambda-hi", sim.lambda_hi, "domination: upper inner product")->capture_default_str();
    sim_cmd->add_option("--threshold-h", sim_h, "domination: threshold h (default from r)");
    sim_cmd->add_option("--eta", sim.eta, "normal quantile")->capture_default_str();
    sim_cmd->add_option("--trials", sim.trials, "transform redraws")->capture_default_str();
    sim_cmd->add_option("--seed", sim.seed, "seed")->capture_default_str();
    sim_cmd->add_option("--threads", sim.threads, "worker threads")->capture_default_str();
    sim_cmd->add_option("--output", sim_output, "write <output>.json and <output>.csv (default: JSON to stdout)");

    // tabulate
    auto* tab_cmd = app.add_subcommand("tabulate", "Analytic mu, sigma, epsilon and bound tables");
    std::vector<std::uint32_t> tab_m{1u << 14, 1u << 16, 1u << 18, 1u << 20};
    std::vector<double> tab_r{0.45};
    double tab_lambda = 0.9, tab_eta = 1.645;
    std::string tab_output = "-", tab_csv;
    tab_cmd->add_option("--m", tab_m, "code length(s)")->delimiter(',')->capture_default_str();
    tab_cmd->add_option("--r", tab_r, "sparsity parameter(s)")->delimiter(',')->capture_default_str();
    tab_cmd->add_option("--lambda", tab_lambda, "inner product")->capture_default_str();
    tab_cmd->add_option("--eta", tab_eta, "normal quantile")->capture_default_str();
    tab_cmd->add_option("--output", tab_output, "JSON output ('-' = stdout)")->capture_default_str();
    tab_cmd->add_option("--csv", tab_csv, "also write the table as CSV");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Precision/recall curve and error events over a corpus");
    std::string eval_index = "index.sphx", eval_vectors, eval_queries, eval_output = "-", eval_csv;
    std::vector<double> eval_thresholds{0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95};
    std::optional<double> eval_lambda;
    double eval_eta = 1.645;
    unsigned eval_threads = 1;
    eval_cmd->add_option("--index", eval_index, "index file")->capture_default_str()->check(CLI::ExistingFile);
    eval_cmd->add_option("--vectors", eval_vectors, "vector store the index was built from")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--queries", eval_queries, "query vectors")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--thresholds", eval_thresholds, "T grid")->delimiter(',')->capture_default_str();
    eval_cmd->add_option("--lambda", eval_lambda, "also count type I/II events at this lambda");
    eval_cmd->add_option("--eta", eval_eta, "normal quantile for the epsilon bands")->capture_default_str();
    eval_cmd->add_option("--threads", eval_threads, "worker threads")->capture_default_str();
    eval_cmd->add_option("--output", eval_output, "JSON output ('-' = stdout)")->capture_default_str();
    eval_cmd->add_option("--csv", eval_csv, "PR curve CSV");

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "HTTP search service");
    ServiceConfig serve;
    serve.index_path = "index.sphx";
    serve_cmd->add_option("--index", serve.index_path, "index file")->capture_default_str()->check(CLI::ExistingFile);
    serve_cmd->add_option("--vectors", serve.vectors_path, "vector store")->check(CLI::ExistingFile);
    serve_cmd->add_option("--host", serve.host, "bind address")->capture_default_str();
    serve_cmd->add_option("--port", serve.port, "port")->capture_default_str();
    serve_cmd->add_option("--max-results", serve.max_results, "result cap")->capture_default_str();
    serve_cmd->add_option("--cors", serve.cors_allowlist, "allowed origins")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        detail::print_error(err, "UsageError", e.what());
        return exit_usage_error;
    }

    try {
        if (ingest->parsed()) {
            if (ingest_input.empty() == ingest_series.empty()) {
                detail::print_error(err, "UsageError", "give exactly one of --input or --series");
                return exit_usage_error;
            }
            Corpus corpus;
            if (!ingest_input.empty()) {
                corpus = load_vectors_file(ingest_input);
            } else {
                std::ifstream in(ingest_series);
                corpus = normalize_corpus(window_series(read_series(in), half_window));
            }
            std::ostringstream body;
            save_vectors(body, corpus, format_for_path(ingest_output));
            detail::write_text(ingest_output, body.str(), out);
            if (ingest_output != "-") {
                out << nlohmann::json{{"n", corpus.size()}, {"d", corpus.d}, {"output", ingest_output}}.dump() << '\n';
            }
            return exit_ok;
        }

        if (index_cmd->parsed()) {
            const auto corpus = load_vectors_file(index_vectors);
            if (corpus.size() == 0) {
                fail(Errc::EmptyInput, "vector store is empty");
            }
            const auto config = IndexConfig::from_params(index_m, index_r, index_q, parse_transform_kind(kind_name),
                                                         static_cast<std::uint32_t>(corpus.d), index_seed);
            const auto transform = config.make_transform();
            auto codes = map_vectors(transform, corpus.vectors, config.h_index);
            std::vector<std::pair<std::string, SparseCode>> docs;
            docs.reserve(codes.size());
            for (std::size_t i = 0; i < codes.size(); ++i) {
                docs.emplace_back(corpus.ids[i], std::move(codes[i]));
            }
            const auto index = build_index(std::move(docs), config);
            save_index_file(index, index_output);
            auto cfg = to_json(config);
            cfg["q"] = index_q;
            out << detail::artifact("index", cfg, {{"output", index_output}, {"stats", to_json(index_stats(index))}})
                       .dump(2)
                << '\n';
            return exit_ok;
        }

        if (search_cmd->parsed()) {
            if (detail::missing_file(search_index, err)) {
                return exit_usage_error;
            }
            if (query_id.empty() && query_vector.empty()) {
                detail::print_error(err, "UsageError", "give --query-id or --query-vector");
                return exit_usage_error;
            }
            if (nearest && !search_lambda) {
                detail::print_error(err, "UsageError", "--nearest needs --lambda");
                return exit_usage_error;
            }
            std::optional<Corpus> vectors;
            if (!search_vectors.empty()) {
                vectors = load_vectors_file(search_vectors);
            }
            const SearchService service(load_index_file(search_index), std::move(vectors), search_max);
            nlohmann::json request;
            if (!query_id.empty()) {
                request["doc_id"] = query_id;
            } else {
                request["vector"] = query_vector;
            }
            if (search_lambda) {
                request["mode"] = nearest ? "nearest" : "threshold";
                request["lambda"] = *search_lambda;
                request["eta"] = search_eta;
            } else {
                request["mode"] = "top_k";
                request["k"] = top_k.value_or(10);
            }
            if (search_q) {
                request["q"] = *search_q;
            }
            const auto response = service.handle_search(request);
            if (response.status != 200) {
                err << response.body.dump() << '\n';
                return exit_module_error;
            }
            nlohmann::json config = {{"index", search_index}, {"request", request},
                                     {"index_config", to_json(service.index().config())}};
            if (search_format == "json") {
                detail::write_text(search_output, detail::artifact("search", config, response.body).dump(2) + "\n", out);
            } else {
                std::ostringstream csv;
                csv << detail::csv_config_line(config) << "rank,doc_id,raw_count,score,true_inner\n";
                std::size_t rank = 1;
                for (const auto& r : response.body["results"]) {
                    csv << rank++ << ',' << r["doc_id"].get<std::string>() << ',' << r["raw_count"].get<std::uint32_t>()
                        << ',' << format_double(r["score"].get<double>()) << ','
                        << (r.contains("true_inner") ? format_double(r["true_inner"].get<double>()) : "") << '\n';
                }
                detail::write_text(search_output, csv.str(), out);
            }
            return exit_ok;
        }

        if (export_cmd->parsed()) {
            if (detail::missing_file(export_index, err)) {
                return exit_usage_error;
            }
            const auto index = load_index_file(export_index);
            const auto codes = index.document_codes();
            std::string text;
            for (std::uint32_t doc = 0; doc < index.size(); ++doc) {
                text += index.doc_id(doc) + "\t" + export_tokens(codes[doc]) + "\n";
            }
            detail::write_text(export_output, text, out);
            return exit_ok;
        }

        if (sim_cmd->parsed()) {
            sim.mode = parse_experiment_mode(sim_mode);
            sim.kind = parse_transform_kind(sim_kind);
            sim.d = sim_d.value_or(ExperimentSpec::default_d(sim.kind));
            if (!sim_m.empty()) sim.m_grid = sim_m;
            if (!sim_r.empty()) sim.r_grid = sim_r;
            sim.h = sim_h;
            const auto report = run_experiment(sim);
            const auto json = detail::artifact("simulate", to_json(sim), to_json(report));
            if (sim_output.empty()) {
                out << json.dump(2) << '\n';
            } else {
                detail::write_text(sim_output + ".json", json.dump(2) + "\n", out);
                std::ostringstream csv;
                csv << detail::csv_config_line(to_json(sim));
                write_report_csv(csv, report);
                detail::write_text(sim_output + ".csv", csv.str(), out);
                out << nlohmann::json{{"all_pass", report.all_pass()}, {"cells", report.cells.size()},
                                      {"output", sim_output}}.dump()
                    << '\n';
            }
            return exit_ok;
        }

        if (tab_cmd->parsed()) {
            const nlohmann::json config = {{"m", tab_m}, {"r", tab_r}, {"lambda", tab_lambda}, {"eta", tab_eta}};
            const auto table = tabulate(tab_m, tab_r, tab_lambda, tab_eta);
            detail::write_text(tab_output, detail::artifact("tabulate", config, table).dump(2) + "\n", out);
            if (!tab_csv.empty()) {
                std::ostringstream csv;
                csv << detail::csv_config_line(config);
                write_tabulate_csv(csv, table);
                detail::write_text(tab_csv, csv.str(), out);
            }
            return exit_ok;
        }

        if (eval_cmd->parsed()) {
            if (detail::missing_file(eval_index, err)) {
                return exit_usage_error;
            }
            const auto index = load_index_file(eval_index);
            const auto corpus = load_vectors_file(eval_vectors);
            const auto queries = load_vectors_file(eval_queries);
            const EvalSetup setup(index, corpus);
            const auto points = pr_curve(setup, queries, eval_thresholds, eval_threads);
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& p : points) {
                rows.push_back({{"threshold", p.threshold},
                                {"precision", p.precision},
                                {"recall", p.recall},
                                {"se_precision", p.se_precision},
                                {"se_recall", p.se_recall},
                                {"queries", p.queries},
                                {"empty_retrieved", p.empty_retrieved},
                                {"empty_relevant", p.empty_relevant}});
            }
            nlohmann::json result = {{"pr_curve", rows}, {"pr_area", pr_area(points)}};
            if (eval_lambda) {
                const auto& cfg = index.config();
                const auto eps = solve_epsilons(*eval_lambda, cfg.m, cfg.r, eval_eta);
                const auto transform = cfg.make_transform();
                const auto qcodes = map_vectors(transform, queries.vectors, cfg.h_query);
                ErrorCounts total;
                nlohmann::json per_query = nlohmann::json::array();
                for (std::size_t q = 0; q < queries.size(); ++q) {
                    const auto c = query_error_events(setup, qcodes[q], queries.vectors[q], *eval_lambda, eps);
                    total += c;
                    per_query.push_back({{"query", queries.ids[q]}, {"type_I", c.type_I}, {"type_II", c.type_II},
                                         {"gray", c.gray}, {"gray_retrieved", c.gray_retrieved},
                                         {"correct", c.correct}});
                }
                result["error_events"] = {{"lambda", *eval_lambda},
                                          {"eps_minus", eps.minus ? nlohmann::json(*eps.minus) : nlohmann::json()},
                                          {"eps_plus", eps.plus ? nlohmann::json(*eps.plus) : nlohmann::json()},
                                          {"type_I", total.type_I},
                                          {"type_II", total.type_II},
                                          {"gray", total.gray},
                                          {"gray_retrieved", total.gray_retrieved},
                                          {"correct", total.correct},
                                          {"per_query", per_query}};
            }
            const nlohmann::json config = {{"index", eval_index},
                                           {"vectors", eval_vectors},
                                           {"queries", eval_queries},
                                           {"thresholds", eval_thresholds},
                                           {"eta", eval_eta},
                                           {"index_config", to_json(index.config())}};
            detail::write_text(eval_output, detail::artifact("eval", config, result).dump(2) + "\n", out);
            if (!eval_csv.empty()) {
                std::ostringstream csv;
                csv << detail::csv_config_line(config);
                write_pr_csv(csv, points);
                detail::write_text(eval_csv, csv.str(), out);
            }
            return exit_ok;
        }

        if (serve_cmd->parsed()) {
            if (detail::missing_file(serve.index_path, err)) {
                return exit_usage_error;
            }
            err << nlohmann::json{{"serving", serve.host + ":" + std::to_string(serve.port)}}.dump() << '\n';
            run_service(serve);
            return exit_ok;
        }
    } catch (const Error& e) {
        detail::print_error(err, to_string(e.code()), e.what());
        return exit_module_error;
    } catch (const std::exception& e) {
        detail::print_error(err, "InternalError", e.what());
        return exit_module_error;
    }
    detail::print_error(err, "UsageError", "no subcommand");
    return exit_usage_error;
}

}  // namespace sphx::cli
