// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass a list of criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sphx/analysis.hpp"
#include "sphx/corpus.hpp"
#include "sphx/evaluate.hpp"
#include "sphx/index.hpp"
#include "sphx/index_io.hpp"
#include "sphx/simulate.hpp"

using namespace sphx;

namespace {

struct Check {
    bool ok = true;
    static void print(const char* fmt, auto... args)
    {
        if constexpr (sizeof...(args) == 0) {
            std::fputs(fmt, stdout);
        } else {
            std::printf(fmt, args...);
        }
        std::fputc('\n', stdout);
    }
    void require(bool cond, const char* fmt, auto... args)
    {
        std::fputs(cond ? "    ok    " : "    MISS  ", stdout);
        print(fmt, args...);
        ok = ok && cond;
    }
    void info(const char* fmt, auto... args)
    {
        std::fputs("    info  ", stdout);
        print(fmt, args...);
    }
};

const unsigned threads = default_threads();

// 1. mu quadrature vs 10^7-sample Monte Carlo; closed forms at lambda = 0, 1.
bool mu_oracle(Check& c)
{
    const double lambdas[] = {-0.9, -0.5, 0.0, 0.3, 0.6, 0.9};
    const double hs[] = {0.0, 1.0, 2.0, 3.33};
    const std::size_t n = 10'000'000;
    for (double lambda : lambdas) {
        // one sample of pairs per lambda, counted at every h
        std::mt19937_64 gen(derive_seed(1001, static_cast<std::uint64_t>((lambda + 1) * 100)));
        std::normal_distribution<double> z;
        const double s = std::sqrt(1 - lambda * lambda);
        std::size_t hits[4] = {};
        for (std::size_t i = 0; i < n; ++i) {
            const double w = z(gen);
            const double v = lambda * w + s * z(gen);
            const double lo = std::min(w, v);
            for (int j = 0; j < 4; ++j) hits[j] += lo >= hs[j] ? 1 : 0;
        }
        for (int j = 0; j < 4; ++j) {
            const double mu = mean_score(lambda, hs[j]);
            const double se = std::sqrt(mu * (1 - mu) / n);
            const double p = static_cast<double>(hits[j]) / n;
            c.require(std::abs(p - mu) <= 4 * se, "lambda=%5.2f h=%4.2f  mu=%.6e  mc=%.6e  |d|/se=%.2f", lambda, hs[j],
                      mu, p, se > 0 ? std::abs(p - mu) / se : 0.0);
        }
    }
    for (double h : hs) {
        const double tail = oracle::normal_sf(h);
        c.require(std::abs(mean_score(0.0, h) - tail * tail) <= 1e-10, "mu(0, %.2f) = tail^2", h);
        c.require(std::abs(mean_score(1.0, h) - tail) <= 1e-10, "mu(1, %.2f) = tail", h);
    }
    return c.ok;
}

// 2. Sparsity law.
bool sparsity(Check& c)
{
    ExperimentSpec g;
    g.mode = ExperimentMode::Sparsity;
    g.kind = TransformKind::Gaussian;
    g.d = 2;
    g.m_grid = {1u << 10, 1u << 11, 1u << 12, 1u << 13, 1u << 14, 1u << 15, 1u << 16};
    g.r_grid = {0.25, 0.5, 0.75};
    g.trials = 200;
    g.seed = 2002;
    g.threads = threads;
    for (const auto& cell : run_experiment(g).cells) {
        c.require(cell.pass.value_or(false), "gaussian   m=2^%-2d r=%.2f  mean k=%9.3f  theory=%9.3f  3se=%.3f",
                  static_cast<int>(std::log2(cell.m)), cell.r, cell.empirical, cell.theory, cell.tolerance);
    }
    auto s = g;
    s.kind = TransformKind::Structured;
    s.d = 100;
    s.m_grid = {1u << 12, 1u << 13, 1u << 14, 1u << 15, 1u << 16};
    s.trials = 20000;
    for (const auto& cell : run_experiment(s).cells) {
        c.require(cell.pass.value_or(false), "structured m=2^%-2d r=%.2f  mean k=%9.3f  theory=%9.3f  rel=%.4f",
                  static_cast<int>(std::log2(cell.m)), cell.r, cell.empirical, cell.theory,
                  std::abs(cell.empirical / cell.theory - 1));
    }
    const auto spot = expected_sparsity(65536, 0.5);
    c.info("spot m=2^16 r=0.5: E k = %.3f (erfc oracle %.3f)", spot.exact, 65536 * oracle::normal_sf(threshold_h(65536, 0.5)));
    return c.ok;
}

// 3. ||F D x||^2 = m exactly for the structured map.
bool norm_identity(Check& c)
{
    for (std::uint32_t m : {1u << 8, 1u << 14}) {
        double worst = 0.0;
        for (std::uint64_t i = 0; i < 100; ++i) {
            auto engine = make_engine(3003, i);
            const auto x = random_unit(100, engine);
            const auto t = Transform::make(TransformKind::Structured, 100, m, 3003 + i);
            const auto v = t.apply(x);
            long double sq = 0;
            for (double a : v.values) sq += static_cast<long double>(a) * a;
            worst = std::max(worst, std::abs(static_cast<double>(sq) - m));
        }
        c.require(worst <= 1e-9 * m, "m=%u  max | ||FDx||^2 - m | = %.3e", m, worst);
    }
    return c.ok;
}

// 4. Type I / II rates in the band, Gaussian and Structured; biased asymmetry.
bool error_rates(Check& c)
{
    auto spec_for = [](TransformKind kind, ExperimentMode mode) {
        ExperimentSpec s;
        s.mode = mode;
        s.kind = kind;
        s.d = ExperimentSpec::default_d(kind);
        s.m_grid = {1u << 16};
        s.r_grid = {0.45};
        s.lambda = 0.9;
        s.eta = 1.645;
        s.trials = 20000;
        s.seed = 4004;
        s.threads = threads;
        return s;
    };
    for (auto kind : {TransformKind::Gaussian, TransformKind::Structured}) {
        for (auto mode : {ExperimentMode::TypeI, ExperimentMode::TypeII}) {
            const auto cell = run_experiment(spec_for(kind, mode)).cells.at(0);
            c.require(cell.pass.value_or(false), "%-10s %s  rate=%.4f  target=%.4f  tol=%.4f (se=%.4f)",
                      std::string(to_string(kind)).c_str(), std::string(to_string(mode)).c_str(), cell.empirical,
                      cell.theory, cell.tolerance, cell.se);
        }
    }
    const auto b1 = run_experiment(spec_for(TransformKind::BiasedStructured, ExperimentMode::TypeI)).cells.at(0);
    const auto b2 = run_experiment(spec_for(TransformKind::BiasedStructured, ExperimentMode::TypeII)).cells.at(0);
    const double combined = std::sqrt(b1.se * b1.se + b2.se * b2.se);
    const double gap = std::abs(b1.empirical - b2.empirical);
    c.require(gap > 5 * combined, "biased     type1=%.4f type2=%.4f  |diff|=%.4f  5*combined se=%.4f", b1.empirical,
              b2.empirical, gap, 5 * combined);
    return c.ok;
}

// 5. Berry-Esseen CDF gap.
bool cdf_gap(Check& c)
{
    ExperimentSpec s;
    s.mode = ExperimentMode::ScoreCDF;
    s.kind = TransformKind::Gaussian;
    s.d = 2;
    s.m_grid = {1u << 16};
    s.r_grid = {0.45};
    s.lambda = 0.9;
    s.trials = 20000;
    s.seed = 5005;
    s.threads = threads;
    const auto cell = run_experiment(s).cells.at(0);
    c.require(cell.pass.value_or(false), "sup |F - Phi| = %.4f at t=%.3f  bound=%.4f (BE %.4f + 3 DKW %.4f)",
              cell.empirical, cell.t, cell.tolerance, cell.tolerance - 3 * cell.se, 3 * cell.se);
    return c.ok;
}

// 6. Vanishing phase: P(S != 0) <= m mu, decreasing in m.
bool phase(Check& c)
{
    ExperimentSpec s;
    s.mode = ExperimentMode::PhaseTransition;
    s.kind = TransformKind::Gaussian;
    s.d = 2;
    s.m_grid = {1u << 14, 1u << 16, 1u << 18};
    s.r_grid = {0.5};
    s.lambda = -0.2;
    s.trials = 20000;
    s.seed = 6006;
    s.threads = threads;
    const auto rep = run_experiment(s);
    for (const auto& cell : rep.cells) {
        c.require(cell.pass.value_or(false), "m=2^%d  P(S!=0)=%.5f (se %.5f)  m*mu=%.5f",
                  static_cast<int>(std::log2(cell.m)), cell.empirical, cell.se, cell.theory);
    }
    for (std::size_t i = 1; i < rep.cells.size(); ++i) {
        const auto& a = rep.cells[i - 1];
        const auto& b = rep.cells[i];
        c.require(b.theory < a.theory, "m*mu decreasing: %.5f -> %.5f", a.theory, b.theory);
        const double allowance = 3 * std::sqrt(a.se * a.se + b.se * b.se);
        c.require(b.empirical <= a.empirical + allowance, "rate non-increasing within 3 combined se: %.5f -> %.5f",
                  a.empirical, b.empirical);
    }
    return c.ok;
}

// 7. Engine vs brute-force scoring, all cutoff modes; persistence.
bool index_equivalence(Check& c)
{
    const auto corpus = uniform_corpus(1000, 32, 7007);
    const auto config = IndexConfig::from_params(1u << 14, 0.3, 1.0, TransformKind::Structured, 32, 7007);
    const auto t = config.make_transform();
    const auto codes = map_vectors(t, corpus.vectors, config.h_index);
    std::vector<std::pair<std::string, SparseCode>> docs;
    for (std::size_t i = 0; i < codes.size(); ++i) docs.emplace_back(corpus.ids[i], codes[i]);
    const auto index = build_index(docs, config);
    const auto loaded = load_index(save_index(index));
    c.require(loaded == index, "save/load round trip identical");

    // brute force works on codes in index doc order
    std::vector<SparseCode> by_doc(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) by_doc[*index.find(corpus.ids[i])] = codes[i];

    // queries: half perturbed corpus members, half fresh
    auto engine = make_engine(7007, 99);
    std::vector<UnitVector> queries;
    for (int i = 0; i < 25; ++i) queries.push_back(vector_at_inner_product(corpus.vectors[i * 37], 0.85, engine));
    for (int i = 0; i < 25; ++i) queries.push_back(random_unit(32, engine));

    std::size_t compared = 0, mismatched = 0, results = 0;
    auto same = [&](const std::vector<SearchResult>& got, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& want) {
        ++compared;
        results += got.size();
        bool eq = got.size() == want.size();
        for (std::size_t i = 0; eq && i < got.size(); ++i) {
            eq = got[i].doc == want[i].first && got[i].raw_count == want[i].second &&
                 got[i].score == want[i].second / static_cast<double>(config.m);
        }
        mismatched += eq ? 0 : 1;
    };
    for (const auto& q : queries) {
        const auto qc = map_vector(t, q, config.h_query);
        for (const auto* idx : {&index, &loaded}) {
            for (double lambda : {0.0, 0.3, 0.5, 0.7, 0.9}) {
                const double cut = config.m * mean_score(lambda, config.h_index);
                same(search(*idx, qc, Cutoff::threshold(lambda)),
                     oracle::brute_force(by_doc, qc, [&](std::uint32_t n) { return n >= cut; }));
            }
            const auto near = resolve_cutoff(config, Cutoff::nearest(0.8));
            same(search(*idx, qc, Cutoff::nearest(0.8)),
                 oracle::brute_force(by_doc, qc, [&](std::uint32_t n) { return n >= near.count; }));
            for (std::size_t k : {1u, 10u, 100u}) {
                auto want = oracle::brute_force(by_doc, qc, [](std::uint32_t) { return true; });
                want.resize(k);
                same(search(*idx, qc, Cutoff::top_k(k)), want);
            }
        }
    }
    c.require(mismatched == 0, "%zu result lists (%zu results) compared, %zu mismatched", compared, results, mismatched);
    return c.ok;
}

// 8. Epsilon solver consistency.
bool epsilon_consistency(Check& c)
{
    const double lambda = 0.9, r = 0.45, eta = 1.645;
    double prev_minus = 2, prev_plus = 2;
    for (int k = 14; k <= 20; ++k) {
        const double m = std::ldexp(1.0, k);
        const auto sol = solve_epsilons(lambda, m, r, eta);
        if (!sol.complete()) {
            c.require(false, "m=2^%d: no solution", k);
            continue;
        }
        c.require(std::abs(sol.residual_minus) <= 1e-8 && std::abs(sol.residual_plus) <= 1e-8,
                  "m=2^%d  eps-=%.6f eps+=%.6f  residuals %.1e %.1e", k, *sol.minus, *sol.plus, sol.residual_minus,
                  sol.residual_plus);
        c.require(*sol.minus < prev_minus && *sol.plus < prev_plus, "m=2^%d  decreasing", k);
        prev_minus = *sol.minus;
        prev_plus = *sol.plus;
        if (k == 20) {
            const double asym = epsilon_asymptotic(lambda, m, r, eta);
            const double q1 = asym / *sol.minus, q2 = asym / *sol.plus;
            c.require(q1 >= 0.5 && q1 <= 2 && q2 >= 0.5 && q2 <= 2,
                      "m=2^20  closed form %.5f: ratio to eps- %.3f, to eps+ %.3f (factor 2)", asym, q1, q2);
        }
    }
    return c.ok;
}

// 9. Mean precision/recall area on a planted-cluster corpus.
bool retrieval_quality(Check& c)
{
    ClusteredCorpusSpec spec;
    spec.n = 5000;
    spec.d = 128;
    spec.clusters = 50;
    spec.members = 20;
    spec.lambda_lo = 0.85;
    spec.lambda_hi = 0.95;
    spec.seed = 9009;
    const auto cc = clustered_corpus(spec);
    const auto config = IndexConfig::from_params(1u << 16, 0.45, 1.0, TransformKind::Structured, 128, 9009);
    const auto t = config.make_transform();
    const auto codes = map_vectors(t, cc.corpus.vectors, config.h_index);
    std::vector<std::pair<std::string, SparseCode>> docs;
    for (std::size_t i = 0; i < codes.size(); ++i) docs.emplace_back(cc.corpus.ids[i], codes[i]);
    const auto index = build_index(std::move(docs), config);
    const EvalSetup setup(index, cc.corpus);

    // Full grid for the record. Below T ~ 0.35 the cut m mu(T) is under one
    // shared coordinate (Poisson regime) and background floods in; above
    // ~0.78 T cuts through the cluster's own spread [0.85, 0.95], finer than
    // eps at this m. Neither end probes the planted structure.
    std::vector<double> full;
    for (int i = 1; i <= 19; ++i) full.push_back(0.05 * i);
    const auto all_points = pr_curve(setup, cc.centers, full, threads);
    for (const auto& p : all_points) {
        c.info("T=%.2f  m*mu(T)=%7.3f  precision=%.4f (se %.4f)  recall=%.4f (se %.4f)", p.threshold,
               config.m * mean_score(p.threshold, config.h_index), p.precision, p.se_precision, p.recall, p.se_recall);
    }
    c.info("area over the full grid 0.05..0.95 = %.4f", pr_area(all_points));

    // Gate: T between the background (max |<q,b>| ~ 4.5/sqrt(d) = 0.40) and
    // the cluster edge minus eps_minus(0.85) = 0.78.
    std::vector<double> ts;
    for (const auto& p : all_points) {
        if (p.threshold > 0.399 && p.threshold < 0.801) ts.push_back(p.threshold);
    }
    std::vector<PRPoint> points;
    for (const auto& p : all_points) {
        if (std::find(ts.begin(), ts.end(), p.threshold) != ts.end()) points.push_back(p);
    }
    const double area = pr_area(points);
    c.require(area >= 0.95, "area under mean PR curve, T in [0.40, 0.80] = %.4f", area);
    return c.ok;
}

struct Criterion {
    int id;
    const char* name;
    std::function<bool(Check&)> run;
};

}  // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> all = {
        {1, "mu oracle agreement", mu_oracle},
        {2, "sparsity law", sparsity},
        {3, "structured norm identity", norm_identity},
        {4, "type I/II error band", error_rates},
        {5, "Berry-Esseen CDF check", cdf_gap},
        {6, "phase transition", phase},
        {7, "index-oracle equivalence", index_equivalence},
        {8, "epsilon consistency", epsilon_consistency},
        {9, "retrieval quality", retrieval_quality},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& cr : all) {
        if (!only.empty() && !only.count(cr.id)) continue;
        std::printf("criterion %d: %s\n", cr.id, cr.name);
        std::fflush(stdout);
        const auto start = std::chrono::steady_clock::now();
        Check check;
        bool ok = false;
        try {
            ok = cr.run(check);
        } catch (const std::exception& e) {
            std::printf("    error %s\n", e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %d: %s (%.1fs)\n", ok ? "PASS" : "FAIL", cr.id, cr.name, secs);
        std::fflush(stdout);
        failed += ok ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
