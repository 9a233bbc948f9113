#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sphx/analysis.hpp"
#include "sphx/corpus.hpp"
#include "sphx/embedding.hpp"
#include "sphx/error.hpp"
#include "sphx/parallel.hpp"
#include "sphx/rng.hpp"
#include "sphx/sampling.hpp"

namespace sphx {

// Monte Carlo experiments. A trial redraws the transform (seed derived from
// (spec.seed, trial)) and keeps the input vectors fixed, so any trial can be
// reproduced alone and parallel runs equal serial ones.

enum class ExperimentMode { TypeI, TypeII, ScoreCDF, Sparsity, PhaseTransition, Domination };

constexpr std::string_view to_string(ExperimentMode mode) noexcept
{
    switch (mode) {
    case ExperimentMode::TypeI: return "type1";
    case ExperimentMode::TypeII: return "type2";
    case ExperimentMode::ScoreCDF: return "cdf";
    case ExperimentMode::Sparsity: return "sparsity";
    case ExperimentMode::PhaseTransition: return "phase";
    case ExperimentMode::Domination: return "domination";
    }
    return "unknown";
}

inline ExperimentMode parse_experiment_mode(std::string_view name)
{
    for (auto mode : {ExperimentMode::TypeI, ExperimentMode::TypeII, ExperimentMode::ScoreCDF, ExperimentMode::Sparsity,
                      ExperimentMode::PhaseTransition, ExperimentMode::Domination}) {
        if (name == to_string(mode)) {
            return mode;
        }
    }
    fail(Errc::InvalidParams, "unknown experiment mode '" + std::string(name) + "'");
}

struct ExperimentSpec {
    ExperimentMode mode = ExperimentMode::TypeI;
    TransformKind kind = TransformKind::Gaussian;
    std::size_t d = 2;
    std::vector<std::uint32_t> m_grid{1u << 16};
    std::vector<double> r_grid{0.45};
    double lambda = 0.9;
    double lambda_hi = 0.9;           ///< domination only (lambda is the lower one)
    std::optional<double> h;          ///< domination only; otherwise h = sqrt(2 r ln m)
    double eta = 1.645;
    std::size_t trials = 1000;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    /// Gaussian runs use d = 2, structured ones a dense d = 100 input.
    static std::size_t default_d(TransformKind kind) { return kind == TransformKind::Gaussian ? 2 : 100; }

    void validate() const
    {
        if (trials < 1) {
            fail(Errc::InvalidParams, "trials must be >= 1");
        }
        if (m_grid.empty() || r_grid.empty()) {
            fail(Errc::InvalidParams, "m and r grids must be non-empty");
        }
        if (d < 1) {
            fail(Errc::InvalidDimensions, "d must be >= 1");
        }
    }
};

inline nlohmann::json to_json(const ExperimentSpec& s)
{
    nlohmann::json j = {{"mode", std::string(to_string(s.mode))},
                        {"kind", std::string(to_string(s.kind))},
                        {"d", s.d},
                        {"m_grid", s.m_grid},
                        {"r_grid", s.r_grid},
                        {"lambda", s.lambda},
                        {"eta", s.eta},
                        {"trials", s.trials},
                        {"seed", s.seed}};
    if (s.mode == ExperimentMode::Domination) {
        j["lambda_hi"] = s.lambda_hi;
        j["h"] = s.h ? nlohmann::json(*s.h) : nlohmann::json(nullptr);
    }
    return j;
}

/// One grid cell. Rate cells carry se = sqrt(p(1-p)/trials).
struct ReportCell {
    std::string statistic;
    TransformKind kind = TransformKind::Gaussian;
    std::uint32_t m = 0;
    double r = 0.0;
    double h = 0.0;
    double lambda = 0.0;   ///< inner product the trials were run at
    double t = 0.0;        ///< domination: count threshold; cdf: arg of the sup
    std::size_t trials = 0;
    double empirical = 0.0;
    double se = 0.0;
    double theory = 0.0;
    double tolerance = 0.0;
    std::optional<bool> pass;  ///< empty = no assertion for this cell
    std::string note;
};

struct ExperimentReport {
    ExperimentSpec spec;
    std::vector<ReportCell> cells;

    [[nodiscard]] bool all_pass() const
    {
        return std::all_of(cells.begin(), cells.end(), [](const ReportCell& c) { return c.pass.value_or(true); });
    }
};

inline nlohmann::json to_json(const ReportCell& c)
{
    return {{"statistic", c.statistic},
            {"kind", std::string(to_string(c.kind))},
            {"m", c.m},
            {"r", c.r},
            {"h", c.h},
            {"lambda", c.lambda},
            {"t", c.t},
            {"trials", c.trials},
            {"empirical", c.empirical},
            {"se", c.se},
            {"theory", c.theory},
            {"tolerance", c.tolerance},
            {"pass", c.pass ? nlohmann::json(*c.pass) : nlohmann::json(nullptr)},
            {"note", c.note}};
}

inline nlohmann::json to_json(const ExperimentReport& r)
{
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.cells) {
        cells.push_back(to_json(c));
    }
    return {{"spec", to_json(r.spec)}, {"cells", cells}, {"all_pass", r.all_pass()}};
}

inline void write_report_csv(std::ostream& out, const ExperimentReport& r)
{
    out << "statistic,kind,m,r,h,lambda,t,trials,empirical,se,theory,tolerance,pass,note\n";
    for (const auto& c : r.cells) {
        out << c.statistic << ',' << to_string(c.kind) << ',' << c.m << ',' << format_double(c.r) << ','
            << format_double(c.h) << ',' << format_double(c.lambda) << ',' << format_double(c.t) << ',' << c.trials
            << ',' << format_double(c.empirical) << ',' << format_double(c.se) << ',' << format_double(c.theory)
            << ',' << format_double(c.tolerance) << ',' << (c.pass ? (*c.pass ? "true" : "false") : "") << ','
            << c.note << '\n';
    }
}

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

/// x uniform on the sphere, y = lambda x + sqrt(1 - lambda^2) u with u a
/// random unit vector orthogonal to x: a random orthonormal frame.
inline std::pair<UnitVector, UnitVector> pair_with_inner_product(double lambda, std::size_t d, std::uint64_t seed)
{
    if (!(std::abs(lambda) <= 1.0)) {
        fail(Errc::InvalidLambda, "lambda must lie in [-1, 1]");
    }
    if (d < 2) {
        fail(Errc::InvalidDimensions, "pair construction needs d >= 2");
    }
    auto engine = make_engine(seed, stream::pair_frame);
    auto x = random_unit(d, engine);
    auto y = vector_at_inner_product(x, lambda, engine);
    return {std::move(x), std::move(y)};
}

inline std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial)
{
    return derive_seed(seed, stream::trial_base + trial);
}

/// Overlap counts of each vector in `ys` with x under one fresh transform.
inline std::vector<std::uint32_t> trial_overlaps(TransformKind kind, std::uint32_t m, double h, const UnitVector& x,
                                                 std::span<const UnitVector> ys, std::uint64_t transform_seed)
{
    const auto t = Transform::make(kind, x.dim(), m, transform_seed);
    std::vector<UnitVector> batch;
    batch.reserve(ys.size() + 1);
    batch.push_back(x);
    batch.insert(batch.end(), ys.begin(), ys.end());
    const auto proj = t.apply(batch);
    const auto cx = encode(proj[0], h);
    std::vector<std::uint32_t> out;
    out.reserve(ys.size());
    for (std::size_t i = 1; i < proj.size(); ++i) {
        out.push_back(static_cast<std::uint32_t>(overlap_count(cx, encode(proj[i], h))));
    }
    return out;
}

/// Counts for `trials` transform redraws of one (x, y) pair.
inline std::vector<std::uint32_t> overlap_samples(TransformKind kind, std::uint32_t m, double h, const UnitVector& x,
                                                  const UnitVector& y, std::size_t trials, std::uint64_t seed,
                                                  unsigned threads)
{
    std::vector<std::uint32_t> counts(trials);
    const std::array<UnitVector, 1> ys{y};
    parallel_for(trials, threads, [&](std::size_t i) {
        counts[i] = trial_overlaps(kind, m, h, x, ys, trial_seed(seed, i))[0];
    });
    return counts;
}

struct RateEstimate {
    double rate = 0.0;
    double se = 0.0;
};

inline RateEstimate rate_of(std::size_t hits, std::size_t trials)
{
    const double p = static_cast<double>(hits) / static_cast<double>(trials);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials))};
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

/// TypeI: <x,y> = lambda - eps_minus, event count >= m mu(lambda).
/// TypeII: <x,y> = lambda + eps_plus, event count < m mu(lambda).
/// Theory P(N(0,1) >= eta); tolerance 1/sqrt(mu(lambda - eps_minus) m) + 3 se.
inline ExperimentReport run_error_experiment(const ExperimentSpec& spec)
{
    spec.validate();
    if (spec.mode != ExperimentMode::TypeI && spec.mode != ExperimentMode::TypeII) {
        fail(Errc::InvalidParams, "error experiment needs mode type1 or type2");
    }
    ExperimentReport report{spec, {}};
    for (auto m : spec.m_grid) {
        for (double r : spec.r_grid) {
            if (phase_region(spec.lambda, r) != Phase::Gaussian || !(spec.lambda < 1.0)) {
                fail(Errc::OutOfPhaseRegion, "error experiment needs 2r-1 < lambda < 1");
            }
            const double h = threshold_h(m, r);
            const auto eps = solve_epsilons(spec.lambda, m, r, spec.eta);
            const double eps_minus = require_minus(eps);
            const bool type1 = spec.mode == ExperimentMode::TypeI;
            const double lambda_true = type1 ? spec.lambda - eps_minus : spec.lambda + require_plus(eps);
            const double cutoff = m * mean_score(spec.lambda, h);
            const auto [x, y] = pair_with_inner_product(lambda_true, spec.d, spec.seed);
            const auto counts = overlap_samples(spec.kind, m, h, x, y, spec.trials, spec.seed, spec.threads);
            std::size_t hits = 0;
            for (auto c : counts) {
                const bool retrieved = static_cast<double>(c) >= cutoff;
                hits += (type1 == retrieved) ? 1 : 0;
            }
            const auto est = rate_of(hits, spec.trials);
            ReportCell cell;
            cell.statistic = type1 ? "type1_rate" : "type2_rate";
            cell.kind = spec.kind;
            cell.m = m;
            cell.r = r;
            cell.h = h;
            cell.lambda = lambda_true;
            cell.t = cutoff;
            cell.trials = spec.trials;
            cell.empirical = est.rate;
            cell.se = est.se;
            cell.theory = normal_sf(spec.eta);
            const double mu_lo = mean_score(spec.lambda - eps_minus, h);
            cell.tolerance = (mu_lo > 0.0 ? 1.0 / std::sqrt(mu_lo * m) : 1.0) + 3.0 * est.se;
            cell.pass = std::abs(cell.empirical - cell.theory) <= cell.tolerance;
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

/// sup |F_hat - Phi| of the standardized count (c - m mu) / (sigma sqrt(m)),
/// over the t-grid {-3, -2.5, ..., 3} and over every achievable lattice point
/// with |t| <= 3 (both sides of each jump).
struct CdfGap {
    double sup_gap = 0.0;
    double arg = 0.0;
};

inline CdfGap cdf_sup_gap(std::span<const std::uint32_t> counts, double m, double mu)
{
    std::vector<std::uint32_t> sorted(counts.begin(), counts.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    const double scale = sigma_of(mu) * std::sqrt(m);
    const double center = m * mu;
    auto ecdf_le = [&](double c) {  // #{count <= c} / n
        return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), c) - sorted.begin()) / n;
    };
    auto ecdf_lt = [&](double c) {
        return static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), c) - sorted.begin()) / n;
    };
    CdfGap gap;
    auto consider = [&](double t, double f) {
        const double g = std::abs(f - normal_cdf(t));
        if (g > gap.sup_gap) {
            gap.sup_gap = g;
            gap.arg = t;
        }
    };
    for (int i = -6; i <= 6; ++i) {
        const double t = 0.5 * i;
        consider(t, ecdf_le(center + t * scale));
    }
    const auto lo = static_cast<std::int64_t>(std::ceil(std::max(0.0, center - 3.0 * scale)));
    const auto hi = static_cast<std::int64_t>(std::floor(center + 3.0 * scale));
    for (auto c = lo; c <= hi; ++c) {
        const double t = (static_cast<double>(c) - center) / scale;
        consider(t, ecdf_le(static_cast<double>(c)));
        consider(t, ecdf_lt(static_cast<double>(c)));
    }
    return gap;
}

/// Theory 0; tolerance 1/sqrt(mu m) + 3 sqrt(1/(2N)) (DKW units).
inline ExperimentReport run_cdf_experiment(const ExperimentSpec& spec)
{
    spec.validate();
    ExperimentReport report{spec, {}};
    for (auto m : spec.m_grid) {
        for (double r : spec.r_grid) {
            if (phase_region(spec.lambda, r) != Phase::Gaussian) {
                fail(Errc::OutOfPhaseRegion,
                     "score is not asymptotically normal for lambda <= 2r-1; run the phase experiment instead");
            }
            const double h = threshold_h(m, r);
            const double mu = mean_score(spec.lambda, h);
            ReportCell cell;
            cell.statistic = "cdf_sup_gap";
            cell.kind = spec.kind;
            cell.m = m;
            cell.r = r;
            cell.h = h;
            cell.lambda = spec.lambda;
            cell.trials = spec.trials;
            cell.theory = 0.0;
            if (spec.trials < 2) {
                cell.note = "insufficient sample";
                report.cells.push_back(std::move(cell));
                continue;
            }
            const auto [x, y] = pair_with_inner_product(spec.lambda, spec.d, spec.seed);
            const auto counts = overlap_samples(spec.kind, m, h, x, y, spec.trials, spec.seed, spec.threads);
            const auto gap = cdf_sup_gap(counts, m, mu);
            cell.empirical = gap.sup_gap;
            cell.t = gap.arg;
            cell.se = std::sqrt(1.0 / (2.0 * static_cast<double>(spec.trials)));
            cell.tolerance = berry_esseen_bound(mu, m).bound + 3.0 * cell.se;
            cell.pass = cell.empirical <= cell.tolerance;
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

/// P(S != 0) below the phase boundary, against the Markov bound m mu(lambda).
inline ExperimentReport run_phase_experiment(const ExperimentSpec& spec)
{
    spec.validate();
    ExperimentReport report{spec, {}};
    for (double r : spec.r_grid) {
        if (!(spec.lambda < 2.0 * r - 1.0)) {
            fail(Errc::OutOfPhaseRegion, "phase experiment needs lambda < 2r-1");
        }
    }
    for (auto m : spec.m_grid) {
        for (double r : spec.r_grid) {
            const double h = threshold_h(m, r);
            const auto [x, y] = pair_with_inner_product(spec.lambda, spec.d, spec.seed);
            const auto counts = overlap_samples(spec.kind, m, h, x, y, spec.trials, spec.seed, spec.threads);
            const auto nonzero = static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c != 0; }));
            const auto est = rate_of(nonzero, spec.trials);
            ReportCell cell;
            cell.statistic = "p_nonzero";
            cell.kind = spec.kind;
            cell.m = m;
            cell.r = r;
            cell.h = h;
            cell.lambda = spec.lambda;
            cell.trials = spec.trials;
            cell.empirical = est.rate;
            cell.se = est.se;
            cell.theory = m * mean_score(spec.lambda, h);
            cell.tolerance = 3.0 * est.se;
            cell.pass = cell.empirical <= cell.theory + cell.tolerance;
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

/// Mean code weight k against m (1 - Phi(h)). Each trial draws a new
/// transform and a new random unit input. Gaussian: within 3 se. Structured
/// kinds: within 5% relative for m >= 2^12 (no assertion below).
inline ExperimentReport run_sparsity_experiment(const ExperimentSpec& spec)
{
    spec.validate();
    ExperimentReport report{spec, {}};
    for (auto m : spec.m_grid) {
        for (double r : spec.r_grid) {
            const double h = threshold_h(m, r);
            std::vector<double> ks(spec.trials);
            parallel_for(spec.trials, spec.threads, [&](std::size_t i) {
                const auto ts = trial_seed(spec.seed, i);
                auto engine = make_engine(ts, stream::input_base);
                const auto x = random_unit(spec.d, engine);
                const auto t = Transform::make(spec.kind, spec.d, m, ts);
                ks[i] = static_cast<double>(map_vector(t, x, h).k());
            });
            double sum = 0.0, sq = 0.0;
            for (double k : ks) {
                sum += k;
                sq += k * k;
            }
            const double n = static_cast<double>(spec.trials);
            ReportCell cell;
            cell.statistic = "mean_k";
            cell.kind = spec.kind;
            cell.m = m;
            cell.r = r;
            cell.h = h;
            cell.trials = spec.trials;
            cell.empirical = sum / n;
            cell.se = spec.trials > 1 ? std::sqrt(std::max(0.0, (sq - n * cell.empirical * cell.empirical) / (n - 1)) / n) : 0.0;
            cell.theory = m * normal_sf(h);
            if (spec.kind == TransformKind::Gaussian) {
                cell.tolerance = 3.0 * cell.se;
                if (spec.trials > 1) {
                    cell.pass = std::abs(cell.empirical - cell.theory) <= cell.tolerance;
                }
            } else {
                cell.tolerance = 0.05 * cell.theory;
                if (m >= (1u << 12)) {
                    cell.pass = std::abs(cell.empirical - cell.theory) <= cell.tolerance;
                } else {
                    cell.note = "m < 2^12: reported only";
                }
            }
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

/// P(S_lo >= t) <= P(S_hi >= t) + 3 se(paired difference) for every count t
/// up to the largest observed. Both scores share each transform and the same
/// orthogonal direction, so lambda_lo = lambda_hi gives identical samples.
inline ExperimentReport run_domination_experiment(const ExperimentSpec& spec)
{
    spec.validate();
    if (!(spec.lambda <= spec.lambda_hi)) {
        fail(Errc::InvalidParams, "domination needs lambda_lo <= lambda_hi");
    }
    if (!(std::abs(spec.lambda) <= 1.0) || !(std::abs(spec.lambda_hi) <= 1.0)) {
        fail(Errc::InvalidLambda, "lambda must lie in [-1, 1]");
    }
    if (spec.d < 2) {
        fail(Errc::InvalidDimensions, "domination needs d >= 2");
    }
    ExperimentReport report{spec, {}};
    auto engine = make_engine(spec.seed, stream::pair_frame);
    const auto x = random_unit(spec.d, engine);
    const auto u = random_orthogonal_unit(x, engine);
    auto at = [&](double lambda) {
        const double s = std::sqrt(std::max(0.0, 1.0 - lambda * lambda));
        std::vector<double> y(spec.d);
        for (std::size_t i = 0; i < spec.d; ++i) {
            y[i] = lambda * x[i] + s * u[i];
        }
        return UnitVector(std::move(y));
    };
    const std::array<UnitVector, 2> ys{at(spec.lambda), at(spec.lambda_hi)};
    for (auto m : spec.m_grid) {
        const double h = spec.h ? *spec.h : threshold_h(m, spec.r_grid.front());
        std::vector<std::array<std::uint32_t, 2>> counts(spec.trials);
        parallel_for(spec.trials, spec.threads, [&](std::size_t i) {
            const auto c = trial_overlaps(spec.kind, m, h, x, ys, trial_seed(spec.seed, i));
            counts[i] = {c[0], c[1]};
        });
        std::uint32_t top = 0;
        for (const auto& c : counts) {
            top = std::max({top, c[0], c[1]});
        }
        const double n = static_cast<double>(spec.trials);
        for (std::uint32_t t = 0; t <= top + 1; ++t) {
            double sum = 0.0, sq = 0.0;
            std::size_t lo_hits = 0, hi_hits = 0;
            for (const auto& c : counts) {
                const int a = c[0] >= t ? 1 : 0;
                const int b = c[1] >= t ? 1 : 0;
                lo_hits += a;
                hi_hits += b;
                sum += a - b;
                sq += (a - b) * (a - b);
            }
            const double mean = sum / n;
            ReportCell cell;
            cell.statistic = "tail_lo_minus_hi";
            cell.kind = spec.kind;
            cell.m = m;
            cell.r = spec.r_grid.front();
            cell.h = h;
            cell.lambda = spec.lambda;
            cell.t = t;
            cell.trials = spec.trials;
            cell.empirical = mean;
            cell.se = spec.trials > 1 ? std::sqrt(std::max(0.0, (sq - n * mean * mean) / (n - 1)) / n) : 0.0;
            cell.theory = 0.0;
            cell.tolerance = 3.0 * cell.se;
            cell.pass = mean <= cell.tolerance;
            cell.note = "P_lo=" + format_double(static_cast<double>(lo_hits) / n) +
                        " P_hi=" + format_double(static_cast<double>(hi_hits) / n);
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

inline ExperimentReport run_experiment(const ExperimentSpec& spec)
{
    switch (spec.mode) {
    case ExperimentMode::TypeI:
    case ExperimentMode::TypeII: return run_error_experiment(spec);
    case ExperimentMode::ScoreCDF: return run_cdf_experiment(spec);
    case ExperimentMode::Sparsity: return run_sparsity_experiment(spec);
    case ExperimentMode::PhaseTransition: return run_phase_experiment(spec);
    case ExperimentMode::Domination: return run_domination_experiment(spec);
    }
    fail(Errc::InvalidParams, "unknown experiment mode");
}

/// Analytic table for the tabulate command: mu, sigma, eps and bounds over
/// (m, r) at one lambda.
inline nlohmann::json tabulate(const std::vector<std::uint32_t>& m_grid, const std::vector<double>& r_grid, double lambda,
                               double eta)
{
    nlohmann::json rows = nlohmann::json::array();
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    for (auto m : m_grid) {
        for (double r : r_grid) {
            const double h = threshold_h(m, r);
            const auto st = mu_sigma(lambda, h, m);
            const auto band = error_band(lambda, m, r, eta);
            rows.push_back({{"m", m},
                            {"r", r},
                            {"h", h},
                            {"lambda", lambda},
                            {"eta", eta},
                            {"mu", st.mu},
                            {"sigma", st.sigma},
                            {"expected_count", st.expected_count},
                            {"poisson_regime", st.poisson_regime},
                            {"phase", std::string(to_string(phase_region(lambda, r)))},
                            {"expected_k", m * normal_sf(h)},
                            {"eps_minus", opt(band.eps_minus)},
                            {"eps_plus", opt(band.eps_plus)},
                            {"eps_asymptotic", opt(band.eps_asym)},
                            {"be_bound", opt(band.be_bound)}});
        }
    }
    return rows;
}

/// Rows of tabulate() as CSV; missing epsilons are empty fields.
inline void write_tabulate_csv(std::ostream& out, const nlohmann::json& rows)
{
    static constexpr const char* cols[] = {"lambda", "h", "m", "r", "mu", "sigma", "eps_minus", "eps_plus",
                                           "eps_asymptotic", "be_bound", "expected_count", "phase"};
    for (std::size_t i = 0; i < std::size(cols); ++i) {
        out << (i ? "," : "") << cols[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < std::size(cols); ++i) {
            const auto& v = row.at(cols[i]);
            out << (i ? "," : "");
            if (v.is_number_float()) {
                out << format_double(v.get<double>());
            } else if (v.is_number()) {
                out << v.get<std::int64_t>();
            } else if (v.is_string()) {
                out << v.get<std::string>();
            }
        }
        out << '\n';
    }
}

}  // namespace sphx
