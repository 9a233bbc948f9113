#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string_view>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sphx/error.hpp"

namespace sphx {

// Statistics of the thresholded-projection score.
//
// Conventions: log is the natural logarithm; h = sqrt(2 r ln m); for a
// document/query pair with inner product lambda, (w, v) is a standard normal
// pair with correlation lambda and mu(lambda) = P(w >= h, v >= h).

inline double normal_cdf(double t)
{
    return 0.5 * std::erfc(-t / std::numbers::sqrt2);
}

/// P(N(0,1) >= t).
inline double normal_sf(double t)
{
    return 0.5 * std::erfc(t / std::numbers::sqrt2);
}

inline double threshold_h(double m, double r)
{
    if (!(m >= 2.0) || !(r > 0.0)) {
        fail(Errc::InvalidParams, "threshold_h needs m >= 2 and r > 0");
    }
    return std::sqrt(2.0 * r * std::log(m));
}

struct NormalTail {
    double exact;
    double asymptotic;  ///< e^{-h^2/2} / (h sqrt(2 pi)); +inf at h <= 0.
};

inline NormalTail normal_tail(double h)
{
    NormalTail tail{normal_sf(h), std::numeric_limits<double>::infinity()};
    if (h > 0.0) {
        tail.asymptotic = std::exp(-0.5 * h * h) / (h * std::sqrt(2.0 * std::numbers::pi));
    }
    return tail;
}

struct Sparsity {
    double exact;       ///< m (1 - Phi(h))
    double asymptotic;  ///< m^{1-r} / sqrt(4 pi r ln m)
    double upper;       ///< same expression; also a non-asymptotic upper bound
};

inline Sparsity expected_sparsity(double m, double r)
{
    const double h = threshold_h(m, r);
    const double approx = std::pow(m, 1.0 - r) / std::sqrt(4.0 * std::numbers::pi * r * std::log(m));
    return {m * normal_sf(h), approx, approx};
}

// ---------------------------------------------------------------------------
// mu(lambda) through the Plackett identity
// ---------------------------------------------------------------------------

inline constexpr double singular_margin = 1e-9;

namespace detail {

/// One 31-point Gauss-Kronrod panel, split in halves while the Kronrod/Gauss
/// discrepancy exceeds 1e-13 relative.
template <class F>
double adaptive_kronrod(const F& f, double a, double b, int depth)
{
    double error = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &error);
    if (depth == 0 || error <= 1e-13 * std::abs(value) || error < 1e-300) {
        return value;
    }
    const double mid = 0.5 * (a + b);
    return adaptive_kronrod(f, a, mid, depth - 1) + adaptive_kronrod(f, mid, b, depth - 1);
}

/// Integral of d mu / dt = exp(-h^2/(1+t)) / (2 pi sqrt(1-t^2)) over [a, b],
/// computed in theta = asin(t), where the integrand becomes
/// exp(-h^2/(1+sin theta)) / (2 pi) and has no endpoint singularity.
inline double plackett_integral(double a, double b, double h)
{
    if (a == b) {
        return 0.0;
    }
    const double h2 = h * h;
    auto integrand = [h2](double theta) {
        if (h2 == 0.0) {
            return 1.0 / (2.0 * std::numbers::pi);
        }
        const double denom = 1.0 + std::sin(theta);
        if (denom <= 0.0) {
            return 0.0;
        }
        return std::exp(-h2 / denom) / (2.0 * std::numbers::pi);
    };
    double lo = std::asin(std::clamp(a, -1.0, 1.0));
    const double hi = std::asin(std::clamp(b, -1.0, 1.0));
    if (h2 > 0.0) {
        // Below sin(theta) = h^2/700 - 1 the integrand is < e^-700; skipping
        // that stretch keeps the quadrature out of subnormal arithmetic.
        const double sin_cut = h2 / 700.0 - 1.0;
        if (sin_cut >= 1.0) {
            return 0.0;
        }
        lo = std::max(lo, std::asin(sin_cut));
        if (lo >= hi) {
            return 0.0;
        }
    }
    return adaptive_kronrod(integrand, lo, hi, 16);
}

}  // namespace detail

/// mu(lambda) = P(w >= h, v >= h). Closed forms at lambda = +-1.
inline double mean_score(double lambda, double h)
{
    if (!(std::abs(lambda) <= 1.0)) {
        fail(Errc::InvalidLambda, "lambda must lie in [-1, 1]");
    }
    if (h < 0.0) {
        fail(Errc::InvalidParams, "h must be >= 0");
    }
    if (lambda >= 1.0) {
        return normal_sf(h);
    }
    if (lambda <= -1.0) {
        return 0.0;
    }
    if (lambda < 0.0) {
        return detail::plackett_integral(-1.0, lambda, h);
    }
    const double tail = normal_sf(h);
    return tail * tail + detail::plackett_integral(0.0, lambda, h);
}

/// mu(hi) - mu(lo), integrated directly so small differences keep their
/// relative accuracy.
inline double mean_score_increment(double lo, double hi, double h)
{
    if (!(std::abs(lo) <= 1.0) || !(std::abs(hi) <= 1.0)) {
        fail(Errc::InvalidLambda, "lambda must lie in [-1, 1]");
    }
    return detail::plackett_integral(lo, hi, h);
}

inline double score_derivative(double lambda, double h)
{
    if (!(std::abs(lambda) < 1.0 - singular_margin)) {
        fail(Errc::DegenerateCorrelation, "d mu / d lambda is unavailable at |lambda| = 1");
    }
    return std::exp(-h * h / (1.0 + lambda)) / (2.0 * std::numbers::pi * std::sqrt(1.0 - lambda * lambda));
}

inline double score_second_derivative(double lambda, double h)
{
    const double first = score_derivative(lambda, h);
    const double onep = 1.0 + lambda;
    return (h * h / (onep * onep) + lambda / (1.0 - lambda * lambda)) * first;
}

struct ScoreStats {
    double lambda = 0.0;
    double h = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    std::optional<double> dmu;   ///< empty near |lambda| = 1
    std::optional<double> d2mu;  ///< empty near |lambda| = 1
    double expected_count = 0.0; ///< m mu
    bool clamped = false;        ///< |lambda| > 1 - 1e-9: closed forms used
    bool poisson_regime = false; ///< m mu < 10
};

inline double sigma_of(double mu)
{
    return std::sqrt(mu * (1.0 - mu));
}

inline ScoreStats mu_sigma(double lambda, double h, double m)
{
    if (!(std::abs(lambda) <= 1.0)) {
        fail(Errc::InvalidLambda, "lambda must lie in [-1, 1]");
    }
    ScoreStats s;
    s.lambda = lambda;
    s.h = h;
    s.clamped = std::abs(lambda) > 1.0 - singular_margin;
    if (s.clamped) {
        s.mu = mean_score(lambda > 0 ? 1.0 : -1.0, h);
    } else {
        s.mu = mean_score(lambda, h);
        s.dmu = score_derivative(lambda, h);
        s.d2mu = score_second_derivative(lambda, h);
    }
    s.sigma = sigma_of(s.mu);
    s.expected_count = m * s.mu;
    s.poisson_regime = s.expected_count < 10.0;
    return s;
}

struct MuAsymptotic {
    double mu_approx;
    double count_approx;
};

/// C(lambda) = (1+lambda)^2 / (2 pi sqrt(1-lambda^2)).
inline double tail_constant(double lambda)
{
    return (1.0 + lambda) * (1.0 + lambda) / (2.0 * std::numbers::pi * std::sqrt(1.0 - lambda * lambda));
}

inline MuAsymptotic mu_asymptotic(double lambda, double m, double r)
{
    if (!(std::abs(lambda) < 1.0)) {
        fail(Errc::DegenerateCorrelation, "asymptotic mu needs |lambda| < 1");
    }
    if (!(m >= 2.0) || !(r > 0.0)) {
        fail(Errc::InvalidParams, "asymptotic mu needs m >= 2 and r > 0");
    }
    const double mu = tail_constant(lambda) * std::pow(m, -2.0 * r / (1.0 + lambda)) / (2.0 * r * std::log(m));
    return {mu, m * mu};
}

enum class Phase { Vanishing, Boundary, Gaussian };

constexpr std::string_view to_string(Phase p) noexcept
{
    switch (p) {
    case Phase::Vanishing: return "vanishing";
    case Phase::Boundary: return "boundary";
    case Phase::Gaussian: return "gaussian";
    }
    return "unknown";
}

inline Phase phase_region(double lambda, double r)
{
    const double boundary = 2.0 * r - 1.0;
    if (std::abs(lambda - boundary) <= 1e-12) {
        return Phase::Boundary;
    }
    return lambda < boundary ? Phase::Vanishing : Phase::Gaussian;
}

/// Asymptotic error half-width
///   eps = sqrt(2 pi) (1+l) (1-l^2)^{1/4} eta / sqrt(2 r ln m) * m^{-(l-(2r-1))/(2(1+l))}.
inline double epsilon_asymptotic(double lambda, double m, double r, double eta)
{
    if (!(lambda > 0.0) || !(lambda < 1.0) || !(lambda > 2.0 * r - 1.0)) {
        fail(Errc::OutOfPhaseRegion, "asymptotic epsilon needs lambda in (max(0, 2r-1), 1)");
    }
    if (!(m >= 2.0) || !(eta >= 0.0)) {
        fail(Errc::InvalidParams, "asymptotic epsilon needs m >= 2 and eta >= 0");
    }
    const double c = std::sqrt(2.0 * std::numbers::pi) * (1.0 + lambda) * std::pow(1.0 - lambda * lambda, 0.25) *
                     eta / std::sqrt(2.0 * r * std::log(m));
    return c * std::pow(m, -(lambda - (2.0 * r - 1.0)) / (2.0 * (1.0 + lambda)));
}

// ---------------------------------------------------------------------------
// Non-asymptotic epsilons
// ---------------------------------------------------------------------------

/// Left-hand side for the lower half-width:
///   (mu(l) - mu(l - e)) / sigma(l - e) * sqrt(m).
inline double epsilon_minus_lhs(double lambda, double eps, double h, double m)
{
    const double lo = lambda - eps;
    const double sigma = sigma_of(mean_score(lo, h));
    const double diff = mean_score_increment(lo, lambda, h);
    if (sigma == 0.0) {
        return diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    return diff / sigma * std::sqrt(m);
}

/// Left-hand side for the upper half-width, sign flipped so it is >= 0:
///   (mu(l + e) - mu(l)) / sigma(l + e) * sqrt(m).
inline double epsilon_plus_lhs(double lambda, double eps, double h, double m)
{
    const double hi = std::min(1.0, lambda + eps);
    const double sigma = sigma_of(mean_score(hi, h));
    const double diff = mean_score_increment(lambda, hi, h);
    if (sigma == 0.0) {
        return diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    return diff / sigma * std::sqrt(m);
}

struct EpsilonSolution {
    std::optional<double> minus;
    std::optional<double> plus;
    double residual_minus = 0.0;
    double residual_plus = 0.0;

    [[nodiscard]] bool complete() const noexcept { return minus.has_value() && plus.has_value(); }
};

namespace detail {

/// Bisection for an increasing f with f(lo) <= target <= f(hi).
template <class F>
double bisect_increasing(F f, double lo, double hi, double target)
{
    for (int iter = 0; iter < 200 && hi - lo > 0.0; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (f(mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return std::abs(f(lo) - target) <= std::abs(f(hi) - target) ? lo : hi;
}

}  // namespace detail

/// Solves for the non-asymptotic half-widths. A side without a solution in
/// its bracket is left empty (NoSolution is reported per side).
inline EpsilonSolution solve_epsilons(double lambda, double m, double r, double eta)
{
    if (!(lambda > 2.0 * r - 1.0) || !(lambda < 1.0)) {
        fail(Errc::OutOfPhaseRegion, "epsilons need lambda in (2r-1, 1)");
    }
    if (!(eta >= 0.0)) {
        fail(Errc::InvalidParams, "eta must be >= 0");
    }
    const double h = threshold_h(m, r);
    EpsilonSolution sol;
    if (eta == 0.0) {
        sol.minus = 0.0;
        sol.plus = 0.0;
        return sol;
    }

    auto f_minus = [&](double e) { return epsilon_minus_lhs(lambda, e, h, m); };
    const double hi_minus = lambda + 1.0 - 1e-12;
    if (f_minus(hi_minus) >= eta) {
        const double e = detail::bisect_increasing(f_minus, 0.0, hi_minus, eta);
        sol.minus = e;
        sol.residual_minus = std::abs(f_minus(e) - eta);
    }

    auto f_plus = [&](double e) { return epsilon_plus_lhs(lambda, e, h, m); };
    const double hi_plus = 1.0 - lambda;
    if (f_plus(hi_plus) >= eta) {
        const double e = detail::bisect_increasing(f_plus, 0.0, hi_plus, eta);
        sol.plus = e;
        sol.residual_plus = std::abs(f_plus(e) - eta);
    }
    return sol;
}

inline double require_minus(const EpsilonSolution& s)
{
    if (!s.minus) {
        fail(Errc::NoSolution, "no solution for epsilon-minus (m too small for eta)");
    }
    return *s.minus;
}

inline double require_plus(const EpsilonSolution& s)
{
    if (!s.plus) {
        fail(Errc::NoSolution, "no solution for epsilon-plus (lambda + epsilon would exceed 1)");
    }
    return *s.plus;
}

/// Normal approximation of a per-document outcome plus its error bound.
struct NormalApproxBound {
    static constexpr double c0 = 0.4748;
    double rho = 0.0;    ///< E|z|^3 bound, sigma^2
    double bound = 0.0;  ///< 1 / sqrt(mu m)
};

inline NormalApproxBound berry_esseen_bound(double mu, double m)
{
    if (!(mu > 0.0) || !(m > 0.0)) {
        fail(Errc::DegenerateSigma, "Berry-Esseen bound needs mu > 0");
    }
    return {mu * (1.0 - mu), 1.0 / std::sqrt(mu * m)};
}

struct RetrievalProbability {
    double gauss_approx;  ///< P(N(0,1) > (mu(cut) - mu(true)) / sigma(true) sqrt(m))
    double be_bound;      ///< 1 / sqrt(mu(true) m)
    double z;             ///< the standardized cutoff
};

inline RetrievalProbability retrieval_probability(double lambda_cut, double lambda_true, double h, double m)
{
    if (!(std::abs(lambda_cut) <= 1.0) || !(std::abs(lambda_true) <= 1.0)) {
        fail(Errc::InvalidLambda, "lambda must lie in [-1, 1]");
    }
    const double mu_true = mean_score(lambda_true, h);
    const double sigma = sigma_of(mu_true);
    if (sigma == 0.0) {
        fail(Errc::DegenerateSigma, "sigma(lambda_true) = 0");
    }
    const double diff = lambda_cut >= lambda_true ? mean_score_increment(lambda_true, lambda_cut, h)
                                                  : -mean_score_increment(lambda_cut, lambda_true, h);
    const double z = diff / sigma * std::sqrt(m);
    return {normal_sf(z), 1.0 / std::sqrt(mu_true * m), z};
}

struct ErrorBand {
    double lambda = 0.0;
    double eta = 0.0;
    double m = 0.0;
    double r = 0.0;
    double h = 0.0;
    std::optional<double> eps_asym;
    std::optional<double> eps_minus;
    std::optional<double> eps_plus;
    std::optional<double> be_bound;  ///< 1 / sqrt(mu(lambda - eps_minus) m)
};

inline ErrorBand error_band(double lambda, double m, double r, double eta)
{
    ErrorBand band;
    band.lambda = lambda;
    band.eta = eta;
    band.m = m;
    band.r = r;
    band.h = threshold_h(m, r);
    if (lambda > 0.0 && lambda < 1.0 && lambda > 2.0 * r - 1.0) {
        band.eps_asym = epsilon_asymptotic(lambda, m, r, eta);
    }
    if (lambda > 2.0 * r - 1.0 && lambda < 1.0) {
        const auto sol = solve_epsilons(lambda, m, r, eta);
        band.eps_minus = sol.minus;
        band.eps_plus = sol.plus;
        if (sol.minus) {
            const double mu = mean_score(lambda - *sol.minus, band.h);
            if (mu > 0.0) {
                band.be_bound = 1.0 / std::sqrt(mu * m);
            }
        }
    }
    return band;
}

}  // namespace sphx
