#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "sphx/embedding.hpp"
#include "sphx/error.hpp"
#include "sphx/rng.hpp"

namespace sphx {

/// Uniform on the sphere S^{d-1} (normalized Gaussian).
inline UnitVector random_unit(std::size_t d, Engine& engine)
{
    NormalSampler normal(engine);
    std::vector<double> v(d);
    for (;;) {
        for (auto& c : v) {
            c = normal();
        }
        double sq = 0.0;
        for (double c : v) {
            sq += c * c;
        }
        if (sq > 1e-300) {
            return UnitVector::normalize(std::move(v));
        }
    }
}

/// A uniformly random unit vector orthogonal to x (Gram-Schmidt, applied
/// twice so the residual dot is at rounding level).
inline std::vector<double> random_orthogonal_unit(const UnitVector& x, Engine& engine)
{
    if (x.dim() < 2) {
        fail(Errc::InvalidDimensions, "need d >= 2 for an orthogonal direction");
    }
    NormalSampler normal(engine);
    const auto xs = x.coords();
    std::vector<double> u(x.dim());
    for (;;) {
        for (auto& c : u) {
            c = normal();
        }
        for (int pass = 0; pass < 2; ++pass) {
            double proj = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) {
                proj += u[i] * xs[i];
            }
            for (std::size_t i = 0; i < u.size(); ++i) {
                u[i] -= proj * xs[i];
            }
        }
        double sq = 0.0;
        for (double c : u) {
            sq += c * c;
        }
        if (sq > 1e-20) {
            const double norm = std::sqrt(sq);
            for (auto& c : u) {
                c /= norm;
            }
            return u;
        }
    }
}

/// y = lambda x + sqrt(1 - lambda^2) u with u a random unit vector orthogonal to x.
inline UnitVector vector_at_inner_product(const UnitVector& x, double lambda, Engine& engine)
{
    if (!(std::abs(lambda) <= 1.0)) {
        fail(Errc::InvalidLambda, "inner product must lie in [-1, 1]");
    }
    const auto u = random_orthogonal_unit(x, engine);
    const double s = std::sqrt(std::max(0.0, 1.0 - lambda * lambda));
    std::vector<double> y(x.dim());
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = lambda * x[i] + s * u[i];
    }
    return UnitVector(std::move(y));
}

}  // namespace sphx
