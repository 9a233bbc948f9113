#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include <fftw3.h>

#include "sphx/error.hpp"

namespace sphx {

namespace detail {

// FFTW planning is not thread-safe; execution on distinct buffers is.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex mutex;
    return mutex;
}

class Redft10Plan {
public:
    explicit Redft10Plan(std::size_t n) : n_(n)
    {
        in_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
        out_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
        std::lock_guard lock(fftw_planner_mutex());
        plan_ = fftw_plan_r2r_1d(static_cast<int>(n), in_, out_, FFTW_REDFT10, FFTW_ESTIMATE);
    }
    Redft10Plan(const Redft10Plan&) = delete;
    Redft10Plan& operator=(const Redft10Plan&) = delete;
    ~Redft10Plan()
    {
        {
            std::lock_guard lock(fftw_planner_mutex());
            fftw_destroy_plan(plan_);
        }
        fftw_free(in_);
        fftw_free(out_);
    }

    [[nodiscard]] std::span<double> input() { return {in_, n_}; }
    [[nodiscard]] std::span<const double> output() const { return {out_, n_}; }
    void execute() { fftw_execute(plan_); }

private:
    std::size_t n_;
    double* in_ = nullptr;
    double* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

inline Redft10Plan& redft10_plan(std::size_t n)
{
    thread_local std::unordered_map<std::size_t, std::unique_ptr<Redft10Plan>> cache;
    auto& slot = cache[n];
    if (!slot) {
        slot = std::make_unique<Redft10Plan>(n);
    }
    return *slot;
}

}  // namespace detail

/// Scaled DCT-II:
///   v[i] = c_i * sqrt(scale_dim / m) * sum_j u[j] cos(pi i (2j + 1) / (2m)),
/// with c_0 = 1 and c_i = sqrt(2) otherwise (0-based indices). This is
/// sqrt(scale_dim) times the orthonormal DCT-II, so ||v||^2 = scale_dim ||u||^2.
/// O(m log m) for any m.
inline void dct2(std::span<const double> u, double scale_dim, std::span<double> v)
{
    const std::size_t m = u.size();
    if (m == 0) {
        fail(Errc::EmptyInput, "dct2: empty input");
    }
    if (v.size() != m) {
        fail(Errc::DimensionMismatch, "dct2: output length differs from input length");
    }
    auto& plan = detail::redft10_plan(m);
    auto in = plan.input();
    std::copy(u.begin(), u.end(), in.begin());
    plan.execute();
    auto out = plan.output();
    // FFTW's REDFT10 returns 2 * sum_j u[j] cos(...).
    const double base = 0.5 * std::sqrt(scale_dim / static_cast<double>(m));
    v[0] = base * out[0];
    const double rest = base * std::sqrt(2.0);
    for (std::size_t i = 1; i < m; ++i) {
        v[i] = rest * out[i];
    }
}

inline std::vector<double> dct2(std::span<const double> u, double scale_dim)
{
    std::vector<double> v(u.size());
    dct2(u, scale_dim, v);
    return v;
}

}  // namespace sphx
