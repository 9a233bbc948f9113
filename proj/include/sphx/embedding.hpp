#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "sphx/dct.hpp"
#include "sphx/error.hpp"
#include "sphx/rng.hpp"

namespace sphx {

// ---------------------------------------------------------------------------
// Unit vectors
// ---------------------------------------------------------------------------

class UnitVector {
public:
    static constexpr double norm_tolerance = 1e-9;

    UnitVector() = default;

    /// Takes coordinates that are already unit-norm (within norm_tolerance).
    explicit UnitVector(std::vector<double> coords) : coords_(std::move(coords))
    {
        if (coords_.empty()) {
            fail(Errc::InvalidDimensions, "unit vector needs d >= 1");
        }
        double sq = 0.0;
        for (double c : coords_) {
            if (!std::isfinite(c)) {
                fail(Errc::ParseError, "unit vector has a non-finite coordinate");
            }
            sq += c * c;
        }
        if (std::abs(std::sqrt(sq) - 1.0) > norm_tolerance) {
            fail(Errc::InvalidParams, "vector is not unit-norm (norm " + std::to_string(std::sqrt(sq)) + ")");
        }
    }

    /// L2-normalizes `raw`; rejects zero and non-finite input.
    static UnitVector normalize(std::vector<double> raw)
    {
        if (raw.empty()) {
            fail(Errc::InvalidDimensions, "cannot normalize an empty vector");
        }
        double sq = 0.0;
        for (double c : raw) {
            if (!std::isfinite(c)) {
                fail(Errc::ParseError, "vector has a non-finite coordinate");
            }
            sq += c * c;
        }
        if (sq == 0.0) {
            fail(Errc::ZeroVector, "cannot normalize a zero vector");
        }
        const double norm = std::sqrt(sq);
        for (double& c : raw) {
            c /= norm;
        }
        return UnitVector(std::move(raw));
    }

    [[nodiscard]] std::size_t dim() const noexcept { return coords_.size(); }
    [[nodiscard]] std::span<const double> coords() const noexcept { return coords_; }
    [[nodiscard]] double operator[](std::size_t i) const { return coords_[i]; }

    [[nodiscard]] double dot(const UnitVector& other) const
    {
        if (other.dim() != dim()) {
            fail(Errc::DimensionMismatch, "inner product of vectors with different d");
        }
        double s = 0.0;
        for (std::size_t i = 0; i < coords_.size(); ++i) {
            s += coords_[i] * other.coords_[i];
        }
        return s;
    }

    friend bool operator==(const UnitVector&, const UnitVector&) = default;

private:
    std::vector<double> coords_;
};

// ---------------------------------------------------------------------------
// Projections and codes
// ---------------------------------------------------------------------------

struct ProjectionVector {
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
};

/// Active dimensions of a thresholded projection: a strictly increasing subset
/// of [0, m). These are the document's "terms".
class SparseCode {
public:
    SparseCode() = default;

    SparseCode(std::uint32_t m, std::vector<std::uint32_t> support) : m_(m), support_(std::move(support))
    {
        for (std::size_t i = 0; i < support_.size(); ++i) {
            if (support_[i] >= m_) {
                fail(Errc::InvalidDimensions, "code index out of range");
            }
            if (i > 0 && support_[i] <= support_[i - 1]) {
                fail(Errc::InvalidParams, "code support must be strictly increasing");
            }
        }
    }

    [[nodiscard]] std::uint32_t m() const noexcept { return m_; }
    [[nodiscard]] std::size_t k() const noexcept { return support_.size(); }
    [[nodiscard]] std::span<const std::uint32_t> support() const noexcept { return support_; }
    [[nodiscard]] bool empty() const noexcept { return support_.empty(); }

    friend bool operator==(const SparseCode&, const SparseCode&) = default;

private:
    std::uint32_t m_ = 0;
    std::vector<std::uint32_t> support_;
};

/// support = { i : values[i] >= h }. Ties at exactly h are active.
inline SparseCode encode(const ProjectionVector& p, double h)
{
    if (!(h >= 0.0)) {
        fail(Errc::InvalidParams, "threshold h must be >= 0");
    }
    std::vector<std::uint32_t> support;
    for (std::size_t i = 0; i < p.values.size(); ++i) {
        if (p.values[i] >= h) {
            support.push_back(static_cast<std::uint32_t>(i));
        }
    }
    return SparseCode(static_cast<std::uint32_t>(p.values.size()), std::move(support));
}

/// |support(a) ∩ support(b)|, i.e. m * S(a, b).
inline std::size_t overlap_count(const SparseCode& a, const SparseCode& b)
{
    if (a.m() != b.m()) {
        fail(Errc::CodeLengthMismatch, "codes have different lengths");
    }
    auto sa = a.support();
    auto sb = b.support();
    std::size_t i = 0;
    std::size_t j = 0;
    std::size_t count = 0;
    while (i < sa.size() && j < sb.size()) {
        if (sa[i] < sb[j]) {
            ++i;
        } else if (sb[j] < sa[i]) {
            ++j;
        } else {
            ++count;
            ++i;
            ++j;
        }
    }
    return count;
}

inline double score(const SparseCode& a, const SparseCode& b)
{
    const auto count = overlap_count(a, b);
    return a.m() == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(a.m());
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

enum class TransformKind : std::uint8_t {
    Gaussian = 0,
    Structured = 1,
    BiasedStructured = 2,
};

constexpr std::string_view to_string(TransformKind kind) noexcept
{
    switch (kind) {
    case TransformKind::Gaussian: return "gaussian";
    case TransformKind::Structured: return "structured";
    case TransformKind::BiasedStructured: return "biased";
    }
    return "unknown";
}

inline TransformKind parse_transform_kind(std::string_view name)
{
    if (name == "gaussian") return TransformKind::Gaussian;
    if (name == "structured") return TransformKind::Structured;
    if (name == "biased" || name == "biased-structured") return TransformKind::BiasedStructured;
    fail(Errc::InvalidParams, "unknown transform kind '" + std::string(name) + "'");
}

constexpr std::size_t next_power_of_two(std::size_t n) noexcept
{
    return std::bit_ceil(n);
}

/// Random linear map R^d -> R^m.
///
/// Gaussian: rows a_i are i.i.d. N(0, I_d), generated row-major from one
/// seeded stream. By default the matrix is regenerated on every application;
/// `materialize()` stores it, with bit-identical outputs.
///
/// Structured: x is zero-padded to d' = bit_ceil(d), replicated m/d' times,
/// sign-flipped by m i.i.d. Rademacher signs, then passed through the DCT-II
/// scaled by sqrt(d'/m), so ||v||^2 = m exactly for unit x.
///
/// BiasedStructured: one +-1 per input column at distinct output rows, then
/// the DCT-II scaled so that ||v||^2 = m. Kept as a negative control.
class Transform {
public:
    static Transform make(TransformKind kind, std::size_t d, std::size_t m, std::uint64_t seed)
    {
        if (d == 0 || m == 0) {
            fail(Errc::InvalidDimensions, "transform needs d >= 1 and m >= 1");
        }
        if (m > (std::size_t{1} << 31)) {
            fail(Errc::InvalidDimensions, "m is too large");
        }
        Transform t;
        t.kind_ = kind;
        t.d_ = d;
        t.m_ = m;
        t.seed_ = seed;
        t.padded_d_ = d;
        if (kind == TransformKind::Gaussian) {
            return t;
        }
        if (m < d) {
            fail(Errc::InvalidDimensions, "structured transforms need m >= d");
        }
        if (!std::has_single_bit(m)) {
            fail(Errc::NotPowerOfTwo, "structured transforms need m to be a power of two");
        }
        if (kind == TransformKind::Structured) {
            t.padded_d_ = next_power_of_two(d);
            t.signs_.resize(m);
            auto engine = make_engine(seed, stream::structured_signs);
            std::uint64_t bits = 0;
            for (std::size_t i = 0; i < m; ++i) {
                if (i % 64 == 0) {
                    bits = engine();
                }
                t.signs_[i] = (bits >> (i % 64)) & 1U ? std::int8_t{1} : std::int8_t{-1};
            }
        } else {
            // Floyd's sampling of d distinct rows, then one sign per column.
            auto engine = make_engine(seed, stream::biased_layout);
            std::unordered_set<std::uint32_t> taken;
            t.rows_.reserve(d);
            for (std::size_t j = m - d; j < m; ++j) {
                auto pick = static_cast<std::uint32_t>(uniform_index(engine, 0, j));
                if (!taken.insert(pick).second) {
                    pick = static_cast<std::uint32_t>(j);
                    taken.insert(pick);
                }
                t.rows_.push_back(pick);
            }
            t.signs_.resize(d);
            for (auto& s : t.signs_) {
                s = (engine() & 1U) ? std::int8_t{1} : std::int8_t{-1};
            }
        }
        return t;
    }

    [[nodiscard]] TransformKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t input_dim() const noexcept { return d_; }
    [[nodiscard]] std::size_t output_dim() const noexcept { return m_; }
    [[nodiscard]] std::size_t padded_dim() const noexcept { return padded_d_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::span<const std::int8_t> signs() const noexcept { return signs_; }
    [[nodiscard]] std::span<const std::uint32_t> biased_rows() const noexcept { return rows_; }
    [[nodiscard]] bool materialized() const noexcept { return !matrix_.empty(); }

    void materialize()
    {
        if (kind_ != TransformKind::Gaussian || materialized()) {
            return;
        }
        matrix_.resize(m_ * d_);
        auto engine = make_engine(seed_, stream::gaussian_matrix);
        NormalSampler normal(engine);
        for (auto& a : matrix_) {
            a = normal();
        }
    }

    [[nodiscard]] ProjectionVector apply(const UnitVector& x) const
    {
        ProjectionVector p;
        p.values.resize(m_);
        apply_into(x, p.values);
        return p;
    }

    /// Applies the transform to several vectors; the Gaussian matrix is
    /// generated once for the whole batch.
    [[nodiscard]] std::vector<ProjectionVector> apply(std::span<const UnitVector> xs) const
    {
        std::vector<ProjectionVector> out(xs.size());
        for (auto& p : out) {
            p.values.resize(m_);
        }
        if (kind_ != TransformKind::Gaussian || materialized()) {
            for (std::size_t v = 0; v < xs.size(); ++v) {
                apply_into(xs[v], out[v].values);
            }
            return out;
        }
        for (const auto& x : xs) {
            check_dim(x);
        }
        auto engine = make_engine(seed_, stream::gaussian_matrix);
        NormalSampler normal(engine);
        std::vector<double> row(d_);
        for (std::size_t i = 0; i < m_; ++i) {
            for (auto& a : row) {
                a = normal();
            }
            for (std::size_t v = 0; v < xs.size(); ++v) {
                out[v].values[i] = row_dot(row.data(), xs[v].coords());
            }
        }
        return out;
    }

    void apply_into(const UnitVector& x, std::span<double> out) const
    {
        check_dim(x);
        if (out.size() != m_) {
            fail(Errc::DimensionMismatch, "projection buffer has wrong length");
        }
        switch (kind_) {
        case TransformKind::Gaussian: apply_gaussian(x.coords(), out); break;
        case TransformKind::Structured: apply_structured(x.coords(), out); break;
        case TransformKind::BiasedStructured: apply_biased(x.coords(), out); break;
        }
    }

    friend bool operator==(const Transform& a, const Transform& b)
    {
        return a.kind_ == b.kind_ && a.d_ == b.d_ && a.m_ == b.m_ && a.seed_ == b.seed_ &&
               a.padded_d_ == b.padded_d_ && a.signs_ == b.signs_ && a.rows_ == b.rows_;
    }

private:
    Transform() = default;

    void check_dim(const UnitVector& x) const
    {
        if (x.dim() != d_) {
            fail(Errc::DimensionMismatch,
                 "vector has d=" + std::to_string(x.dim()) + ", transform expects d=" + std::to_string(d_));
        }
    }

    static double row_dot(const double* row, std::span<const double> x)
    {
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            s += row[j] * x[j];
        }
        return s;
    }

    void apply_gaussian(std::span<const double> x, std::span<double> out) const
    {
        if (materialized()) {
            for (std::size_t i = 0; i < m_; ++i) {
                out[i] = row_dot(matrix_.data() + i * d_, x);
            }
            return;
        }
        auto engine = make_engine(seed_, stream::gaussian_matrix);
        NormalSampler normal(engine);
        std::vector<double> row(d_);
        for (std::size_t i = 0; i < m_; ++i) {
            for (auto& a : row) {
                a = normal();
            }
            out[i] = row_dot(row.data(), x);
        }
    }

    void apply_structured(std::span<const double> x, std::span<double> out) const
    {
        std::vector<double> u(m_, 0.0);
        for (std::size_t block = 0; block < m_; block += padded_d_) {
            for (std::size_t j = 0; j < d_; ++j) {
                u[block + j] = signs_[block + j] * x[j];
            }
        }
        dct2(u, static_cast<double>(padded_d_), out);
    }

    void apply_biased(std::span<const double> x, std::span<double> out) const
    {
        std::vector<double> u(m_, 0.0);
        for (std::size_t j = 0; j < d_; ++j) {
            u[rows_[j]] = signs_[j] * x[j];
        }
        dct2(u, static_cast<double>(m_), out);
    }

    TransformKind kind_ = TransformKind::Gaussian;
    std::size_t d_ = 0;
    std::size_t m_ = 0;
    std::size_t padded_d_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<std::int8_t> signs_;
    std::vector<std::uint32_t> rows_;
    std::vector<double> matrix_;
};

inline ProjectionVector apply_transform(const Transform& t, const UnitVector& x)
{
    return t.apply(x);
}

inline SparseCode map_vector(const Transform& t, const UnitVector& x, double h)
{
    return encode(t.apply(x), h);
}

/// Encodes many vectors. Gaussian transforms are materialized once (in a
/// copy) so the matrix is not regenerated per vector.
inline std::vector<SparseCode> map_vectors(const Transform& t, std::span<const UnitVector> xs, double h)
{
    std::vector<SparseCode> codes;
    codes.reserve(xs.size());
    if (t.kind() == TransformKind::Gaussian && !t.materialized() && xs.size() > 1) {
        Transform stored = t;
        stored.materialize();
        for (const auto& x : xs) {
            codes.push_back(map_vector(stored, x, h));
        }
        return codes;
    }
    for (const auto& x : xs) {
        codes.push_back(map_vector(t, x, h));
    }
    return codes;
}

}  // namespace sphx
