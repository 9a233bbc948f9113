#pragma once

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace sphx {

// Random streams.
//
// Engine: std::mt19937_64. Streams are split by hashing (seed, stream) through
// splitmix64, so every transform, trial and worker gets an independent engine
// that depends only on its own identifiers. Normal variates come from Boost's
// ziggurat normal_distribution.

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept
{
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

namespace stream {
inline constexpr std::uint64_t gaussian_matrix = 1;
inline constexpr std::uint64_t structured_signs = 2;
inline constexpr std::uint64_t biased_layout = 3;
inline constexpr std::uint64_t pair_frame = 4;
inline constexpr std::uint64_t trial_base = 1ULL << 32;
inline constexpr std::uint64_t input_base = 1ULL << 48;
}  // namespace stream

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream_id)
{
    return Engine(derive_seed(seed, stream_id));
}

class NormalSampler {
public:
    explicit NormalSampler(Engine& engine) : engine_(engine) {}

    double operator()() { return dist_(engine_); }

private:
    Engine& engine_;
    boost::random::normal_distribution<double> dist_{0.0, 1.0};
};

/// Uniform integer in [lo, hi], Boost's distribution so the mapping is fixed.
inline std::uint64_t uniform_index(Engine& engine, std::uint64_t lo, std::uint64_t hi)
{
    boost::random::uniform_int_distribution<std::uint64_t> dist(lo, hi);
    return dist(engine);
}

}  // namespace sphx
