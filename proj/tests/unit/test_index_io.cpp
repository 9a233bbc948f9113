#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "sphx/index_io.hpp"

using namespace sphx;

namespace {

template <class F>
Errc error_of(F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no sphx::Error thrown";
    return Errc::Io;
}

InvertedIndex random_index(std::size_t n, std::uint32_t m, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::vector<std::pair<std::string, SparseCode>> docs;
    for (std::size_t i = 0; i < n; ++i) {
        docs.emplace_back("id-" + std::to_string(gen() % 1000000) + "-" + std::to_string(i),
                          oracle::random_code(m, 0.05, gen));
    }
    auto config = IndexConfig::from_params(m, 0.45, 1.2, TransformKind::Structured, 100, seed);
    return build_index(std::move(docs), config);
}

}  // namespace

TEST(IndexIo, RoundTrip1000)
{
    const auto index = random_index(1000, 1024, 1);
    const auto bytes = save_index(index);
    const auto back = load_index(bytes);
    EXPECT_TRUE(back == index);
    EXPECT_EQ(back.config(), index.config());
    EXPECT_EQ(back.config().seed, 1u);
    EXPECT_EQ(save_index(back), bytes);
}

TEST(IndexIo, EmptyRoundTrip)
{
    const auto index = build_index({}, IndexConfig::from_params(64, 0.5, 1.0, TransformKind::Gaussian, 3, 9));
    EXPECT_TRUE(load_index(save_index(index)) == index);
}

TEST(IndexIo, HeaderLayout)
{
    const auto index = build_index({{"a", SparseCode(16, {2, 5})}},
                                   IndexConfig::from_params(16, 0.5, 1.0, TransformKind::BiasedStructured, 4, 0x0102));
    const auto bytes = save_index(index);
    ASSERT_GE(bytes.size(), 5u + 4 + 8 * 3 + 1 + 4 + 8 + 8);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 5), "SPHX1");
    EXPECT_EQ(bytes[5], 16);  // m, little-endian
    EXPECT_EQ(bytes[6], 0);
    EXPECT_EQ(bytes[5 + 4 + 24], 2);         // kind
    EXPECT_EQ(bytes[5 + 4 + 24 + 1], 4);     // d
    EXPECT_EQ(bytes[5 + 4 + 24 + 5], 0x02);  // seed low byte
    EXPECT_EQ(bytes[5 + 4 + 24 + 6], 0x01);
}

TEST(IndexIo, CorruptionDetected)
{
    const auto bytes = save_index(random_index(50, 128, 2));
    for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
        std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
        EXPECT_EQ(error_of([&] { load_index(truncated); }), Errc::CorruptStream) << cut;
    }
    auto flipped = bytes;
    flipped[flipped.size() / 2] ^= 0x10;
    EXPECT_EQ(error_of([&] { load_index(flipped); }), Errc::CorruptStream);
    auto magic = bytes;
    magic[0] = 'X';
    EXPECT_EQ(error_of([&] { load_index(magic); }), Errc::CorruptStream);
    auto version = bytes;
    version[4] = '2';
    EXPECT_EQ(error_of([&] { load_index(version); }), Errc::VersionMismatch);
}

TEST(IndexIo, RandomFlipsNeverLoadSilently)
{
    const auto index = random_index(40, 64, 3);
    const auto bytes = save_index(index);
    std::mt19937_64 gen(5);
    for (int i = 0; i < 300; ++i) {
        auto b = bytes;
        b[gen() % b.size()] ^= static_cast<std::uint8_t>(1u << (gen() % 8));
        try {
            const auto back = load_index(b);
            ADD_FAILURE() << "corrupted stream loaded";
        } catch (const Error& e) {
            EXPECT_TRUE(e.code() == Errc::CorruptStream || e.code() == Errc::VersionMismatch);
        }
    }
}

TEST(IndexIo, Files)
{
    const auto index = random_index(20, 64, 4);
    const auto path = (std::filesystem::temp_directory_path() / "sphx_test_index.sphx").string();
    save_index_file(index, path);
    EXPECT_TRUE(load_index_file(path) == index);
    std::filesystem::remove(path);
    EXPECT_EQ(error_of([&] { load_index_file(path); }), Errc::Io);
}
