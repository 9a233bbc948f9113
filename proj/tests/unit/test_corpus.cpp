#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "sphx/corpus.hpp"

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

Corpus load_csv(const std::string& text)
{
    std::istringstream in(text);
    return load_vectors(in, VectorFormat::Csv);
}

std::vector<PricePoint> prices(std::initializer_list<double> closes)
{
    std::vector<PricePoint> s;
    int day = 0;
    for (double c : closes) s.push_back({"d" + std::to_string(day++), c});
    return s;
}

}  // namespace

TEST(Load, CsvNormalizes)
{
    const auto c = load_csv("img1, 3, 4\n");
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c.ids[0], "img1");
    EXPECT_EQ(c.d, 2u);
    EXPECT_NEAR(c.vectors[0][0], 0.6, 1e-15);
    EXPECT_NEAR(c.vectors[0][1], 0.8, 1e-15);
}

TEST(Load, HeaderCommentsAndBlankLines)
{
    const auto c = load_csv("id,a,b,c\n# comment\n\nx,1,0,0\ny,0,2,0\r\n");
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c.ids[1], "y");
    EXPECT_DOUBLE_EQ(c.vectors[1][1], 1.0);
    EXPECT_EQ(c.find("y"), std::optional<std::size_t>(1));
    EXPECT_FALSE(c.find("z"));
}

TEST(Load, Errors)
{
    EXPECT_EQ(error_of([] { load_csv("a,0,0,0\n"); }), Errc::ZeroVector);
    EXPECT_EQ(error_of([] { load_csv("a,1,2\nb,1,2,3\n"); }), Errc::RaggedDimensions);
    EXPECT_EQ(error_of([] { load_csv("a,1,zz\n"); }), Errc::ParseError);
    EXPECT_EQ(error_of([] { load_csv("a\n"); }), Errc::ParseError);
    try {
        load_csv("ok,1,1\nbad,0,0\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
    }
    try {
        load_csv("a,1,1\n\nb,1,x\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);
    }
    EXPECT_EQ(error_of([] { load_vectors_file("/nonexistent/vectors.csv"); }), Errc::Io);
}

TEST(Load, Jsonl)
{
    std::istringstream in("{\"id\": \"a\", \"vector\": [0, 5]}\n{\"id\": 7, \"vector\": [1, 1]}\n");
    const auto c = load_vectors(in, VectorFormat::Jsonl);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c.ids[1], "7");
    EXPECT_DOUBLE_EQ(c.vectors[0][1], 1.0);
    EXPECT_NEAR(c.vectors[1][0], std::sqrt(0.5), 1e-15);
    std::istringstream bad("{\"id\": \"a\"}\n");
    EXPECT_EQ(error_of([&] { load_vectors(bad, VectorFormat::Jsonl); }), Errc::ParseError);
    EXPECT_EQ(format_for_path("x.jsonl"), VectorFormat::Jsonl);
    EXPECT_EQ(format_for_path("x.csv"), VectorFormat::Csv);
}

TEST(Load, SaveRoundTrip)
{
    const auto c = uniform_corpus(50, 7, 3);
    for (auto fmt : {VectorFormat::Csv, VectorFormat::Jsonl}) {
        std::stringstream ss;
        save_vectors(ss, c, fmt);
        const auto back = load_vectors(ss, fmt);
        ASSERT_EQ(back.size(), c.size());
        EXPECT_EQ(back.ids, c.ids);
        for (std::size_t i = 0; i < c.size(); ++i) {
            for (std::size_t j = 0; j < c.d; ++j) EXPECT_NEAR(back.vectors[i][j], c.vectors[i][j], 1e-9);
        }
    }
}

TEST(Window, Examples)
{
    const auto raw = window_series(prices({100, 110, 99}), 1);
    ASSERT_EQ(raw.records.size(), 1u);
    EXPECT_EQ(raw.records[0].id, "d1");
    ASSERT_EQ(raw.records[0].values.size(), 2u);
    EXPECT_NEAR(raw.records[0].values[0], 0.10, 1e-15);
    EXPECT_NEAR(raw.records[0].values[1], -0.10, 1e-15);

    std::vector<PricePoint> s;
    for (int i = 0; i < 40; ++i) s.push_back({"d" + std::to_string(i), 100 + 10 * std::sin(i)});
    const auto w5 = window_series(s, 5);
    EXPECT_EQ(w5.d, 10u);
    for (const auto& r : w5.records) EXPECT_EQ(r.values.size(), 10u);
}

TEST(Window, CountProperty)
{
    for (std::size_t len = 3; len < 30; ++len) {
        for (std::size_t hw = 1; 2 * hw + 1 <= len; ++hw) {
            std::vector<PricePoint> s;
            for (std::size_t i = 0; i < len; ++i) s.push_back({std::to_string(i), 1.0 + 0.1 * ((i * 7) % 5)});
            const auto raw = window_series(s, hw);
            EXPECT_EQ(raw.records.size(), len - 2 * hw);
            EXPECT_EQ(raw.records.front().id, std::to_string(hw));
        }
    }
}

TEST(Window, Errors)
{
    EXPECT_EQ(error_of([] { window_series(prices({1, 2}), 1); }), Errc::SeriesTooShort);
    EXPECT_EQ(error_of([] { window_series(prices({1, 0, 2}), 1); }), Errc::NonPositivePrice);
    EXPECT_EQ(error_of([] { window_series(prices({1, 2, 3}), 0); }), Errc::InvalidParams);
    // constant series gives zero vectors, rejected at normalization
    EXPECT_EQ(error_of([] { normalize_corpus(window_series(prices({5, 5, 5, 5}), 1)); }), Errc::ZeroVector);
}

TEST(Series, Read)
{
    std::istringstream in("date,close\n2008-01-02,100\n2008-01-03,110.5\n");
    const auto s = read_series(in);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[1].date, "2008-01-03");
    EXPECT_DOUBLE_EQ(s[1].close, 110.5);
    std::istringstream bad("2008-01-02,100\n2008-01-03,abc\n");
    EXPECT_EQ(error_of([&] { read_series(bad); }), Errc::ParseError);
}

TEST(Histogram, Examples)
{
    const auto h = histogram_bin({0.1, 0.2, 0.9}, {0, 0.5, 1});
    EXPECT_EQ(h.counts, (std::vector<double>{2, 1}));
    EXPECT_EQ(histogram_bin({}, {0, 0.5, 1}).counts, (std::vector<double>{0, 0}));
    EXPECT_EQ(histogram_bin({1.0}, {0, 0.5, 1}).counts, (std::vector<double>{0, 1}));
    EXPECT_EQ(histogram_bin({0.5}, {0, 0.5, 1}).counts, (std::vector<double>{0, 1}));
    const auto out = histogram_bin({-0.1, 1.1, 0.3}, {0, 0.5, 1});
    EXPECT_EQ(out.dropped, 2u);
    EXPECT_EQ(error_of([] { histogram_bin({0.1}, {0}); }), Errc::BadEdges);
    EXPECT_EQ(error_of([] { histogram_bin({0.1}, {0, 0}); }), Errc::BadEdges);
    // empty histogram vector is rejected downstream
    RawCorpus raw{{{"img", histogram_bin({}, {0, 0.5, 1}).counts}}, 2};
    EXPECT_EQ(error_of([&] { normalize_corpus(raw); }), Errc::ZeroVector);
}

TEST(Histogram, CountsConserved)
{
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-0.2, 1.2);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> v(100);
        for (auto& x : v) x = u(gen);
        const auto h = histogram_bin(v, {0, 0.1, 0.35, 0.6, 1.0});
        double total = h.dropped;
        for (double c : h.counts) total += c;
        EXPECT_EQ(total, 100.0);
    }
}

TEST(Synthetic, Clustered)
{
    ClusteredCorpusSpec spec;
    spec.n = 300;
    spec.d = 64;
    spec.clusters = 5;
    spec.members = 10;
    spec.seed = 2;
    const auto cc = clustered_corpus(spec);
    ASSERT_EQ(cc.corpus.size(), 300u);
    ASSERT_EQ(cc.centers.size(), 5u);
    for (std::size_t i = 0; i < cc.corpus.size(); ++i) {
        if (cc.cluster_of[i] < 5) {
            const double ip = cc.corpus.vectors[i].dot(cc.centers.vectors[cc.cluster_of[i]]);
            EXPECT_GE(ip, 0.85 - 1e-12);
            EXPECT_LE(ip, 0.95 + 1e-12);
        }
    }
    const auto again = clustered_corpus(spec);
    EXPECT_EQ(again.corpus.ids, cc.corpus.ids);
    EXPECT_EQ(again.corpus.vectors[17].coords()[3], cc.corpus.vectors[17].coords()[3]);
    spec.members = 100;
    EXPECT_EQ(error_of([&] { clustered_corpus(spec); }), Errc::InvalidParams);
}
