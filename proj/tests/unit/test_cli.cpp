#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "sphx/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args)
{
    args.insert(args.begin(), "sphx");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = sphx::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json body_of(const std::string& text)
{
    auto j = json::parse(text);
    j.erase("metadata");
    return j;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir = fs::temp_directory_path() / ("sphx_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);
        std::ofstream f(dir / "raw.csv");
        f << "id,a,b,c,d\n";
        const auto c = sphx::uniform_corpus(200, 4, 3);
        f << "img1,3,4,0,0\n";
        for (std::size_t i = 0; i < c.size(); ++i) {
            f << c.ids[i];
            for (double v : c.vectors[i].coords()) f << ',' << sphx::format_double(v * 2.5);
            f << '\n';
        }
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string p(const char* name) const { return (dir / name).string(); }

    void build_index(const std::string& seed = "7")
    {
        ASSERT_EQ(run({"ingest", "--input", p("raw.csv"), "--output", p("vec.csv")}).code, 0);
        const auto r = run({"index", "--vectors", p("vec.csv"), "--output", p("idx.sphx"), "--m", "65536", "--r",
                            "0.5", "--kind", "structured", "--seed", seed});
        ASSERT_EQ(r.code, 0) << r.err;
    }

    fs::path dir;
};

}  // namespace

TEST_F(Cli, IngestNormalizes)
{
    const auto r = run({"ingest", "--input", p("raw.csv"), "--output", p("vec.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(r.out)["n"], 201);
    const auto c = sphx::load_vectors_file(p("vec.csv"));
    EXPECT_NEAR(c.vectors[*c.find("img1")][0], 0.6, 1e-15);
}

TEST_F(Cli, IngestSeries)
{
    std::ofstream(dir / "dow.csv") << "date,close\n2008-01-01,100\n2008-01-02,110\n2008-01-03,99\n2008-01-04,101\n";
    const auto r = run({"ingest", "--series", p("dow.csv"), "--half-window", "1", "--output", p("dow_vec.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto c = sphx::load_vectors_file(p("dow_vec.csv"));
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c.ids[0], "2008-01-02");
    EXPECT_NEAR(c.vectors[0][0], std::sqrt(0.5), 1e-12);
}

TEST_F(Cli, IndexSearchDeterministic)
{
    build_index();
    const std::vector<std::string> args{"search", "--index", p("idx.sphx"), "--vectors", p("vec.csv"),
                                        "--top-k", "10", "--query-id", "img1"};
    const auto a = run(args);
    ASSERT_EQ(a.code, 0) << a.err;
    const auto j = json::parse(a.out);
    ASSERT_EQ(j["result"]["results"].size(), 10u);
    EXPECT_EQ(j["result"]["results"][0]["doc_id"], "img1");
    EXPECT_EQ(j["config"]["index_config"]["seed"], 7);
    EXPECT_EQ(j["config"]["index_config"]["m"], 65536);
    EXPECT_TRUE(j["metadata"].contains("generated_at"));
    const auto b = run(args);
    EXPECT_EQ(body_of(a.out), body_of(b.out));

    // rebuilding with the same seed gives a byte-identical index
    const auto bytes = slurp(dir / "idx.sphx");
    build_index();
    EXPECT_EQ(slurp(dir / "idx.sphx"), bytes);
    build_index("8");
    EXPECT_NE(slurp(dir / "idx.sphx"), bytes);
}

TEST_F(Cli, SearchModesAndCsv)
{
    build_index();
    auto r = run({"search", "--index", p("idx.sphx"), "--query-vector", "0.6,0.8,0,0", "--lambda", "0.5", "--format",
                  "csv"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.substr(0, 10), "# config: ");
    EXPECT_NE(r.out.find("rank,doc_id,raw_count,score,true_inner\n1,img1,"), std::string::npos);

    r = run({"search", "--index", p("idx.sphx"), "--query-id", "img1", "--lambda", "0.8", "--nearest"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(r.out)["result"]["cutoff"]["mode"], "nearest");

    r = run({"search", "--index", p("idx.sphx"), "--query-id", "img1", "--lambda", "-0.5", "--nearest"});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(json::parse(r.err)["error"]["code"], "InvalidCutoff");

    r = run({"search", "--index", p("idx.sphx"), "--query-id", "nobody"});
    EXPECT_EQ(r.code, 1);
    r = run({"search", "--index", p("idx.sphx"), "--query-vector", "1,0"});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(json::parse(r.err)["error"]["code"], "DimensionMismatch");
}

TEST_F(Cli, UsageErrors)
{
    auto r = run({"search", "--index", p("missing.sphx"), "--query-id", "img1"});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(json::parse(r.err)["error"]["code"], "UsageError");
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"bogus"}).code, 2);
    EXPECT_EQ(run({"index"}).code, 2);
    EXPECT_EQ(run({"search", "--format", "xml"}).code, 2);
    EXPECT_EQ(run({"export-tokens", "--index", p("missing.sphx")}).code, 2);
    EXPECT_EQ(run({"ingest", "--output", p("x.csv")}).code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, ModuleErrors)
{
    std::ofstream(dir / "zero.csv") << "a,0,0\n";
    auto r = run({"ingest", "--input", p("zero.csv"), "--output", p("o.csv")});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(json::parse(r.err)["error"]["code"], "ZeroVector");
    std::ofstream(dir / "bad.sphx") << "not an index";
    r = run({"search", "--index", p("bad.sphx"), "--query-id", "x"});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(json::parse(r.err)["error"]["code"], "CorruptStream");
    r = run({"index", "--vectors", p("raw.csv"), "--q", "0.5", "--output", p("i.sphx")});
    EXPECT_EQ(r.code, 1);
}

TEST_F(Cli, ExportTokens)
{
    build_index();
    ASSERT_EQ(run({"export-tokens", "--index", p("idx.sphx"), "--output", p("tok.tsv")}).code, 0);
    std::ifstream in(dir / "tok.tsv");
    std::string line;
    std::size_t n = 0;
    const auto index = sphx::load_index_file(p("idx.sphx"));
    while (std::getline(in, line)) {
        const auto tab = line.find('\t');
        ASSERT_NE(tab, std::string::npos);
        const auto doc = index.find(line.substr(0, tab));
        ASSERT_TRUE(doc);
        EXPECT_EQ(sphx::parse_tokens(line.substr(tab + 1), 65536).k(), index.doc_k(*doc));
        ++n;
    }
    EXPECT_EQ(n, 201u);
}

TEST_F(Cli, SimulateAndTabulate)
{
    auto r = run({"simulate", "--mode", "sparsity", "--m", "4096", "--r", "0.5", "--trials", "50", "--seed", "3",
                  "--output", p("sim")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(slurp(dir / "sim.json"));
    EXPECT_EQ(j["config"]["seed"], 3);
    EXPECT_EQ(j["result"]["cells"].size(), 1u);
    EXPECT_EQ(slurp(dir / "sim.csv").substr(0, 10), "# config: ");
    const auto again = run({"simulate", "--mode", "sparsity", "--m", "4096", "--r", "0.5", "--trials", "50", "--seed",
                            "3"});
    EXPECT_EQ(body_of(again.out)["result"], j["result"]);

    r = run({"simulate", "--mode", "domination", "--m", "1024", "--lambda", "0.2", "--lambda-hi", "0.7",
             "--threshold-h", "1.5", "--trials", "50", "--d", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(json::parse(r.out)["result"]["all_pass"].get<bool>());

    r = run({"simulate", "--mode", "cdf", "--lambda", "-0.5", "--r", "0.5", "--trials", "10"});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(json::parse(r.err)["error"]["code"], "OutOfPhaseRegion");

    r = run({"tabulate", "--m", "65536", "--r", "0.45", "--csv", p("tab.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(json::parse(r.out)["result"][0]["eps_minus"].get<double>(), 0.06454413086071856, 1e-9);
    EXPECT_NE(slurp(dir / "tab.csv").find("lambda,h,m,r,mu,sigma,eps_minus,eps_plus"), std::string::npos);
}

TEST_F(Cli, Eval)
{
    build_index();
    std::ofstream(dir / "q.csv") << "q1,0.6,0.8,0,0\nq2,0,0,1,0\n";
    const auto r = run({"eval", "--index", p("idx.sphx"), "--vectors", p("vec.csv"), "--queries", p("q.csv"),
                        "--thresholds", "-1,0.5,0.9", "--lambda", "0.9", "--csv", p("pr.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["result"]["pr_curve"].size(), 3u);
    EXPECT_EQ(j["result"]["pr_curve"][0]["precision"], 1.0);
    const auto& ev = j["result"]["error_events"];
    EXPECT_EQ(ev["type_I"].get<int>() + ev["type_II"].get<int>() + ev["correct"].get<int>() + ev["gray"].get<int>(),
              2 * 201);
}

TEST(CliBinary, ExitCodes)
{
    const std::string bin = SPHX_CLI_PATH;
    auto status = [](const std::string& cmd) {
        const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    EXPECT_EQ(status(bin + " search --index /nonexistent/idx.sphx --query-id a"), 2);
    EXPECT_EQ(status(bin + " tabulate --m 1024 --r 0.5 --lambda 0.5"), 0);
    EXPECT_EQ(status(bin + " tabulate --m 1024 --r 0.5 --lambda 3"), 1);
}
