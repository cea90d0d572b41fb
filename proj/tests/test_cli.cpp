#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "stlmon/cli.hpp"

using namespace stlmon;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "stlmon");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string source(const std::string& rel) { return std::string(STLMON_SOURCE_DIR) + "/" + rel; }

std::filesystem::path temp_file(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("stlmon_test_" + name);
}

} // namespace

TEST(Cli, VerifyWorkedExample)
{
    const CliRun r = invoke({"verify", "--model", "timer", "--formula", "F[0,6.284](cos(x)<0 & sin(x)<0)", "--dump-sets",
                       "--no-timing"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["outcome"], "Valid");
    EXPECT_TRUE(j["unknown_cause"].is_null());
    EXPECT_FALSE(j.contains("time_s"));
    const auto& result = j["result"];
    ASSERT_EQ(result.size(), 2u);
    EXPECT_EQ(result[0]["lo"], 0.0);
    EXPECT_EQ(result[0]["hi"], 0.0);
    EXPECT_EQ(result[0]["polarity"], true);
    EXPECT_GE(result[1]["lo"].get<double>(), 4.71);
    EXPECT_LE(result[1]["hi"].get<double>(), 4.72);
    EXPECT_EQ(result[1]["polarity"], false);
    ASSERT_EQ(j["atom_sets"].size(), 2u);
    EXPECT_EQ(j["atom_sets"][0]["formula"], "(cos(x) < 0)");
}

TEST(Cli, VerifyRotationPinned)
{
    const CliRun r = invoke({"verify", "--model", source("models/rotation.model"), "--param", "u1=0.05,0.05",
                       "--formula-file", source("formulas/rotation1_g10.stl")});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    const CliRun n = invoke({"verify", "--model", "rotation", "--param", "u1=-0.05", "--formula-file",
                       source("formulas/rotation1_g10.stl")});
    EXPECT_EQ(n.code, 1) << n.out;
}

TEST(Cli, VerifyAmbiguity)
{
    const CliRun r = invoke({"verify", "--model", "timer", "--formula", "F[0,3] !((x-1<0)|(1-x<0))"});
    ASSERT_EQ(r.code, 2);
    EXPECT_EQ(nlohmann::json::parse(r.out)["unknown_cause"], "PropagationError");
}

TEST(Cli, UsageAndIoErrors)
{
    const CliRun parse = invoke({"verify", "--model", "timer", "--formula", "F[0,1] (x <= 1)"});
    EXPECT_EQ(parse.code, 64);
    EXPECT_NE(parse.err.find("1:"), std::string::npos) << parse.err;
    EXPECT_EQ(invoke({"verify", "--model", "timer"}).code, 64);
    EXPECT_EQ(invoke({"verify", "--formula", "x < 1"}).code, 64);
    EXPECT_EQ(invoke({"frobnicate"}).code, 64);
    EXPECT_EQ(invoke({"verify", "--model", "rotation", "--param", "v=1", "--formula", "x1 < 1"}).code, 64);
    EXPECT_EQ(invoke({"verify", "--model", "no/such/model", "--formula", "x < 1"}).code, 66);
    EXPECT_EQ(invoke({"verify", "--model", "timer", "--formula-file", "no/such/file"}).code, 66);
    const CliRun help = invoke({"--help"});
    EXPECT_EQ(help.code, 0);
    EXPECT_NE(help.out.find("verify"), std::string::npos);
}

TEST(Cli, VerifyWritesTrace)
{
    const auto path = temp_file("verify_trace.csv");
    const CliRun r = invoke({"verify", "--model", "timer", "--formula", "F[0,2] x > 1", "--trace", path.string()});
    EXPECT_EQ(r.code, 0);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "t_lo,t_hi,x_lo,x_hi");
    std::filesystem::remove(path);
}

// Every bundled formula on its model, with the exit code matching the verdict.
TEST(Cli, GoldenCorpus)
{
    struct Golden {
        std::vector<std::string> args;
        int code;
        const char* outcome;
    };
    std::vector<Golden> corpus{
        {{"--model", "timer", "--formula-file", source("formulas/timer_trig.stl")}, 0, "Valid"},
        {{"--model", "timer", "--formula-file", source("formulas/timer_ambiguous.stl")}, 2, "Unknown"},
        {{"--model", "lorenz", "--param", "u1=10", "--param", "u2=28", "--param", "u3=2.5", "--formula-file",
          source("formulas/lorenz.stl")},
         0,
         "Valid"},
    };
    for (int row = 1; row <= 4; ++row) {
        for (const char* g : {"10", "100"}) {
            const std::string f = source("formulas/rotation" + std::to_string(row) + "_g" + g + ".stl");
            corpus.push_back({{"--model", "rotation", "--param", "u1=0.05", "--formula-file", f}, 0, "Valid"});
            corpus.push_back({{"--model", "rotation", "--param", "u1=-0.05", "--formula-file", f}, 1, "Unsat"});
        }
    }
    for (const auto& g : corpus) {
        std::vector<std::string> args{"verify", "--no-timing", "--dump-sets"};
        args.insert(args.end(), g.args.begin(), g.args.end());
        const CliRun r = invoke(args);
        const auto j = nlohmann::json::parse(r.out);
        EXPECT_EQ(j["outcome"], g.outcome) << g.args.back() << " " << j.value("message", "");
        EXPECT_EQ(r.code, g.code) << g.args.back();
        const int expected_code = j["outcome"] == "Valid" ? 0 : j["outcome"] == "Unsat" ? 1 : 2;
        EXPECT_EQ(r.code, expected_code);
        EXPECT_EQ(j["unknown_cause"].is_null(), j["outcome"] != "Unknown");
    }
}

TEST(Cli, BatchIsDeterministic)
{
    const std::vector<std::string> args{"batch",  "--model", "rotation", "--formula-file",
                                        source("formulas/rotation1_g10.stl"), "--runs", "12", "--seed", "5",
                                        "--widen", "2e-3", "--no-timing", "--per-run"};
    const CliRun a = invoke(args);
    auto threaded = args;
    threaded.insert(threaded.end(), {"--threads", "3"});
    const CliRun b = invoke(threaded);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    const auto j = nlohmann::json::parse(a.out);
    EXPECT_EQ(j["rng"], cli::rng_name);
    EXPECT_EQ(j["runs"], 12);
    EXPECT_EQ(j["n_valid"].get<int>() + j["n_unsat"].get<int>() + j["n_unknown"].get<int>(), 12);
    int by_cause = 0;
    for (const auto& [k, v] : j["n_unknown_by_cause"].items()) {
        by_cause += v.get<int>();
    }
    EXPECT_EQ(by_cause, j["n_unknown"].get<int>());
    for (const auto& run : j["per_run"]) {
        const double u = run["sample"][0];
        const double lo = run["box"][0][0];
        const double hi = run["box"][0][1];
        EXPECT_LE(lo, u - 1e-3);
        EXPECT_GE(hi, u + 1e-3);
        EXPECT_LT(hi - lo, 2e-3 + 1e-15);
    }
}

TEST(Cli, SingleRunBatchEqualsVerify)
{
    const CliRun b = invoke({"batch", "--model", "rotation", "--formula-file", source("formulas/rotation2_g10.stl"),
                       "--runs", "1", "--seed", "99", "--per-run", "--no-timing"});
    ASSERT_EQ(b.code, 0);
    const auto j = nlohmann::json::parse(b.out);
    const double u = j["per_run"][0]["sample"][0];
    char buf[64];
    std::snprintf(buf, sizeof buf, "u1=%.17g", u);
    const CliRun v = invoke({"verify", "--model", "rotation", "--param", buf, "--formula-file",
                       source("formulas/rotation2_g10.stl"), "--no-timing"});
    EXPECT_EQ(nlohmann::json::parse(v.out)["outcome"], j["per_run"][0]["outcome"]);
}

TEST(Cli, SamplerIsStable)
{
    // Fixed outputs of the recorded RNG scheme.
    const IntervalBox dom{Interval(-0.1, 0.1)};
    const auto a = cli::sample_params(dom, 0, 0);
    const auto b = cli::sample_params(dom, 0, 0);
    EXPECT_EQ(a, b);
    EXPECT_NE(cli::sample_params(dom, 0, 1), a);
    EXPECT_NE(cli::sample_params(dom, 1, 0), a);
    std::mt19937_64 gen(cli::splitmix64(0));
    EXPECT_EQ(a[0], -0.1 + static_cast<double>(gen() >> 11) * 0x1.0p-53 * 0.2);
}

TEST(Cli, TraceCommand)
{
    const CliRun timer = invoke({"trace", "--model", "timer", "--horizon", "10"});
    ASSERT_EQ(timer.code, 0);
    std::istringstream in(timer.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t_lo,t_hi,x_lo,x_hi");
    std::string last;
    while (std::getline(in, line)) {
        last = line;
    }
    EXPECT_EQ(last.substr(0, 6), "10,10,");

    const CliRun rot = invoke({"trace", "--model", "rotation", "--param", "u1=0", "--horizon", "6.283185307179586"});
    ASSERT_EQ(rot.code, 0);
    std::istringstream rin(rot.out);
    while (std::getline(rin, line)) {
        last = line;
    }
    double v[6];
    ASSERT_EQ(std::sscanf(last.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2], &v[3], &v[4], &v[5]), 6);
    EXPECT_LE(v[2], 1.0);
    EXPECT_GE(v[3], 1.0);
    EXPECT_LE(v[4], 0.0);
    EXPECT_GE(v[5], 0.0);

    const auto path = temp_file("lorenz.csv");
    const CliRun lz = invoke({"trace", "--model", "lorenz", "--param", "u1=10", "--param", "u2=28", "--param", "u3=2.5",
                        "--horizon", "40", "--output", path.string()});
    EXPECT_EQ(lz.code, 3);
    const auto pos = lz.err.find("reached horizon: ");
    ASSERT_NE(pos, std::string::npos) << lz.err;
    const double reached = std::stod(lz.err.substr(pos + 17));
    EXPECT_GE(reached, 21.0);
    EXPECT_LE(reached, 40.0);
    EXPECT_GT(std::filesystem::file_size(path), 0u);
    std::filesystem::remove(path);
}
