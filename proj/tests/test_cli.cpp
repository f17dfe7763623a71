#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::initializer_list<const char*> args) {
    std::vector<const char*> argv{"fle"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::ostringstream out;
    std::ostringstream err;
    const int code = fle::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string temp_path(const std::string& name) { return testing::TempDir() + name; }

}  // namespace

TEST(Cli, ExponentsRow) {
    const Outcome o = invoke({"exponents", "--n", "3", "--s", "0.5"});
    EXPECT_EQ(o.code, 0);
    EXPECT_EQ(o.out.substr(0, o.out.find('\n')), "n,s,p_S,p_c,tail_margin");
    EXPECT_NE(o.out.find("\n3,0.5,2,inf,"), std::string::npos) << o.out;
}

TEST(Cli, StabilityVerdict) {
    const Outcome o = invoke({"stability", "--n", "3", "--s", "0.5", "--p", "3"});
    EXPECT_EQ(o.code, 0);
    EXPECT_NE(o.out.find(",true,false\n"), std::string::npos) << o.out;
}

TEST(Cli, SeventeenDigitsAndNoLocale) {
    EXPECT_EQ(fle::io::format_real(0.1), "0.10000000000000001");
    EXPECT_EQ(fle::io::format_real(-std::numeric_limits<double>::infinity()), "-inf");
    EXPECT_EQ(fle::io::format_real(2.0), "2");
}

TEST(Cli, JsonFormat) {
    const Outcome o = invoke({"exponents", "--n", "3", "--s", "0.5", "--format", "json"});
    ASSERT_EQ(o.code, 0);
    const auto j = nlohmann::json::parse(o.out);
    EXPECT_EQ(j["rows"][0]["p_c"], "inf");
    EXPECT_EQ(j["rows"][0]["p_S"], 2.0);
}

TEST(Cli, InvalidParametersExitTwo) {
    EXPECT_EQ(invoke({"stability", "--n", "3", "--s", "1.5", "--p", "3"}).code, 2);
    EXPECT_EQ(invoke({"stability", "--n", "3", "--s", "0.5", "--p", "1.5"}).code, 2);
    EXPECT_EQ(invoke({"exponents", "--format", "xml"}).code, 2);
    EXPECT_EQ(invoke({"exponents", "--bogus", "1"}).code, 2);
    EXPECT_EQ(invoke({}).code, 2);
    const Outcome o = invoke({"minimal", "--lambda", "1.5"});
    EXPECT_EQ(o.code, 2);
    EXPECT_NE(o.err.find("--lambda"), std::string::npos);
}

TEST(Cli, SolverFailureExitsThree) {
    // So close to lambda = 1 a coarse grid cannot stay below the sampled singular solution.
    const Outcome o = invoke({"minimal", "--n", "10", "--s", "0.5", "--p", "4", "--lambda", "0.9999", "--grid-nr",
                              "16", "--grid-nt", "16"});
    EXPECT_EQ(o.code, 3);
    EXPECT_FALSE(o.err.empty());
}

TEST(Cli, MinimalFieldWithSidecar) {
    const std::string path = temp_path("fle_minimal.csv");
    const Outcome o = invoke({"minimal", "--n", "3", "--s", "0.5", "--p", "3", "--lambda", "0.3", "--grid-nr", "8",
                              "--grid-nt", "8", "--out", path.c_str()});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_TRUE(o.out.empty());
    const std::string csv = read_file(path);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "r,t,u");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 9 * 9);
    const auto meta = nlohmann::json::parse(read_file(path + ".json"));
    EXPECT_EQ(meta["lambda"], 0.3);
    EXPECT_GT(meta["sup"].get<double>(), 0.0);
    EXPECT_EQ(meta["nr"], 8);
}

TEST(Cli, Deterministic) {
    const std::initializer_list<const char*> args = {"fraclap", "--n", "3", "--s", "0.3", "--function", "bubble", "--r", "0", "0.5", "3"};
    const Outcome a = invoke(args);
    const Outcome b = invoke(args);
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 4);
}

TEST(Cli, ConfigOverridesFlags) {
    const std::string path = temp_path("fle_config.json");
    {
        std::ofstream f(path);
        f << R"({"n": 10, "s": 0.5})";
    }
    const Outcome o = invoke({"exponents", "--n", "3", "--config", path.c_str()});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_NE(o.out.find("\n10,0.5,"), std::string::npos) << o.out;
    {
        std::ofstream f(path);
        f << R"({"dimension": 3})";
    }
    EXPECT_EQ(invoke({"exponents", "--config", path.c_str()}).code, 2);
    EXPECT_EQ(invoke({"exponents", "--config", "/nonexistent/fle.json"}).code, 2);
}

TEST(Cli, VerifySubset) {
    const Outcome o = invoke({"verify", "--criteria", "1", "2", "12"});
    EXPECT_EQ(o.code, 0) << o.out;
    EXPECT_EQ(std::count(o.out.begin(), o.out.end(), '\n'), 4);
    EXPECT_EQ(invoke({"verify", "--criteria", "14"}).code, 2);
}
