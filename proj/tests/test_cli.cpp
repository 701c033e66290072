#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = pbs::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> v;
    std::istringstream is(s);
    for (std::string l; std::getline(is, l);) v.push_back(l);
    return v;
}

const std::vector<std::string> kQuote{"quote", "--spot", "100", "--strike", "100", "--mat", "1", "--vol", "0.2",
                                      "--gamma", "0.04", "--bias", "0", "--eps", "0.01", "--alpha", "0.1"};

TEST(Cli, QuoteJsonIsSymmetric) {
    auto args = kQuote;
    args.insert(args.end(), {"--format", "json"});
    const auto r = run(args);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    const auto& q = j["results"][0];
    EXPECT_NEAR(q["bid"].get<double>() + q["ask"].get<double>(), 2.0 * q["mid"].get<double>(), 1e-12);
    EXPECT_EQ(j["command"], "quote");
    EXPECT_EQ(j["config"]["alpha"].get<double>(), 0.1);
    EXPECT_EQ(j["config"]["gamma"].get<double>(), 0.04);
}

TEST(Cli, CsvHasHeaderAndFifteenDigits) {
    const auto r = run(kQuote);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto l = lines(r.out);
    ASSERT_EQ(l.size(), 2u);
    EXPECT_EQ(l[0], "strike,maturity,bid,mid,ask,spread,alpha");
    EXPECT_EQ(r.out.find('\r'), std::string::npos);
    // The mid is 7.96556745540580 + eps * A: fifteen significant digits at most.
    std::istringstream row(l[1]);
    std::string field;
    for (int i = 0; i < 4; ++i) std::getline(row, field, ',');
    std::string digits;
    for (char ch : field) {
        if (std::isdigit(static_cast<unsigned char>(ch))) digits += ch;
    }
    EXPECT_LE(digits.size(), 15u);
}

TEST(Cli, ByteIdenticalReruns) {
    EXPECT_EQ(run(kQuote).out, run(kQuote).out);
}

TEST(Cli, SmileThresholdPreset) {
    const auto r = run({"smile", "--spot", "100", "--mat", "1", "--vol", "0.3", "--gamma", "0.09", "--rr",
                        "smile-threshold", "--eps", "0.01", "--k-lo", "0.9", "--k-hi", "1.1111111111111112",
                        "--n-strikes", "21"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto l = lines(r.out);
    ASSERT_EQ(l.size(), 22u);
    auto iv = [&](int i) {
        std::istringstream row(l[static_cast<std::size_t>(i) + 1]);
        std::string f;
        for (int k = 0; k < 4; ++k) std::getline(row, f, ',');
        return std::stod(f);
    };
    EXPECT_NEAR(iv(10), 0.3, 1e-8);
    EXPECT_GT(iv(9), 0.3);
    EXPECT_GT(iv(11), 0.3);
}

TEST(Cli, RelativeIndexAndBiasMustAgree) {
    // r_r = 0.0225 with Gamma = 0.09 at X = 0.3 means A = 0.003375.
    const std::vector<std::string> base{"price", "--spot", "100", "--strike", "100", "--mat", "1", "--vol", "0.3",
                                        "--gamma", "0.09", "--eps", "0.01", "--rr", "0.0225"};
    auto ok = base;
    ok.insert(ok.end(), {"--bias", "0.003375"});
    EXPECT_EQ(run(ok).code, 0);
    auto bad = base;
    bad.insert(bad.end(), {"--bias", "0.004"});
    const auto r = run(bad);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("contradicts"), std::string::npos);
}

TEST(Cli, ValidationReportsEveryProblem) {
    const auto r = run({"quote", "--spot", "-1", "--mat", "1"});
    EXPECT_EQ(r.code, 2);
    EXPECT_GE(lines(r.err).size(), 4u);  // strike, vol, gamma, eps, alpha missing; spot negative
}

TEST(Cli, UnknownFlagAndCommand) {
    EXPECT_EQ(run({"quote", "--bogus", "1"}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({}).code, 2);
}

TEST(Cli, PositivityViolationIsNumericExit) {
    const auto r = run({"localvol", "--spot", "100", "--mat", "1", "--vol", "0.3", "--gamma", "0.09", "--eps", "3"});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("margin"), std::string::npos);
}

TEST(Cli, LocalVolGrid) {
    const auto r = run({"localvol", "--spot", "100", "--mat", "1", "--vol", "0.3", "--gamma", "0.09", "--eps",
                        "0.01", "--n-strikes", "5", "--maturities", "0.5,1,2", "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["results"].size(), 15u);
    EXPECT_EQ(j["config"]["maturities"].size(), 3u);
}

TEST(Cli, UtilityTable) {
    const auto r = run({"utility", "--utility", "normal-half", "--x-lo", "0.1", "--x-hi", "2", "--n-x", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto l = lines(r.out);
    ASSERT_EQ(l.size(), 6u);
    EXPECT_EQ(l[0], "x,u,u1,u2,rho,r_a,r_r");
    EXPECT_EQ(run({"utility", "--utility", "nope"}).code, 2);
}

TEST(Cli, VerifySuiteExitCodes) {
    EXPECT_EQ(run({"verify", "--suite", "greeks"}).code, 0);
    EXPECT_EQ(run({"verify", "--suite", "nope"}).code, 2);
}

TEST(Cli, SimulateReport) {
    const auto r = run({"simulate", "--spot", "100", "--strike", "100", "--mat", "1", "--vol", "0.2", "--gamma",
                        "0.04", "--eps", "0.01", "--n-paths", "500", "--n-draws", "50", "--n-steps", "32", "--format",
                        "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j["results"].size(), 2u);
    EXPECT_EQ(j["results"][0]["check"], "bias");
    EXPECT_TRUE(j["results"][0].contains("std_error"));
    EXPECT_TRUE(j["results"][0].contains("pass"));
}

TEST(Cli, AtomicFileOutput) {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "pbs_cli_test_quote.csv";
    fs::remove(path);
    auto args = kQuote;
    args.insert(args.end(), {"--out", path.string()});
    const auto r = run(args);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    EXPECT_EQ(ss.str(), run(kQuote).out);
    EXPECT_FALSE(fs::exists(fs::path(path.string() + ".tmp")));
    fs::remove(path);
}

TEST(Cli, Help) {
    const auto r = run({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("quote"), std::string::npos);
}

}  // namespace
