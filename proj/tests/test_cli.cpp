#include "sdekit/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sdekit/data.hpp"
#include "sdekit/discovery.hpp"

namespace {

using namespace sdekit;

std::filesystem::path source_data(const std::string& name) {
    return std::filesystem::path(SDEKIT_SOURCE_DIR) / "data" / name;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::path(::testing::TempDir()) / name;
}

// Runs cli_main in-process with stdout captured.
int run_cli(const std::vector<std::string>& args, std::string* captured = nullptr) {
    std::vector<std::string> owned;
    owned.reserve(args.size() + 1);
    owned.emplace_back("sdekit");
    owned.insert(owned.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(owned.size());
    for (const auto& s : owned) argv.push_back(s.c_str());

    std::ostringstream sink;
    std::streambuf* old = std::cout.rdbuf(sink.rdbuf());
    int rc = -1;
    try {
        rc = cli_main(static_cast<int>(argv.size()), argv.data());
    } catch (...) {
        std::cout.rdbuf(old);
        throw;
    }
    std::cout.rdbuf(old);
    if (captured != nullptr) *captured = sink.str();
    return rc;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// First `rows` data rows of the bundled CIR fixture, as a fresh CSV.
std::filesystem::path sliced_prices(int rows, const std::string& name) {
    auto out_path = temp_path(name);
    std::ifstream in(source_data("prices_cir.csv"));
    std::ofstream out(out_path);
    std::string line;
    std::getline(in, line);
    out << line << '\n';
    for (int i = 0; i < rows && std::getline(in, line); ++i) out << line << '\n';
    return out_path;
}

// Config that keeps backtest discovery/calibration cheap enough for a test.
std::filesystem::path fast_config_file() {
    auto path = temp_path("cli_fast_config.json");
    std::ofstream out(path);
    out << R"({
  "seed": 5,
  "calib": {"max_iters": 25, "n_paths": 16},
  "risk": {"n_paths": 200},
  "discovery": {"iterations": 2}
})";
    return path;
}

TEST(CliUsage, HelpExitsZeroAndDocumentsExitCodes) {
    // --help writes to stdout via CLI11's own streams; exit code is the contract.
    EXPECT_EQ(run_cli({"--help"}), 0);
}

TEST(CliUsage, MissingSubcommandAndUnknownFlagExitTwo) {
    EXPECT_EQ(run_cli({}), 2);
    EXPECT_EQ(run_cli({"simulate", "dS = a*S dt", "--params", "a=1", "--no-such-flag"}), 2);
    EXPECT_EQ(run_cli({"frobnicate"}), 2);
}

TEST(CliErrors, MapDistinctExitCodes) {
    // Model text that does not parse: 4.
    EXPECT_EQ(run_cli({"simulate", "S = junk", "--params", "a=1"}), 4);
    // Missing data file: 3.
    EXPECT_EQ(run_cli({"calibrate", "dS = a*S dt + b*S dW", "--data", "/no/such/file.csv"}),
              3);
    // Incomplete parameter list: 9.
    EXPECT_EQ(run_cli({"risk", "dS = a*S dt + b*S dW", "--params", "a=0.05", "--data",
                       source_data("prices_cir.csv").string()}),
              9);
    // Config file with an unknown key: 3.
    auto bad_cfg = temp_path("cli_bad_config.json");
    std::ofstream(bad_cfg) << R"({"sedd": 1})";
    EXPECT_EQ(run_cli({"--config", bad_cfg.string(), "baseline", "--data",
                       source_data("prices_cir.csv").string()}),
              3);
}

TEST(CliSimulate, WritesEnsembleCsvDeterministically) {
    auto out_a = temp_path("sim_a.csv");
    auto out_b = temp_path("sim_b.csv");
    std::string text;
    int rc = run_cli({"simulate", "dS = a*S dt + b*S dW", "--params", "a=0.05,b=0.2",
                      "--seed", "7", "--paths", "4", "--horizon", "10", "--output",
                      out_a.string()},
                     &text);
    ASSERT_EQ(rc, 0);
    EXPECT_NE(text.find("ensemble CSV written"), std::string::npos);
    ASSERT_EQ(run_cli({"simulate", "dS = a*S dt + b*S dW", "--params", "a=0.05,b=0.2",
                       "--seed", "7", "--paths", "4", "--horizon", "10", "--output",
                       out_b.string()}),
              0);
    std::string a = read_file(out_a);
    EXPECT_EQ(a, read_file(out_b));

    std::istringstream in(a);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "step,t,path_0,path_1,path_2,path_3");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    EXPECT_EQ(rows, 11);  // horizon 10 -> steps 0..10

    auto out_c = temp_path("sim_c.csv");
    ASSERT_EQ(run_cli({"simulate", "dS = a*S dt + b*S dW", "--params", "a=0.05,b=0.2",
                       "--seed", "8", "--paths", "4", "--horizon", "10", "--output",
                       out_c.string()}),
              0);
    EXPECT_NE(a, read_file(out_c));  // seed participates
}

TEST(CliSimulate, StdoutWhenOutputIsDash) {
    std::string text;
    int rc = run_cli({"simulate", "dS = a*S dt + b*S dW", "--params", "a=0.05,b=0.2",
                      "--seed", "7", "--paths", "2", "--horizon", "3"},
                     &text);
    ASSERT_EQ(rc, 0);
    EXPECT_EQ(text.rfind("step,t,path_0,path_1", 0), 0u) << text;
}

TEST(CliCalibrate, FitsBundledFixture) {
    std::string text;
    int rc = run_cli({"calibrate", "dS = a*(b - S) dt + c*sqrt(S) dW", "--data",
                      source_data("prices_cir.csv").string(), "--max-iters", "40"},
                     &text);
    ASSERT_EQ(rc, 0) << text;
    EXPECT_NE(text.find("model: dS = a*(b-S) dt + c*sqrt(S) dW"), std::string::npos);
    EXPECT_NE(text.find("observations: 301"), std::string::npos);
    EXPECT_NE(text.find("loss:"), std::string::npos);
    EXPECT_NE(text.find("params: a="), std::string::npos);
}

TEST(CliCalibrate, WritesJsonFit) {
    auto out = temp_path("fit.json");
    int rc = run_cli({"calibrate", "dS = a*S dt + b*S dW", "--data",
                      source_data("prices_cir.csv").string(), "--max-iters", "20",
                      "--output", out.string()});
    ASSERT_EQ(rc, 0);
    auto j = nlohmann::json::parse(read_file(out));
    EXPECT_EQ(j["model"], "dS = a*S dt + b*S dW");
    EXPECT_TRUE(j["params"].contains("a"));
    EXPECT_TRUE(j["params"].contains("b"));
    EXPECT_TRUE(j.contains("loss"));
    EXPECT_TRUE(j["trace"].is_array());
}

TEST(CliDiscover, OfflineFifteenIterationsSelectsTheGeneratingModel) {
    auto memory_path = temp_path("cli_memory.jsonl");
    std::filesystem::remove(memory_path);
    std::string text;
    int rc = run_cli({"--offline", "--iterations", "15", "--seed", "0", "discover", "--data",
                      source_data("prices_cir.csv").string(), "--memory",
                      memory_path.string()},
                     &text);
    ASSERT_EQ(rc, 0) << text;
    EXPECT_NE(text.find("best: dS = a*(b-S) dt + c*sqrt(S) dW"), std::string::npos) << text;

    std::ifstream in(memory_path);
    auto records = load_records(in);
    EXPECT_EQ(records.size(), 15u);
    EXPECT_EQ(records[0].source, "dS = a*S dt + b*S dW");  // the forced baseline
}

TEST(CliDiscover, ResumeContinuesWithoutRetesting) {
    auto memory_path = temp_path("cli_resume.jsonl");
    std::filesystem::remove(memory_path);
    ASSERT_EQ(run_cli({"--offline", "--iterations", "2", "discover", "--data",
                       source_data("prices_cir.csv").string(), "--memory",
                       memory_path.string()}),
              0);
    std::string text;
    int rc = run_cli({"--offline", "--iterations", "5", "discover", "--data",
                      source_data("prices_cir.csv").string(), "--resume",
                      memory_path.string(), "--memory", memory_path.string()},
                     &text);
    ASSERT_EQ(rc, 0) << text;
    EXPECT_NE(text.find("resumed 2 records"), std::string::npos);

    std::ifstream in(memory_path);
    auto records = load_records(in);
    ASSERT_EQ(records.size(), 5u);  // 2 from the first run + 3 appended
    std::set<std::string> sources;
    for (const auto& r : records) sources.insert(r.source);
    EXPECT_EQ(sources.size(), records.size());  // nothing re-tested
}

TEST(CliRisk, WritesJsonReport) {
    auto out = temp_path("risk.json");
    std::string text;
    int rc = run_cli({"--seed", "11", "risk", "dS = a*S dt + b*S dW", "--params",
                      "a=0.05,b=0.2", "--data", source_data("prices_cir.csv").string(),
                      "--paths", "500", "--output", out.string()},
                     &text);
    ASSERT_EQ(rc, 0) << text;
    EXPECT_NE(text.find("VaR:"), std::string::npos);
    EXPECT_NE(text.find("CVaR:"), std::string::npos);
    auto j = nlohmann::json::parse(read_file(out));
    EXPECT_GT(j["var"].get<double>(), 0.0);
    EXPECT_GE(j["cvar"].get<double>(), j["var"].get<double>());
    EXPECT_EQ(j["n_paths"], 500);
}

TEST(CliBaseline, ReportsTrendFixturePnl) {
    std::string text;
    int rc = run_cli({"baseline", "--data", source_data("prices_trend.csv").string()}, &text);
    ASSERT_EQ(rc, 0);
    EXPECT_NE(text.find("days: 253"), std::string::npos) << text;
    EXPECT_NE(text.find("buy-and-hold: pnl=370.79"), std::string::npos) << text;
}

TEST(CliBacktest, OfflineRunWritesResultDirAndReportRendersIt) {
    auto data = sliced_prices(160, "cli_bt_prices.csv");
    auto out_dir = temp_path("cli_bt_out");
    std::filesystem::remove_all(out_dir);
    std::string text;
    int rc = run_cli({"--offline", "--config", fast_config_file().string(), "backtest",
                      "--data", data.string(), "--news",
                      source_data("news_sample.json").string(), "--out", out_dir.string()},
                     &text);
    ASSERT_EQ(rc, 0) << text;
    EXPECT_NE(text.find("days traded: 34"), std::string::npos) << text;
    EXPECT_NE(text.find("strategy: pnl="), std::string::npos);
    EXPECT_NE(text.find("buy-and-hold: pnl="), std::string::npos);

    auto result = nlohmann::json::parse(read_file(out_dir / "result.json"));
    EXPECT_FALSE(result["failed"].get<bool>());
    EXPECT_EQ(result["days"], 34);
    EXPECT_EQ(result["config"]["policy"], "rule");

    std::string report_text;
    ASSERT_EQ(run_cli({"report", out_dir.string()}, &report_text), 0);
    EXPECT_NE(report_text.find("# Backtest report"), std::string::npos);
    EXPECT_TRUE(std::filesystem::exists(out_dir / "report.md"));
    EXPECT_TRUE(std::filesystem::exists(out_dir / "drawdown.csv"));
    EXPECT_TRUE(std::filesystem::exists(out_dir / "discovery_losses.csv"));

    // report is a pure function of the directory
    std::string again;
    ASSERT_EQ(run_cli({"report", out_dir.string()}, &again), 0);
    EXPECT_EQ(report_text, again);
}

TEST(CliBacktest, LlmPolicyFallsBackToRuleWhenOffline) {
    auto data = sliced_prices(150, "cli_bt_llm_prices.csv");
    auto out_dir = temp_path("cli_bt_llm_out");
    std::filesystem::remove_all(out_dir);
    int rc = run_cli({"--offline", "--config", fast_config_file().string(), "backtest",
                      "--data", data.string(), "--policy", "llm", "--out",
                      out_dir.string()});
    ASSERT_EQ(rc, 0);
    auto result = nlohmann::json::parse(read_file(out_dir / "result.json"));
    EXPECT_EQ(result["config"]["policy"], "rule");
}

TEST(CliOffline, IgnoresConfiguredEndpointAndStaysLocal) {
    ASSERT_EQ(setenv("LLM_ENDPOINT", "http://127.0.0.1:9/v1", 1), 0);
    std::string text;
    int rc = run_cli({"--offline", "--iterations", "2", "discover", "--data",
                      source_data("prices_cir.csv").string()},
                     &text);
    ASSERT_EQ(unsetenv("LLM_ENDPOINT"), 0);
    ASSERT_EQ(rc, 0) << text;  // a network attempt would exit 7
    EXPECT_NE(text.find("best:"), std::string::npos);
}

TEST(CliOnline, UnreachableEndpointSurfacesTransportError) {
    std::string text;
    int rc = run_cli({"--llm-endpoint", "http://127.0.0.1:9/v1", "--iterations", "3",
                      "discover", "--data", source_data("prices_cir.csv").string()},
                     &text);
    EXPECT_EQ(rc, 7);
}

}  // namespace
