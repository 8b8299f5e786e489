#include "sdekit/config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace {

using nlohmann::json;
using namespace sdekit;

TEST(RunConfigParse, EmptyDocumentYieldsDefaults) {
    RunConfig cfg = run_config_from_json(json::object());
    EXPECT_EQ(cfg.seed, 0u);
    EXPECT_EQ(cfg.symbol, "SYN");
    EXPECT_EQ(cfg.iterations, 15);
    EXPECT_EQ(cfg.retry_budget, 3);
    EXPECT_DOUBLE_EQ(cfg.sim.s0, 100.0);
    EXPECT_EQ(cfg.sim.horizon, 252u);
    EXPECT_EQ(cfg.calib.max_iters, 200);
    EXPECT_DOUBLE_EQ(cfg.risk.alpha, 0.95);
    EXPECT_EQ(cfg.backtest.lookback, 126);
    EXPECT_EQ(cfg.backtest.policy, PolicyKind::Rule);
    EXPECT_EQ(cfg.backtest.accounting, AccountingMode::CostAware);
    EXPECT_TRUE(cfg.agent.endpoint.empty());
}

TEST(RunConfigParse, FullDocumentSetsEveryField) {
    json doc = {
        {"seed", 42},
        {"symbol", "ACME"},
        {"paths", {{"prices", "p.csv"}, {"news", "n.json"}, {"output", "results"}}},
        {"sim", {{"s0", 50.0}, {"horizon", 100}, {"n_paths", 32}, {"dt", 0.01}, {"t0", 1.0}}},
        {"calib",
         {{"max_iters", 77},
          {"eta", 0.02},
          {"fd_eps", 1e-5},
          {"n_paths", 16},
          {"clamp_lo", -5.0},
          {"clamp_hi", 5.0},
          {"tol", 1e-7}}},
        {"risk", {{"alpha", 0.99}, {"horizon", 10}, {"threshold_q", 0.9}, {"n_paths", 500}}},
        {"discovery",
         {{"iterations", 6}, {"retry_budget", 2}, {"decay", 0.5}, {"floor", 2.0}}},
        {"backtest",
         {{"lookback", 60},
          {"recalib_window", 40},
          {"block", 10},
          {"news_lookback", 3},
          {"rsi_lookback", 9},
          {"kappa", 0.001},
          {"initial_cash", 5000.0},
          {"risk_free_annual", 0.02},
          {"evt_loss_limit", 0.1},
          {"accounting", "literal"},
          {"policy", "llm"}}},
        {"agent",
         {{"endpoint", "http://localhost:8080/v1"},
          {"model", "m1"},
          {"temperature", 0.7},
          {"max_tokens", 256},
          {"timeout_seconds", 5.0},
          {"retries", 1},
          {"backoff_seconds", 0.1},
          {"prompt_dir", "prompts"}}},
    };
    RunConfig cfg = run_config_from_json(doc);
    EXPECT_EQ(cfg.seed, 42u);
    EXPECT_EQ(cfg.symbol, "ACME");
    EXPECT_EQ(cfg.prices_path, "p.csv");
    EXPECT_EQ(cfg.news_path, "n.json");
    EXPECT_EQ(cfg.output_dir, "results");
    EXPECT_DOUBLE_EQ(cfg.sim.s0, 50.0);
    EXPECT_EQ(cfg.sim.horizon, 100u);
    EXPECT_EQ(cfg.sim.n_paths, 32u);
    EXPECT_DOUBLE_EQ(cfg.sim.dt, 0.01);
    EXPECT_DOUBLE_EQ(cfg.sim.t0, 1.0);
    EXPECT_EQ(cfg.calib.max_iters, 77);
    EXPECT_DOUBLE_EQ(cfg.calib.eta, 0.02);
    EXPECT_DOUBLE_EQ(cfg.calib.fd_eps, 1e-5);
    EXPECT_EQ(cfg.calib.n_paths, 16u);
    EXPECT_DOUBLE_EQ(cfg.calib.clamp_lo, -5.0);
    EXPECT_DOUBLE_EQ(cfg.calib.clamp_hi, 5.0);
    EXPECT_DOUBLE_EQ(cfg.calib.tol, 1e-7);
    EXPECT_DOUBLE_EQ(cfg.risk.alpha, 0.99);
    EXPECT_EQ(cfg.risk.horizon, 10u);
    EXPECT_DOUBLE_EQ(cfg.risk.threshold_q, 0.9);
    EXPECT_EQ(cfg.risk.n_paths, 500u);
    EXPECT_EQ(cfg.iterations, 6);
    EXPECT_EQ(cfg.retry_budget, 2);
    EXPECT_DOUBLE_EQ(cfg.scorer.decay, 0.5);
    EXPECT_DOUBLE_EQ(cfg.scorer.floor, 2.0);
    EXPECT_EQ(cfg.backtest.lookback, 60);
    EXPECT_EQ(cfg.backtest.recalib_window, 40);
    EXPECT_EQ(cfg.backtest.block, 10);
    EXPECT_EQ(cfg.backtest.news_lookback, 3);
    EXPECT_EQ(cfg.backtest.rsi_lookback, 9);
    EXPECT_DOUBLE_EQ(cfg.backtest.kappa, 0.001);
    EXPECT_DOUBLE_EQ(cfg.backtest.initial_cash, 5000.0);
    EXPECT_DOUBLE_EQ(cfg.backtest.risk_free_annual, 0.02);
    EXPECT_DOUBLE_EQ(cfg.backtest.evt_loss_limit, 0.1);
    EXPECT_EQ(cfg.backtest.accounting, AccountingMode::Literal);
    EXPECT_EQ(cfg.backtest.policy, PolicyKind::Llm);
    EXPECT_EQ(cfg.agent.endpoint, "http://localhost:8080/v1");
    EXPECT_EQ(cfg.agent.model, "m1");
    EXPECT_DOUBLE_EQ(cfg.agent.temperature, 0.7);
    EXPECT_EQ(cfg.agent.max_tokens, 256);
    EXPECT_DOUBLE_EQ(cfg.agent.timeout_seconds, 5.0);
    EXPECT_EQ(cfg.agent.retries, 1);
    EXPECT_DOUBLE_EQ(cfg.agent.backoff_seconds, 0.1);
    EXPECT_EQ(cfg.agent.prompt_dir, "prompts");
}

TEST(RunConfigParse, SharedSectionsFeedBacktestNestedConfigs) {
    json doc = {
        {"seed", 9},
        {"symbol", "XYZ"},
        {"calib", {{"max_iters", 33}, {"n_paths", 8}}},
        {"risk", {{"alpha", 0.9}}},
        {"discovery", {{"iterations", 4}, {"decay", 2.0}}},
    };
    RunConfig cfg = run_config_from_json(doc);
    EXPECT_EQ(cfg.backtest.seed, 9u);
    EXPECT_EQ(cfg.backtest.symbol, "XYZ");
    EXPECT_EQ(cfg.backtest.calib.max_iters, 33);
    EXPECT_EQ(cfg.backtest.calib.n_paths, 8u);
    EXPECT_DOUBLE_EQ(cfg.backtest.risk.alpha, 0.9);
    EXPECT_EQ(cfg.backtest.discovery.iterations, 4);
    EXPECT_EQ(cfg.backtest.discovery.calib.max_iters, 33);
    EXPECT_DOUBLE_EQ(cfg.backtest.discovery.scorer.decay, 2.0);
}

TEST(RunConfigParse, UnknownTopLevelKeyRejectedByName) {
    json doc = {{"sedd", 1}};
    try {
        run_config_from_json(doc);
        FAIL() << "expected rejection";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("unknown key \"sedd\""), std::string::npos)
            << e.what();
    }
}

TEST(RunConfigParse, UnknownNestedKeyRejectedWithDottedPath) {
    json doc = {{"backtest", {{"kapa", 0.001}}}};
    try {
        run_config_from_json(doc);
        FAIL() << "expected rejection";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("unknown key \"backtest.kapa\""),
                  std::string::npos)
            << e.what();
    }
}

TEST(RunConfigParse, WrongTypeNamesTheKey) {
    json doc = {{"seed", "seven"}};
    try {
        run_config_from_json(doc);
        FAIL() << "expected rejection";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("\"seed\""), std::string::npos) << e.what();
    }
    json doc2 = {{"sim", {{"horizon", -3}}}};
    EXPECT_THROW(run_config_from_json(doc2), std::runtime_error);
    json doc3 = {{"sim", 7}};
    EXPECT_THROW(run_config_from_json(doc3), std::runtime_error);
}

TEST(RunConfigParse, InvalidValuesRejected) {
    EXPECT_THROW(run_config_from_json(json{{"discovery", {{"iterations", 0}}}}),
                 std::runtime_error);
    EXPECT_THROW(run_config_from_json(json{{"risk", {{"alpha", 1.5}}}}),
                 std::runtime_error);
    EXPECT_THROW(run_config_from_json(json{{"backtest", {{"initial_cash", 0.0}}}}),
                 std::runtime_error);
    EXPECT_THROW(run_config_from_json(json{{"backtest", {{"accounting", "margin"}}}}),
                 std::runtime_error);
    EXPECT_THROW(run_config_from_json(json{{"backtest", {{"policy", "oracle"}}}}),
                 std::runtime_error);
    EXPECT_THROW(
        run_config_from_json(json{{"backtest", {{"lookback", 10}, {"recalib_window", 20}}}}),
        std::runtime_error);
}

TEST(RunConfigLoad, ReadsFileAndPrefixesErrorsWithPath) {
    const std::filesystem::path dir = ::testing::TempDir();
    const auto good = dir / "cfg_good.json";
    {
        std::ofstream out(good);
        out << R"({"seed": 3, "symbol": "AAA"})";
    }
    RunConfig cfg = load_run_config(good);
    EXPECT_EQ(cfg.seed, 3u);
    EXPECT_EQ(cfg.symbol, "AAA");

    const auto bad = dir / "cfg_bad.json";
    {
        std::ofstream out(bad);
        out << R"({"seed": )";
    }
    try {
        load_run_config(bad);
        FAIL() << "expected rejection";
    } catch (const std::runtime_error& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("cfg_bad.json"), std::string::npos) << what;
        EXPECT_NE(what.find("malformed JSON"), std::string::npos) << what;
    }

    try {
        load_run_config(dir / "cfg_missing.json");
        FAIL() << "expected rejection";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("cfg_missing.json"), std::string::npos)
            << e.what();
    }
}

TEST(RunConfigLoad, BundledFixtureLoads) {
    const std::filesystem::path root = SDEKIT_SOURCE_DIR;
    RunConfig cfg = load_run_config(root / "data" / "run_config.json");
    EXPECT_EQ(cfg.seed, 7u);
    EXPECT_EQ(cfg.symbol, "SYN");
    EXPECT_EQ(cfg.prices_path, "data/prices_cir.csv");
    EXPECT_EQ(cfg.news_path, "data/news_sample.json");
    EXPECT_EQ(cfg.iterations, 15);
    EXPECT_EQ(cfg.backtest.policy, PolicyKind::Rule);
    EXPECT_EQ(cfg.agent.prompt_dir, "assets/prompts");
    EXPECT_TRUE(std::filesystem::exists(root / cfg.prices_path));
    EXPECT_TRUE(std::filesystem::exists(root / cfg.news_path));
}

TEST(AgentSettings, ToRequestCopiesTransportFields) {
    AgentSettings a;
    a.endpoint = "http://h:1/v1";
    a.api_key = "k";
    a.model = "m";
    a.temperature = 0.3;
    a.max_tokens = 99;
    a.timeout_seconds = 2.5;
    a.retries = 4;
    a.backoff_seconds = 0.05;
    LlmRequest req = a.to_request();
    EXPECT_EQ(req.endpoint, "http://h:1/v1");
    EXPECT_EQ(req.api_key, "k");
    EXPECT_EQ(req.model, "m");
    EXPECT_DOUBLE_EQ(req.temperature, 0.3);
    EXPECT_EQ(req.max_tokens, 99);
    EXPECT_DOUBLE_EQ(req.timeout_seconds, 2.5);
    EXPECT_EQ(req.retries, 4);
    EXPECT_DOUBLE_EQ(req.backoff_seconds, 0.05);
}

}  // namespace
