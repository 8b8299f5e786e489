#pragma once

// Run configuration: one JSON document wiring every module's knobs, validated
// on load with unknown keys rejected by dotted path.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "sdekit/backtest.hpp"
#include "sdekit/calibrate.hpp"
#include "sdekit/discovery.hpp"
#include "sdekit/llm.hpp"
#include "sdekit/risk.hpp"
#include "sdekit/simulate.hpp"

namespace sdekit {

struct AgentSettings {
    std::string endpoint;  // empty means offline
    std::string model = "default";
    std::string api_key;
    double temperature = 0.2;
    int max_tokens = 1024;
    double timeout_seconds = 30.0;
    int retries = 2;
    double backoff_seconds = 0.25;
    std::filesystem::path prompt_dir;

    [[nodiscard]] LlmRequest to_request() const {
        LlmRequest req;
        req.endpoint = endpoint;
        req.api_key = api_key;
        req.model = model;
        req.temperature = temperature;
        req.max_tokens = max_tokens;
        req.timeout_seconds = timeout_seconds;
        req.retries = retries;
        req.backoff_seconds = backoff_seconds;
        return req;
    }
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::string symbol = "SYN";
    std::filesystem::path prices_path;
    std::filesystem::path news_path;
    std::filesystem::path output_dir = "out";
    SimConfig sim;
    CalibConfig calib;
    RiskConfig risk;
    int iterations = 15;  // discovery iterations
    int retry_budget = 3;
    ScorerWeights scorer;
    BacktestConfig backtest;
    AgentSettings agent;
};

namespace detail {

// Tracks which keys of one JSON object were consumed; anything left over is an
// unknown key reported with its dotted path.
class JsonSection {
public:
    JsonSection(const nlohmann::json& j, std::string path)
        : j_(&j), path_(std::move(path)) {
        if (!j.is_object())
            throw std::runtime_error("config: " + path_ + " must be a JSON object");
    }

    [[nodiscard]] bool has(const char* key) const { return j_->contains(key); }

    [[nodiscard]] const nlohmann::json& child(const char* key) {
        seen_.insert(key);
        return (*j_)[key];
    }

    void number(const char* key, double& target) {
        if (!take(key)) return;
        const auto& v = (*j_)[key];
        if (!v.is_number()) throw type_error(key, "a number");
        target = v.get<double>();
    }

    void integer(const char* key, int& target) {
        if (!take(key)) return;
        const auto& v = (*j_)[key];
        if (!v.is_number_integer()) throw type_error(key, "an integer");
        target = v.get<int>();
    }

    void size(const char* key, std::size_t& target) {
        if (!take(key)) return;
        const auto& v = (*j_)[key];
        if (!is_nonnegative_integer(v)) throw type_error(key, "a non-negative integer");
        target = v.get<std::size_t>();
    }

    void uint64(const char* key, std::uint64_t& target) {
        if (!take(key)) return;
        const auto& v = (*j_)[key];
        if (!is_nonnegative_integer(v)) throw type_error(key, "a non-negative integer");
        target = v.get<std::uint64_t>();
    }

    void string(const char* key, std::string& target) {
        if (!take(key)) return;
        const auto& v = (*j_)[key];
        if (!v.is_string()) throw type_error(key, "a string");
        target = v.get<std::string>();
    }

    void file_path(const char* key, std::filesystem::path& target) {
        std::string s = target.string();
        string(key, s);
        target = s;
    }

    // Call after all known keys have been consumed.
    void finish() const {
        for (const auto& [key, value] : j_->items()) {
            if (seen_.count(key) == 0)
                throw std::runtime_error("config: unknown key \"" + dotted(key) + "\"");
        }
    }

    [[nodiscard]] std::string dotted(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    [[nodiscard]] static bool is_nonnegative_integer(const nlohmann::json& v) {
        if (v.is_number_unsigned()) return true;
        return v.is_number_integer() && v.get<std::int64_t>() >= 0;
    }

    bool take(const char* key) {
        if (!j_->contains(key)) return false;
        seen_.insert(key);
        return true;
    }

    [[nodiscard]] std::runtime_error type_error(const char* key, const char* want) const {
        return std::runtime_error("config: key \"" + dotted(key) + "\" must be " + want);
    }

    const nlohmann::json* j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace detail

inline AccountingMode parse_accounting(const std::string& name) {
    if (name == "literal") return AccountingMode::Literal;
    if (name == "cost-aware") return AccountingMode::CostAware;
    throw std::runtime_error("config: accounting must be \"literal\" or \"cost-aware\", got \"" +
                             name + "\"");
}

inline PolicyKind parse_policy_kind(const std::string& name) {
    if (name == "rule") return PolicyKind::Rule;
    if (name == "llm") return PolicyKind::Llm;
    throw std::runtime_error("config: policy must be \"rule\" or \"llm\", got \"" + name +
                             "\"");
}

inline RunConfig run_config_from_json(const nlohmann::json& doc) {
    RunConfig cfg;
    detail::JsonSection root(doc, "");
    root.uint64("seed", cfg.seed);
    root.string("symbol", cfg.symbol);

    if (root.has("paths")) {
        detail::JsonSection s(root.child("paths"), "paths");
        s.file_path("prices", cfg.prices_path);
        s.file_path("news", cfg.news_path);
        s.file_path("output", cfg.output_dir);
        s.finish();
    }
    if (root.has("sim")) {
        detail::JsonSection s(root.child("sim"), "sim");
        s.number("s0", cfg.sim.s0);
        s.size("horizon", cfg.sim.horizon);
        s.size("n_paths", cfg.sim.n_paths);
        s.number("dt", cfg.sim.dt);
        s.number("t0", cfg.sim.t0);
        s.finish();
    }
    if (root.has("calib")) {
        detail::JsonSection s(root.child("calib"), "calib");
        s.integer("max_iters", cfg.calib.max_iters);
        s.number("eta", cfg.calib.eta);
        s.number("fd_eps", cfg.calib.fd_eps);
        s.size("n_paths", cfg.calib.n_paths);
        s.number("clamp_lo", cfg.calib.clamp_lo);
        s.number("clamp_hi", cfg.calib.clamp_hi);
        s.number("tol", cfg.calib.tol);
        s.finish();
    }
    if (root.has("risk")) {
        detail::JsonSection s(root.child("risk"), "risk");
        s.number("alpha", cfg.risk.alpha);
        s.size("horizon", cfg.risk.horizon);
        s.number("threshold_q", cfg.risk.threshold_q);
        s.size("n_paths", cfg.risk.n_paths);
        s.finish();
    }
    if (root.has("discovery")) {
        detail::JsonSection s(root.child("discovery"), "discovery");
        s.integer("iterations", cfg.iterations);
        s.integer("retry_budget", cfg.retry_budget);
        s.number("decay", cfg.scorer.decay);
        s.number("floor", cfg.scorer.floor);
        s.finish();
    }
    if (root.has("backtest")) {
        detail::JsonSection s(root.child("backtest"), "backtest");
        s.integer("lookback", cfg.backtest.lookback);
        s.integer("recalib_window", cfg.backtest.recalib_window);
        s.integer("block", cfg.backtest.block);
        s.integer("news_lookback", cfg.backtest.news_lookback);
        s.integer("rsi_lookback", cfg.backtest.rsi_lookback);
        s.number("kappa", cfg.backtest.kappa);
        s.number("initial_cash", cfg.backtest.initial_cash);
        s.number("risk_free_annual", cfg.backtest.risk_free_annual);
        s.number("evt_loss_limit", cfg.backtest.evt_loss_limit);
        std::string accounting;
        s.string("accounting", accounting);
        if (!accounting.empty()) cfg.backtest.accounting = parse_accounting(accounting);
        std::string policy;
        s.string("policy", policy);
        if (!policy.empty()) cfg.backtest.policy = parse_policy_kind(policy);
        s.finish();
    }
    if (root.has("agent")) {
        detail::JsonSection s(root.child("agent"), "agent");
        s.string("endpoint", cfg.agent.endpoint);
        s.string("model", cfg.agent.model);
        s.number("temperature", cfg.agent.temperature);
        s.integer("max_tokens", cfg.agent.max_tokens);
        s.number("timeout_seconds", cfg.agent.timeout_seconds);
        s.integer("retries", cfg.agent.retries);
        s.number("backoff_seconds", cfg.agent.backoff_seconds);
        s.file_path("prompt_dir", cfg.agent.prompt_dir);
        s.finish();
    }
    root.finish();

    if (cfg.iterations < 1)
        throw std::runtime_error("config: discovery.iterations must be >= 1");
    if (cfg.retry_budget < 1)
        throw std::runtime_error("config: discovery.retry_budget must be >= 1");
    if (!(cfg.risk.alpha > 0.0 && cfg.risk.alpha < 1.0))
        throw std::runtime_error("config: risk.alpha must lie in (0, 1)");
    try {
        detail::validate_backtest_config(cfg.backtest);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("config: ") + e.what());
    }

    // Shared sections feed the backtest's nested configs.
    cfg.backtest.seed = cfg.seed;
    cfg.backtest.symbol = cfg.symbol;
    cfg.backtest.calib = cfg.calib;
    cfg.backtest.risk = cfg.risk;
    cfg.backtest.discovery.iterations = cfg.iterations;
    cfg.backtest.discovery.retry_budget = cfg.retry_budget;
    cfg.backtest.discovery.calib = cfg.calib;
    cfg.backtest.discovery.scorer = cfg.scorer;
    return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open config file");
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded())
        throw std::runtime_error(path.string() + ": malformed JSON");
    try {
        return run_config_from_json(doc);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

}  // namespace sdekit
