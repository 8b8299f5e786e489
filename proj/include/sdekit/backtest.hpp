#pragma once

// Backtest orchestration: per-block model discovery on trailing history, daily
// recalibration + risk/trend metrics + news sentiment + trading decision, with
// all market reads routed through a sealed no-lookahead guard.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdekit/agents.hpp"
#include "sdekit/calibrate.hpp"
#include "sdekit/data.hpp"
#include "sdekit/discovery.hpp"
#include "sdekit/risk.hpp"
#include "sdekit/trading.hpp"

namespace sdekit {

class LookaheadViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Read gate over prices and news: every accessor checks against the sealed
// "today" index, so a pipeline bug that peeks ahead fails loudly.
class SealedMarketData {
public:
    SealedMarketData(const PricePath& prices, const NewsStore& news)
        : prices_(&prices), news_(&news) {}

    void seal(std::size_t today_index) {
        if (today_index >= prices_->size())
            throw std::out_of_range("seal index past the end of the price path");
        today_ = today_index;
    }

    [[nodiscard]] std::size_t today() const { return today_; }

    [[nodiscard]] double price(std::size_t i) const {
        check(i);
        return prices_->closes[i];
    }

    [[nodiscard]] Date date(std::size_t i) const {
        check(i);
        return prices_->dates[i];
    }

    // Close prices over [begin, end); the window may not cross the seal.
    [[nodiscard]] std::vector<double> closes(std::size_t begin, std::size_t end) const {
        if (begin > end || end > prices_->size())
            throw std::out_of_range("bad price window");
        if (end > today_ + 1)
            throw LookaheadViolation("price window ending at day " + std::to_string(end - 1) +
                                     " reads past sealed day " + std::to_string(today_));
        return {prices_->closes.begin() + static_cast<std::ptrdiff_t>(begin),
                prices_->closes.begin() + static_cast<std::ptrdiff_t>(end)};
    }

    // News for the symbol (related symbols included) over the trailing
    // `lookback_days` calendar days ending today.
    [[nodiscard]] std::vector<NewsItem> news(const std::string& symbol,
                                             int lookback_days) const {
        Date to = prices_->dates[today_];
        Date from = to.add_days(-(lookback_days - 1));
        auto items = news_->query_with_related(symbol, from, to);
        for (const auto& item : items)
            if (NewsStore::date_of(item.timestamp).serial() > to.serial())
                throw LookaheadViolation("news item dated past sealed day");
        return items;
    }

private:
    void check(std::size_t i) const {
        if (i >= prices_->size()) throw std::out_of_range("price index out of range");
        if (i > today_)
            throw LookaheadViolation("read of day " + std::to_string(i) +
                                     " while sealed at day " + std::to_string(today_));
    }

    const PricePath* prices_;
    const NewsStore* news_;
    std::size_t today_ = 0;
};

enum class PolicyKind { Rule, Llm };

struct BacktestConfig {
    int lookback = 126;        // discovery window, trading days
    int recalib_window = 100;  // daily recalibration window
    int block = 20;            // trading block length
    int news_lookback = 5;     // calendar days of news context
    int rsi_lookback = kDefaultRsiLookback;
    double kappa = kDefaultKappa;
    double initial_cash = 1000.0;
    double risk_free_annual = 0.0;
    double evt_loss_limit = std::numeric_limits<double>::infinity();
    std::string symbol = "SYN";
    AccountingMode accounting = AccountingMode::CostAware;
    PolicyKind policy = PolicyKind::Rule;
    std::uint64_t seed = 0;
    CalibConfig calib;  // daily recalibration
    RiskConfig risk;
    DiscoveryConfig discovery;  // per-block; seed is derived per block
};

struct DecisionContext {
    Date date;
    double price = 0.0;
    const SdeModel* model = nullptr;
    std::span<const double> params;
    const RiskReport* risk = nullptr;
    const TrendReport* trend = nullptr;
    const std::vector<NewsItem>* news = nullptr;
    const PortfolioState* portfolio = nullptr;
};

class DecisionPolicy {
public:
    virtual ~DecisionPolicy() = default;
    virtual std::pair<TradeSignal, Stance> decide(const DecisionContext& ctx) = 0;
};

// Deterministic policy: lexicon sentiment + the threshold trading rule.
class RulePolicy : public DecisionPolicy {
public:
    explicit RulePolicy(double evt_loss_limit = std::numeric_limits<double>::infinity())
        : evt_loss_limit_(evt_loss_limit) {}

    std::pair<TradeSignal, Stance> decide(const DecisionContext& ctx) override {
        Stance stance = analyze_news_mock(*ctx.news).stance;
        TradeSignal signal = rule_policy(*ctx.risk, *ctx.trend, stance, evt_loss_limit_);
        return {signal, stance};
    }

private:
    double evt_loss_limit_;
};

// LLM-backed policy: a news-analyst call for stance, then a trader call whose
// reply must end in an explicit decision.
class LlmPolicy : public DecisionPolicy {
public:
    LlmPolicy(Transport& transport, AgentConfig config, std::string symbol)
        : transport_(&transport), config_(std::move(config)), symbol_(std::move(symbol)) {}

    std::pair<TradeSignal, Stance> decide(const DecisionContext& ctx) override {
        auto num = [](double v) { return detail::render_number(v); };
        auto opt = [&](const std::optional<double>& v) {
            return v ? detail::render_number(*v) : std::string("unavailable");
        };

        Stance stance = Stance::Mixed;
        std::string news_digest = "(no recent news)";
        if (!ctx.news->empty()) {
            news_digest = render_news_block(*ctx.news);
            auto reply = run_agent(*transport_, config_, "news_analyst",
                                   {{"symbol", symbol_}, {"news_block", news_digest}});
            stance = parse_news_analysis(reply.text).stance;
        }

        auto reply = run_agent(
            *transport_, config_, "trader",
            {{"position", num(ctx.portfolio->position)},
             {"cash", num(ctx.portfolio->cash)},
             {"model", ctx.model->source},
             {"var", num(ctx.risk->var)},
             {"cvar", num(ctx.risk->cvar)},
             {"evt_var", opt(ctx.risk->evt_var)},
             {"evt_cvar", opt(ctx.risk->evt_cvar)},
             {"mdd", num(ctx.risk->mdd)},
             {"rsi", num(ctx.trend->rsi)},
             {"drift", std::string(polarity_name(ctx.trend->drift_polarity))},
             {"stance", std::string(stance_name(stance))},
             {"news_digest", news_digest}});
        return {parse_trade_decision(reply.text), stance};
    }

private:
    Transport* transport_;
    AgentConfig config_;
    std::string symbol_;
};

struct BacktestResult {
    std::vector<Date> dates;              // one per trading day
    std::vector<double> equity;           // initial point + one mark per day
    std::vector<DecisionRow> decisions;   // one per trading day
    std::vector<CandidateRecord> memory;  // discovery records across all blocks
    Performance perf;
    bool failed = false;
    std::string failure_reason;
};

namespace detail {

inline void validate_backtest_config(const BacktestConfig& cfg) {
    if (cfg.lookback < 1 || cfg.recalib_window < 1 || cfg.block < 1 ||
        cfg.news_lookback < 1 || cfg.rsi_lookback < 1)
        throw std::invalid_argument("backtest config windows must be >= 1");
    if (!(cfg.initial_cash > 0.0))
        throw std::invalid_argument("backtest initial cash must be positive");
    if (cfg.recalib_window > cfg.lookback)
        throw std::invalid_argument("recalibration window cannot exceed the lookback");
}

}  // namespace detail

// Mark-to-market buy-and-hold baseline: one cost-aware buy at the first close,
// then hold to the end. The equity curve starts at the post-buy mark (so a
// flat market shows zero drawdown), while pnl is measured against the initial
// cash and therefore carries the buy-side fee drag.
inline BacktestResult buy_and_hold(const PricePath& prices, const BacktestConfig& config) {
    detail::validate_backtest_config(config);
    if (prices.size() < 2)
        throw std::invalid_argument("buy_and_hold: need at least 2 prices");
    BacktestResult result;
    PortfolioState state;
    state.cash = config.initial_cash;
    for (std::size_t i = 0; i < prices.size(); ++i) {
        TradeSignal signal = i == 0 ? TradeSignal::Buy : TradeSignal::Hold;
        state = apply_signal(state, signal, prices.closes[i], config.kappa,
                             AccountingMode::CostAware);
        result.dates.push_back(prices.dates[i]);
        result.equity.push_back(equity(state, prices.closes[i]));
        DecisionRow row;
        row.date = prices.dates[i];
        row.signal = state.last_signal;
        row.price = prices.closes[i];
        row.cash = state.cash;
        row.position = state.position;
        row.equity = result.equity.back();
        result.decisions.push_back(row);
    }
    result.perf = performance(result.equity, config.risk_free_annual);
    result.perf.pnl = result.equity.back() - config.initial_cash;
    return result;
}

// The full pipeline: per 20-day block, rediscover a model on the trailing
// lookback; per day, recalibrate on the trailing window (warm-started), build
// risk/trend reports, gather news, decide, execute, and mark to market.
inline BacktestResult run_backtest(const PricePath& prices, const NewsStore& news,
                                   const BacktestConfig& config, ModelProposer& proposer,
                                   DecisionPolicy& policy) {
    detail::validate_backtest_config(config);
    std::size_t lookback = static_cast<std::size_t>(config.lookback);
    if (prices.size() < lookback + static_cast<std::size_t>(config.block))
        throw std::invalid_argument(
            "run_backtest: need at least lookback + block prices, got " +
            std::to_string(prices.size()));

    SealedMarketData sealed(prices, news);
    BacktestResult result;
    PortfolioState state;
    state.cash = config.initial_cash;
    result.equity.push_back(state.cash);

    SdeModel model;
    std::vector<double> params;
    int block_index = 0;

    for (std::size_t day = lookback; day < prices.size(); ++day) {
        sealed.seal(day);
        bool block_start = (day - lookback) % static_cast<std::size_t>(config.block) == 0;
        if (block_start) {
            auto window = sealed.closes(day - lookback, day);
            DiscoveryConfig dc = config.discovery;
            dc.seed = derive_seed(config.seed, "backtest/block" + std::to_string(block_index));
            auto memory = run_discovery(window, proposer, dc);
            if (!memory.loop_failed) {
                const auto& best = best_model(memory);
                model = parse_model(best.source);
                params = best.fitted_params;
            }
            for (auto& record : memory.records)
                result.memory.push_back(std::move(record));
            if (memory.loop_failed) {
                result.failed = true;
                result.failure_reason =
                    "discovery failed in block " + std::to_string(block_index);
                return result;
            }
            ++block_index;
        }

        auto window = sealed.closes(day + 1 - static_cast<std::size_t>(config.recalib_window),
                                    day + 1);
        CalibConfig calib = config.calib;
        calib.seed = derive_seed(config.seed, "backtest/day" + std::to_string(day) + "/calib");
        try {
            auto fit = calibrate(model, window, params, calib);
            params = fit.params;
        } catch (const std::invalid_argument&) {
            // keep the previous day's parameters when the daily fit degenerates
        }

        RiskConfig risk_cfg = config.risk;
        risk_cfg.seed = derive_seed(config.seed, "backtest/day" + std::to_string(day) + "/risk");
        RiskReport risk = risk_report(model, params, window, risk_cfg);
        TrendReport trend = trend_report(model, params, window, config.rsi_lookback);
        auto day_news = sealed.news(config.symbol, config.news_lookback);

        DecisionContext ctx;
        ctx.date = sealed.date(day);
        ctx.price = sealed.price(day);
        ctx.model = &model;
        ctx.params = params;
        ctx.risk = &risk;
        ctx.trend = &trend;
        ctx.news = &day_news;
        ctx.portfolio = &state;
        auto [signal, stance] = policy.decide(ctx);

        state = apply_signal(state, signal, ctx.price, config.kappa, config.accounting);
        double marked = equity(state, ctx.price);
        result.dates.push_back(ctx.date);
        result.equity.push_back(marked);

        DecisionRow row;
        row.date = ctx.date;
        row.signal = state.last_signal;
        row.price = ctx.price;
        row.cash = state.cash;
        row.position = state.position;
        row.equity = marked;
        row.rsi = trend.rsi;
        row.drift = trend.drift_polarity;
        row.var = risk.var;
        row.cvar = risk.cvar;
        row.evt_var = risk.evt_var;
        row.evt_cvar = risk.evt_cvar;
        row.mdd = risk.mdd;
        row.stance = stance;
        result.decisions.push_back(row);
    }

    result.perf = performance(result.equity, config.risk_free_annual);
    return result;
}

// --- persistence ---------------------------------------------------------------

inline nlohmann::json backtest_config_to_json(const BacktestConfig& cfg) {
    nlohmann::json j;
    j["lookback"] = cfg.lookback;
    j["recalib_window"] = cfg.recalib_window;
    j["block"] = cfg.block;
    j["news_lookback"] = cfg.news_lookback;
    j["rsi_lookback"] = cfg.rsi_lookback;
    j["kappa"] = cfg.kappa;
    j["initial_cash"] = cfg.initial_cash;
    j["risk_free_annual"] = cfg.risk_free_annual;
    if (std::isfinite(cfg.evt_loss_limit)) j["evt_loss_limit"] = cfg.evt_loss_limit;
    j["symbol"] = cfg.symbol;
    j["accounting"] = cfg.accounting == AccountingMode::Literal ? "literal" : "cost-aware";
    j["policy"] = cfg.policy == PolicyKind::Rule ? "rule" : "llm";
    j["seed"] = cfg.seed;
    j["discovery_iterations"] = cfg.discovery.iterations;
    j["retry_budget"] = cfg.discovery.retry_budget;
    return j;
}

// Writes result.json, equity.csv, decisions.csv, and memory.jsonl into `dir`.
inline void save_result(const BacktestResult& result, const BacktestConfig& config,
                        const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    nlohmann::json j;
    j["failed"] = result.failed;
    if (result.failed) j["failure_reason"] = result.failure_reason;
    j["pnl"] = result.perf.pnl;
    j["sharpe"] = result.perf.sharpe;
    j["mdd"] = result.perf.mdd;
    j["days"] = result.dates.size();
    j["final_equity"] = result.equity.empty() ? 0.0 : result.equity.back();
    j["config"] = backtest_config_to_json(config);
    std::ofstream(dir / "result.json") << j.dump(2) << '\n';

    {
        std::ofstream out(dir / "equity.csv");
        out << "day,date,equity\n";
        for (std::size_t i = 0; i < result.equity.size(); ++i) {
            out << i << ',';
            if (i == 0)
                out << (result.dates.empty() ? std::string("initial")
                                             : result.dates.front().add_days(-1).to_string());
            else
                out << result.dates[i - 1].to_string();
            out << ',' << detail::render_number(result.equity[i]) << '\n';
        }
    }
    {
        std::ofstream out(dir / "decisions.csv");
        out << decision_csv_header() << '\n';
        for (const auto& row : result.decisions) out << to_csv_row(row) << '\n';
    }
    {
        std::ofstream out(dir / "memory.jsonl");
        for (const auto& record : result.memory) append_record(out, record);
    }
}

}  // namespace sdekit
