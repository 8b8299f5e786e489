#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sdekit/date.hpp"
#include "sdekit/model.hpp"
#include "sdekit/risk.hpp"
#include "sdekit/stats.hpp"

namespace sdekit {

inline constexpr double kDefaultKappa = 8.8e-4;  // 8.8 bps per trade
inline constexpr int kDefaultRsiLookback = 14;

enum class TradeSignal { Buy, Sell, Hold };
enum class DriftPolarity { Positive, Negative };
enum class Stance { Bullish, Bearish, Mixed };
enum class AccountingMode { Literal, CostAware };

inline std::string_view signal_name(TradeSignal s) {
    switch (s) {
        case TradeSignal::Buy: return "buy";
        case TradeSignal::Sell: return "sell";
        case TradeSignal::Hold: return "hold";
    }
    return "?";
}

inline std::string_view polarity_name(DriftPolarity p) {
    return p == DriftPolarity::Positive ? "positive" : "negative";
}

inline std::string_view stance_name(Stance s) {
    switch (s) {
        case Stance::Bullish: return "bullish";
        case Stance::Bearish: return "bearish";
        case Stance::Mixed: return "mixed";
    }
    return "?";
}

struct TrendReport {
    double rsi = 0.0;
    DriftPolarity drift_polarity = DriftPolarity::Positive;
    int lookback = kDefaultRsiLookback;
};

struct PortfolioState {
    double cash = 0.0;
    double position = 0.0;  // shares, never negative
    TradeSignal last_signal = TradeSignal::Hold;
    double total_costs = 0.0;
};

// 100 - 100/(1 + AvgGain/AvgLoss) over the trailing window; averages are
// simple means with the window length as denominator (zero changes count).
inline double rsi(std::span<const double> prices, int lookback = kDefaultRsiLookback) {
    if (lookback < 1) throw std::invalid_argument("rsi: lookback must be >= 1");
    if (prices.size() < static_cast<std::size_t>(lookback) + 1)
        throw std::invalid_argument("rsi: need at least " + std::to_string(lookback + 1) +
                                    " prices, got " + std::to_string(prices.size()));
    double gains = 0.0, losses = 0.0;
    for (std::size_t i = prices.size() - static_cast<std::size_t>(lookback); i < prices.size();
         ++i) {
        double change = prices[i] - prices[i - 1];
        if (change > 0.0)
            gains += change;
        else
            losses += -change;
    }
    double avg_gain = gains / static_cast<double>(lookback);
    double avg_loss = losses / static_cast<double>(lookback);
    if (avg_loss == 0.0) return 100.0;
    if (avg_gain == 0.0) return 0.0;
    double rs = avg_gain / avg_loss;
    return 100.0 - 100.0 / (1.0 + rs);
}

inline DriftPolarity drift_polarity(const SdeModel& m, std::span<const double> params, double s,
                                    double t) {
    return eval_drift(m, s, t, params) >= 0.0 ? DriftPolarity::Positive : DriftPolarity::Negative;
}

inline TrendReport trend_report(const SdeModel& m, std::span<const double> params,
                                std::span<const double> prices,
                                int lookback = kDefaultRsiLookback) {
    TrendReport rep;
    rep.rsi = rsi(prices, lookback);
    rep.drift_polarity = drift_polarity(m, params, prices.back(), 0.0);
    rep.lookback = lookback;
    return rep;
}

// All-in/all-out long-only execution with a flat fee of kappa per unit of
// traded notional.  Literal mode books the buy fee against cash (leaving
// exactly -kappa*P*S); cost-aware mode sizes the buy so cash lands on 0.
// Unexecutable orders (buy without cash, sell without shares) are recorded
// as holds.
inline PortfolioState apply_signal(PortfolioState state, TradeSignal signal, double price,
                                   double kappa = kDefaultKappa,
                                   AccountingMode mode = AccountingMode::CostAware) {
    if (!(price > 0.0))
        throw std::invalid_argument("apply_signal: price must be positive");
    switch (signal) {
        case TradeSignal::Buy: {
            if (!(state.cash > 0.0)) {
                state.last_signal = TradeSignal::Hold;
                return state;
            }
            if (mode == AccountingMode::Literal) {
                double shares = state.cash / price;
                double fee = kappa * shares * price;
                state.position += shares;
                state.cash = state.cash - shares * price - fee;
                state.total_costs += fee;
            } else {
                double shares = state.cash / (price * (1.0 + kappa));
                state.position += shares;
                state.total_costs += kappa * shares * price;
                state.cash = 0.0;
            }
            state.last_signal = TradeSignal::Buy;
            return state;
        }
        case TradeSignal::Sell: {
            if (state.position == 0.0) {
                state.last_signal = TradeSignal::Hold;
                return state;
            }
            double fee = kappa * state.position * price;
            state.cash += state.position * price - fee;
            state.total_costs += fee;
            state.position = 0.0;
            state.last_signal = TradeSignal::Sell;
            return state;
        }
        case TradeSignal::Hold:
            state.last_signal = TradeSignal::Hold;
            return state;
    }
    return state;
}

inline double equity(const PortfolioState& state, double price) {
    return state.cash + state.position * price;
}

struct Performance {
    double pnl = 0.0;
    double sharpe = 0.0;
    double mdd = 0.0;
};

inline Performance performance(std::span<const double> equity_curve,
                               double risk_free_annual = 0.0) {
    if (equity_curve.size() < 2)
        throw std::invalid_argument("performance: need at least 2 equity points");
    for (double e : equity_curve)
        if (!(e > 0.0))
            throw std::invalid_argument("performance: equity values must be positive");
    Performance perf;
    perf.pnl = equity_curve.back() - equity_curve.front();
    std::vector<double> returns(equity_curve.size() - 1);
    for (std::size_t i = 1; i < equity_curve.size(); ++i)
        returns[i - 1] = equity_curve[i] / equity_curve[i - 1] - 1.0;
    double sd = stddev(returns);
    if (sd > 0.0) {
        double excess = mean(returns) - risk_free_annual / 252.0;
        perf.sharpe = excess / sd * std::sqrt(252.0);
    }
    perf.mdd = max_drawdown(std::vector<double>(equity_curve.begin(), equity_curve.end()));
    return perf;
}

// Deterministic trading rule: overbought or a negative-drift model whose
// tail risk breaches the loss limit exits; positive drift below the
// overbought line enters unless sentiment is bearish.
inline TradeSignal rule_policy(const RiskReport& risk, const TrendReport& trend, Stance sentiment,
                               double evt_loss_limit) {
    bool tail_breach = trend.drift_polarity == DriftPolarity::Negative &&
                       risk.evt_var.has_value() && *risk.evt_var > evt_loss_limit;
    if (trend.rsi > 70.0 || tail_breach) return TradeSignal::Sell;
    if (trend.drift_polarity == DriftPolarity::Positive && trend.rsi < 70.0 &&
        sentiment != Stance::Bearish)
        return TradeSignal::Buy;
    return TradeSignal::Hold;
}

struct DecisionRow {
    Date date;
    TradeSignal signal = TradeSignal::Hold;
    double price = 0.0;
    double cash = 0.0;
    double position = 0.0;
    double equity = 0.0;
    double rsi = 0.0;
    DriftPolarity drift = DriftPolarity::Positive;
    double var = 0.0;
    double cvar = 0.0;
    std::optional<double> evt_var;
    std::optional<double> evt_cvar;
    double mdd = 0.0;
    Stance stance = Stance::Mixed;
};

inline std::string decision_csv_header() {
    return "date,signal,price,cash,position,equity,rsi,drift,var,cvar,evt_var,evt_cvar,mdd,"
           "stance";
}

inline std::string to_csv_row(const DecisionRow& row) {
    auto num = [](double v) { return detail::render_number(v); };
    auto opt = [&](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
    std::string out = row.date.to_string();
    out += ',';
    out += signal_name(row.signal);
    out += ',';
    out += num(row.price) + ',' + num(row.cash) + ',' + num(row.position) + ',' +
           num(row.equity) + ',' + num(row.rsi) + ',';
    out += polarity_name(row.drift);
    out += ',';
    out += num(row.var) + ',' + num(row.cvar) + ',' + opt(row.evt_var) + ',' +
           opt(row.evt_cvar) + ',' + num(row.mdd) + ',';
    out += stance_name(row.stance);
    return out;
}

}  // namespace sdekit
