#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "sdekit/risk.hpp"
#include "sdekit/rng.hpp"
#include "sdekit/stats.hpp"

namespace {

using namespace sdekit;

TEST(VarCvar, OrderStatisticOracleOnHandSample) {
    std::vector<double> losses(100);
    std::iota(losses.begin(), losses.end(), 1.0);  // 1..100
    auto [var, cvar] = var_cvar(losses, 0.95);
    EXPECT_DOUBLE_EQ(var, 95.0);
    EXPECT_DOUBLE_EQ(cvar, 98.0);  // mean of 96..100
}

TEST(VarCvar, DegenerateAndBoundaryCases) {
    std::vector<double> flat(10, 7.0);
    auto [var, cvar] = var_cvar(flat, 0.95);
    EXPECT_DOUBLE_EQ(var, 7.0);
    EXPECT_DOUBLE_EQ(cvar, 7.0);

    std::vector<double> losses = {5.0, 1.0, 3.0};
    auto [vmin, cmin] = var_cvar(losses, 1e-9);
    EXPECT_DOUBLE_EQ(vmin, 1.0);
    EXPECT_DOUBLE_EQ(cmin, 4.0);  // mean of {3, 5}

    EXPECT_THROW(var_cvar({}, 0.95), std::invalid_argument);
    EXPECT_THROW(var_cvar(losses, 0.0), std::invalid_argument);
    EXPECT_THROW(var_cvar(losses, 1.0), std::invalid_argument);
}

TEST(VarCvar, MatchesOracleOnRandomSamples) {
    Rng rng(404);
    for (int rep = 0; rep < 50; ++rep) {
        Rng sub = rng.substream(static_cast<std::uint64_t>(rep));
        std::size_t n = 50 + static_cast<std::size_t>(sub.next_uniform() * 500);
        double alpha = 0.5 + 0.49 * sub.next_uniform();
        std::vector<double> losses(n);
        for (double& v : losses) v = 10.0 * sub.next_gaussian();
        auto [var, cvar] = var_cvar(losses, alpha);

        auto sorted = sorted_copy(losses);
        auto k = static_cast<std::size_t>(
            std::ceil(alpha * static_cast<double>(n) - 1e-9));
        EXPECT_EQ(var, sorted[k - 1]) << "rep " << rep;

        double acc = 0.0;
        std::size_t cnt = 0;
        for (double v : losses)
            if (v > var) {
                acc += v;
                ++cnt;
            }
        double oracle_cvar = cnt ? acc / static_cast<double>(cnt) : var;
        EXPECT_NEAR(cvar, oracle_cvar, 1e-12) << "rep " << rep;
        EXPECT_GE(cvar, var);
    }
}

TEST(MaxDrawdown, HandCases) {
    std::vector<double> up = {1, 2, 3, 4, 5};
    EXPECT_DOUBLE_EQ(max_drawdown(up), 0.0);
    std::vector<double> drop = {100, 50};
    EXPECT_DOUBLE_EQ(max_drawdown(drop), 0.5);
    std::vector<double> wave = {100, 120, 90, 110, 80};
    EXPECT_NEAR(max_drawdown(wave), 1.0 / 3.0, 1e-15);
}

TEST(MaxDrawdown, ScaleInvariantAndValidated) {
    Rng rng(21);
    for (int rep = 0; rep < 100; ++rep) {
        Rng sub = rng.substream(static_cast<std::uint64_t>(rep));
        std::vector<double> path(60);
        double s = 100.0;
        for (double& v : path) {
            s *= std::exp(0.02 * sub.next_gaussian());
            v = s;
        }
        double base = max_drawdown(path);
        double c = 0.1 + 10.0 * sub.next_uniform();
        std::vector<double> scaled(path);
        for (double& v : scaled) v *= c;
        EXPECT_NEAR(max_drawdown(scaled), base, 1e-12);
        EXPECT_GE(base, 0.0);
        EXPECT_LT(base, 1.0);
    }
    std::vector<double> bad = {100.0, -5.0};
    EXPECT_THROW(max_drawdown(bad), std::invalid_argument);
    std::vector<double> single = {100.0};
    EXPECT_THROW(max_drawdown(single), std::invalid_argument);
}

TEST(Residuals, RoundTripRecoversStandardGaussians) {
    SdeModel gbm = parse_model("dS = a*S dt + b*S dW");
    std::vector<double> theta = {0.05, 0.2};
    SimConfig cfg;
    cfg.s0 = 100.0;
    cfg.horizon = 1000;
    cfg.n_paths = 1;
    cfg.seed = 55;
    auto path = simulate_path(gbm, theta, cfg, 0);
    auto eps = standardized_residuals(path, gbm, theta, cfg.dt);
    ASSERT_EQ(eps.size(), 1000u);
    EXPECT_NEAR(mean(eps), 0.0, 0.05);
    EXPECT_NEAR(stddev(eps), 1.0, 0.05);
}

TEST(Residuals, DegenerateCases) {
    SdeModel flatm = parse_model("dS = 0*S dt + b*S dW");
    std::vector<double> theta = {0.2};
    std::vector<double> constant(50, 100.0);
    auto eps = standardized_residuals(constant, flatm, theta, kTradingDt);
    for (double e : eps) EXPECT_DOUBLE_EQ(e, 0.0);

    SdeModel no_diff = parse_model("dS = a*S dt");
    std::vector<double> a = {0.05};
    EXPECT_THROW(standardized_residuals(constant, no_diff, a, kTradingDt), std::invalid_argument);

    SdeModel gbm = parse_model("dS = a*S dt + b*S dW");
    std::vector<double> two = {100.0, 101.0};
    std::vector<double> gtheta = {0.05, 0.2};
    EXPECT_THROW(standardized_residuals(two, gbm, gtheta, kTradingDt), std::invalid_argument);
}

std::vector<double> gpd_sample(double xi, double gamma, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (double& v : x) {
        double u = rng.next_uniform();
        v = (gamma / xi) * (std::pow(1.0 - u, -xi) - 1.0);
    }
    return x;
}

TEST(GpdFit, RecoversPositiveShape) {
    auto y = gpd_sample(0.2, 1.0, 10000, 808);
    GpdFit fit = fit_gpd(y);
    EXPECT_NEAR(fit.xi, 0.2, 0.05);
    EXPECT_NEAR(fit.gamma, 1.0, 0.1);
}

TEST(GpdFit, RecoversNegativeShape) {
    auto y = gpd_sample(-0.2, 1.0, 10000, 809);
    GpdFit fit = fit_gpd(y);
    EXPECT_NEAR(fit.xi, -0.2, 0.05);
    EXPECT_NEAR(fit.gamma, 1.0, 0.1);
}

TEST(GpdFit, LikelihoodNeverBelowMomentInitializer) {
    for (std::uint64_t seed : {11ull, 12ull, 13ull, 14ull}) {
        auto y = gpd_sample(0.15, 2.0, 2000, seed);
        GpdFit fit = fit_gpd(y);

        // probability-weighted-moment estimates recomputed independently
        auto s = sorted_copy(y);
        double b0 = mean(s);
        double b1 = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i)
            b1 += (static_cast<double>(i) / static_cast<double>(s.size() - 1)) * s[i];
        b1 /= static_cast<double>(s.size());
        GpdFit pwm;
        pwm.xi = 2.0 - b0 / (b0 - 2.0 * b1);
        pwm.gamma = 2.0 * b0 * b1 / (b0 - 2.0 * b1);

        EXPECT_GE(gpd_log_likelihood(fit, y), gpd_log_likelihood(pwm, y) - 1e-9) << seed;
    }
}

TEST(GpdFit, RejectsBadInput) {
    std::vector<double> few(10, 1.0);
    EXPECT_THROW(fit_gpd(few), std::invalid_argument);
    std::vector<double> with_zero(40, 1.0);
    with_zero[5] = 0.0;
    EXPECT_THROW(fit_gpd(with_zero), std::invalid_argument);
}

TEST(EvtTail, ExponentialQuantileWithinFivePercent) {
    // Exponential(rate 2) losses: Q(p) = -ln(1-p)/2.
    Rng rng(303);
    std::vector<double> losses(50000);
    for (double& v : losses) v = -std::log(1.0 - rng.next_uniform()) / 2.0;
    RiskConfig cfg;
    cfg.alpha = 0.99;
    cfg.threshold_q = 0.95;
    EvtTail tail = evt_tail_risk(losses, cfg);
    double analytic = -std::log(0.01) / 2.0;
    EXPECT_NEAR(tail.evt_var, analytic, 0.05 * analytic);
    EXPECT_NEAR(tail.fit.xi, 0.0, 0.08);  // exponential tail has shape 0
    ASSERT_TRUE(tail.evt_cvar.has_value());
    EXPECT_GE(*tail.evt_cvar, tail.evt_var);
}

TEST(EvtTail, HeavyTailQuantileWithinThreePercent) {
    auto losses = gpd_sample(0.3, 1.0, 200000, 606);
    RiskConfig cfg;
    cfg.alpha = 0.99;
    cfg.threshold_q = 0.95;
    EvtTail tail = evt_tail_risk(losses, cfg);
    double analytic = (1.0 / 0.3) * (std::pow(0.01, -0.3) - 1.0);
    EXPECT_NEAR(tail.evt_var, analytic, 0.03 * analytic);
}

TEST(EvtTail, ParameterOrderValidated) {
    std::vector<double> losses(200, 1.0);
    for (std::size_t i = 0; i < losses.size(); ++i) losses[i] = static_cast<double>(i);
    RiskConfig cfg;
    cfg.alpha = 0.5;
    cfg.threshold_q = 0.95;
    EXPECT_THROW(evt_tail_risk(losses, cfg), std::invalid_argument);
    std::vector<double> few(50, 1.0);
    RiskConfig ok;
    EXPECT_THROW(evt_tail_risk(few, ok), std::invalid_argument);
}

TEST(RiskReport, ZeroVolatilityModelDegradesGracefully) {
    SdeModel m = parse_model("dS = a*S dt");
    std::vector<double> theta = {0.0};
    std::vector<double> hist(40, 100.0);
    RiskConfig cfg;
    cfg.n_paths = 500;
    RiskReport rep = risk_report(m, theta, hist, cfg);
    EXPECT_DOUBLE_EQ(rep.var, 0.0);
    EXPECT_DOUBLE_EQ(rep.cvar, 0.0);
    EXPECT_DOUBLE_EQ(rep.mdd, 0.0);
    EXPECT_FALSE(rep.evt_var.has_value());
    EXPECT_FALSE(rep.gpd_losses.has_value());
    EXPECT_FALSE(rep.gpd_residuals.has_value());
    EXPECT_FALSE(rep.residual_mean.has_value());
}

TEST(RiskReport, GbmVarMatchesLognormalClosedForm) {
    // 20-day 95% VaR of GBM(0.05, 0.2) from s0=100:
    // var = s0 * (1 - exp((a - b^2/2) H dt + b sqrt(H dt) z_0.05)).
    SdeModel gbm = parse_model("dS = a*S dt + b*S dW");
    std::vector<double> theta = {0.05, 0.2};
    std::vector<double> hist(40, 100.0);
    for (std::size_t i = 0; i < hist.size(); ++i) hist[i] = 100.0 + 0.1 * static_cast<double>(i);
    hist.back() = 100.0;
    RiskConfig cfg;
    cfg.seed = 17;
    RiskReport rep = risk_report(gbm, theta, hist, cfg);

    const double z05 = -1.6448536269514722;
    double h_years = 20.0 / 252.0;
    double var_true = 100.0 * (1.0 - std::exp(0.03 * h_years + 0.2 * std::sqrt(h_years) * z05));
    EXPECT_NEAR(rep.var, var_true, 0.02 * var_true);
    ASSERT_TRUE(rep.evt_var.has_value());
    EXPECT_NEAR(*rep.evt_var, var_true, 0.02 * var_true);
    EXPECT_GE(rep.cvar, rep.var);
    ASSERT_TRUE(rep.evt_cvar.has_value());
    EXPECT_GE(*rep.evt_cvar, *rep.evt_var - 1e-9);
    EXPECT_GT(rep.mdd, 0.0);
    EXPECT_LT(rep.mdd, 1.0);
    ASSERT_TRUE(rep.gpd_losses.has_value());
    EXPECT_GT(rep.gpd_losses->gamma, 0.0);
    EXPECT_GE(rep.gpd_losses->n_exceedances, 30u);
}

TEST(RiskReport, ResidualBlockPresentOnLongHistory) {
    SdeModel gbm = parse_model("dS = a*S dt + b*S dW");
    std::vector<double> theta = {0.05, 0.2};
    SimConfig data_cfg;
    data_cfg.s0 = 100.0;
    data_cfg.horizon = 999;
    data_cfg.n_paths = 1;
    data_cfg.seed = 4;
    auto hist = simulate_path(gbm, theta, data_cfg, 0);
    RiskConfig cfg;
    cfg.n_paths = 2000;
    RiskReport rep = risk_report(gbm, theta, hist, cfg);
    ASSERT_TRUE(rep.residual_mean.has_value());
    EXPECT_NEAR(*rep.residual_mean, 0.0, 0.05);
    EXPECT_NEAR(*rep.residual_stddev, 1.0, 0.05);
    ASSERT_TRUE(rep.gpd_residuals.has_value());
    EXPECT_GE(rep.gpd_residuals->n_exceedances, 30u);
    EXPECT_GT(rep.gpd_residuals->threshold, 0.0);
}

TEST(RiskReport, DeterministicForFixedSeed) {
    SdeModel gbm = parse_model("dS = a*S dt + b*S dW");
    std::vector<double> theta = {0.05, 0.2};
    std::vector<double> hist(60);
    for (std::size_t i = 0; i < hist.size(); ++i)
        hist[i] = 100.0 * std::exp(0.001 * static_cast<double>(i));
    RiskConfig cfg;
    cfg.n_paths = 1000;
    cfg.seed = 99;
    RiskReport a = risk_report(gbm, theta, hist, cfg);
    RiskReport b = risk_report(gbm, theta, hist, cfg);
    EXPECT_EQ(a.var, b.var);
    EXPECT_EQ(a.cvar, b.cvar);
    EXPECT_EQ(a.mdd, b.mdd);
    EXPECT_EQ(a.evt_var, b.evt_var);
}

}  // namespace
