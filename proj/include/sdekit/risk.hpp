#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdekit/simulate.hpp"
#include "sdekit/stats.hpp"

namespace sdekit {

struct RiskConfig {
    double alpha = 0.95;        // VaR confidence level
    std::size_t horizon = 20;   // MC steps, matching the 20-day trading block
    double threshold_q = 0.95;  // POT threshold quantile u_q
    std::size_t n_paths = 10000;
    std::uint64_t seed = 0;
    double dt = kTradingDt;
};

struct GpdFit {
    double xi = 0.0;     // shape, clamped away from 0 by 1e-6
    double gamma = 0.0;  // scale > 0
    double threshold = 0.0;
    std::size_t n_exceedances = 0;
    double zeta = 1.0;  // exceedance fraction over the source sample
};

// var = smallest sample value whose empirical CDF reaches alpha; cvar = mean
// of strict exceedances, falling back to var when there are none.
inline std::pair<double, double> var_cvar(std::span<const double> losses, double alpha) {
    if (losses.empty()) throw std::invalid_argument("var/cvar of an empty loss sample");
    if (alpha <= 0.0 || alpha >= 1.0) throw std::invalid_argument("alpha must be in (0, 1)");
    auto sorted = sorted_copy(losses);
    double var = quantile_sorted(sorted, alpha);
    double acc = 0.0;
    std::size_t n = 0;
    for (auto it = sorted.rbegin(); it != sorted.rend() && *it > var; ++it) {
        acc += *it;
        ++n;
    }
    double cvar = n == 0 ? var : acc / static_cast<double>(n);
    return {var, cvar};
}

inline double max_drawdown(std::span<const double> path) {
    if (path.size() < 2) throw std::invalid_argument("drawdown needs at least two points");
    double peak = 0.0;
    double mdd = 0.0;
    for (double v : path) {
        if (v <= 0.0) throw std::invalid_argument("drawdown requires positive values");
        peak = std::max(peak, v);
        mdd = std::max(mdd, (peak - v) / peak);
    }
    return mdd;
}

// One-step-ahead standardized residuals of a calibrated model on data:
// eps_t = (S_{t+dt} - S_t - f(S_t,t) dt) / (g(S_t,t) sqrt(dt)).
inline std::vector<double> standardized_residuals(std::span<const double> historical,
                                                  const SdeModel& model,
                                                  std::span<const double> params, double dt) {
    if (historical.size() < 3) throw std::invalid_argument("residuals need at least 3 prices");
    if (params.size() != model.n_params())
        throw std::invalid_argument("parameter count mismatch in residual computation");
    std::vector<double> eps;
    eps.reserve(historical.size() - 1);
    const double sqrt_dt = std::sqrt(dt);
    for (std::size_t i = 0; i + 1 < historical.size(); ++i) {
        double s = historical[i];
        double t = static_cast<double>(i) * dt;
        double f = eval_drift(model, s, t, params);
        double g = eval_diffusion(model, s, t, params);
        if (g == 0.0)
            throw std::invalid_argument("degenerate diffusion: g(S,t) = 0 at step " +
                                        std::to_string(i));
        eps.push_back((historical[i + 1] - s - f * dt) / (g * sqrt_dt));
    }
    return eps;
}

namespace detail {

// Negative log-likelihood of GPD(xi, gamma) on positive exceedances, with the
// shape clamped away from zero; +inf outside the feasible region.
inline double gpd_nll(double xi, double gamma, std::span<const double> y) {
    if (gamma <= 0.0 || !std::isfinite(gamma)) return std::numeric_limits<double>::infinity();
    if (std::fabs(xi) < 1e-6) xi = xi < 0.0 ? -1e-6 : 1e-6;
    double nll = static_cast<double>(y.size()) * std::log(gamma);
    for (double v : y) {
        double z = 1.0 + xi * v / gamma;
        if (z <= 0.0) return std::numeric_limits<double>::infinity();
        nll += (1.0 + 1.0 / xi) * std::log(z);
    }
    return nll;
}

// Nelder-Mead on R^2, small and allocation-free enough for this use.
inline std::pair<std::array<double, 2>, double> nelder_mead_2d(
    const std::function<double(double, double)>& f, std::array<double, 2> x0, double scale,
    int max_iter = 400) {
    struct Vertex {
        std::array<double, 2> x;
        double fx;
    };
    std::array<Vertex, 3> simplex;
    simplex[0] = {x0, f(x0[0], x0[1])};
    simplex[1] = {{x0[0] + scale, x0[1]}, 0.0};
    simplex[1].fx = f(simplex[1].x[0], simplex[1].x[1]);
    simplex[2] = {{x0[0], x0[1] + scale}, 0.0};
    simplex[2].fx = f(simplex[2].x[0], simplex[2].x[1]);

    auto order = [&] {
        std::sort(simplex.begin(), simplex.end(),
                  [](const Vertex& a, const Vertex& b) { return a.fx < b.fx; });
    };
    for (int it = 0; it < max_iter; ++it) {
        order();
        if (std::fabs(simplex[2].fx - simplex[0].fx) < 1e-12 * (1.0 + std::fabs(simplex[0].fx)))
            break;
        std::array<double, 2> c = {0.5 * (simplex[0].x[0] + simplex[1].x[0]),
                                   0.5 * (simplex[0].x[1] + simplex[1].x[1])};
        auto point = [&](double coef) {
            return std::array<double, 2>{c[0] + coef * (c[0] - simplex[2].x[0]),
                                         c[1] + coef * (c[1] - simplex[2].x[1])};
        };
        auto xr = point(1.0);
        double fr = f(xr[0], xr[1]);
        if (fr < simplex[0].fx) {
            auto xe = point(2.0);
            double fe = f(xe[0], xe[1]);
            simplex[2] = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
        } else if (fr < simplex[1].fx) {
            simplex[2] = {xr, fr};
        } else {
            auto xc = point(0.5);
            double fc = f(xc[0], xc[1]);
            if (fc < simplex[2].fx) {
                simplex[2] = {xc, fc};
            } else {
                for (int i = 1; i < 3; ++i) {
                    simplex[i].x = {0.5 * (simplex[i].x[0] + simplex[0].x[0]),
                                    0.5 * (simplex[i].x[1] + simplex[0].x[1])};
                    simplex[i].fx = f(simplex[i].x[0], simplex[i].x[1]);
                }
            }
        }
    }
    order();
    return {simplex[0].x, simplex[0].fx};
}

}  // namespace detail

// Maximum-likelihood GPD fit: probability-weighted-moment initial estimates
// refined by Nelder-Mead on (xi, log gamma). The returned likelihood never
// falls below the initializer's because the initializer is a simplex vertex.
inline GpdFit fit_gpd(std::span<const double> exceedances) {
    if (exceedances.size() < 30)
        throw std::invalid_argument("GPD fit needs at least 30 exceedances, got " +
                                    std::to_string(exceedances.size()));
    for (double v : exceedances)
        if (v <= 0.0) throw std::invalid_argument("GPD exceedances must be positive");

    auto y = sorted_copy(exceedances);
    std::size_t n = y.size();
    double b0 = mean(y);
    double b1 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        b1 += (static_cast<double>(i) / static_cast<double>(n - 1)) * y[i];
    b1 /= static_cast<double>(n);

    double xi0 = 0.1, gamma0 = b0;
    double denom = b0 - 2.0 * b1;
    if (denom != 0.0) {
        double xi_pwm = 2.0 - b0 / denom;
        double gamma_pwm = 2.0 * b0 * b1 / denom;
        if (std::isfinite(xi_pwm) && std::isfinite(gamma_pwm) && gamma_pwm > 0.0) {
            xi0 = xi_pwm;
            gamma0 = gamma_pwm;
        }
    }
    // keep the initializer inside the feasible region for negative shapes
    if (xi0 < 0.0 && 1.0 + xi0 * y.back() / gamma0 <= 0.0)
        xi0 = -0.9 * gamma0 / y.back();

    auto objective = [&](double xi, double log_gamma) {
        return detail::gpd_nll(xi, std::exp(log_gamma), y);
    };
    auto [best, nll] = detail::nelder_mead_2d(objective, {xi0, std::log(gamma0)}, 0.1);

    GpdFit fit;
    fit.xi = best[0];
    if (std::fabs(fit.xi) < 1e-6) fit.xi = fit.xi < 0.0 ? -1e-6 : 1e-6;
    fit.gamma = std::exp(best[1]);
    fit.threshold = 0.0;
    fit.n_exceedances = n;
    fit.zeta = 1.0;
    return fit;
}

inline double gpd_log_likelihood(const GpdFit& fit, std::span<const double> exceedances) {
    return -detail::gpd_nll(fit.xi, fit.gamma, exceedances);
}

struct EvtTail {
    double evt_var = 0.0;
    std::optional<double> evt_cvar;  // unavailable when xi >= 1
    GpdFit fit;
};

// Peaks-over-threshold tail risk on a loss sample.
inline EvtTail evt_tail_risk(std::span<const double> losses, const RiskConfig& config) {
    if (losses.size() < 100) throw std::invalid_argument("EVT needs at least 100 losses");
    if (config.alpha < config.threshold_q)
        throw std::invalid_argument(
            "EVT quantile level must not be below the threshold quantile (alpha >= u_q)");
    auto sorted = sorted_copy(losses);
    double u = quantile_sorted(sorted, config.threshold_q);
    std::vector<double> exceed;
    for (double l : losses)
        if (l > u) exceed.push_back(l - u);

    EvtTail out;
    out.fit = fit_gpd(exceed);
    out.fit.threshold = u;
    out.fit.zeta = static_cast<double>(exceed.size()) / static_cast<double>(losses.size());

    double xi = out.fit.xi, gamma = out.fit.gamma, zeta = out.fit.zeta;
    out.evt_var = u + (gamma / xi) * (std::pow((1.0 - config.alpha) / zeta, -xi) - 1.0);
    if (xi < 1.0) out.evt_cvar = (out.evt_var + gamma - xi * u) / (1.0 - xi);
    return out;
}

struct RiskReport {
    double var = 0.0;
    double cvar = 0.0;
    double mdd = 0.0;  // mean over MC paths
    std::optional<double> evt_var;
    std::optional<double> evt_cvar;
    std::optional<GpdFit> gpd_losses;
    std::optional<GpdFit> gpd_residuals;
    std::optional<double> residual_mean;
    std::optional<double> residual_stddev;
};

// Monte Carlo risk from the calibrated model, seeded and reproducible:
// simulate H steps ahead from the last observed price, measure losses
// L = S_0 - S_H, and apply EVT to both the loss tail and the absolute
// standardized residuals of the historical fit. Tail blocks degrade to
// "unavailable" rather than failing when the tail has too little data.
inline RiskReport risk_report(const SdeModel& model, std::span<const double> params,
                              std::span<const double> historical, const RiskConfig& config) {
    if (historical.empty()) throw std::invalid_argument("risk report needs history");
    SimConfig sim;
    sim.s0 = historical.back();
    sim.horizon = config.horizon;
    sim.n_paths = config.n_paths;
    sim.dt = config.dt;
    sim.seed = config.seed;
    Ensemble ensemble = simulate(model, params, sim);

    std::vector<double> losses;
    losses.reserve(ensemble.paths.size());
    double mdd_acc = 0.0;
    for (const auto& path : ensemble.paths) {
        losses.push_back(sim.s0 - path.back());
        mdd_acc += max_drawdown(path);
    }

    RiskReport rep;
    auto [var, cvar] = var_cvar(losses, config.alpha);
    rep.var = var;
    rep.cvar = cvar;
    rep.mdd = mdd_acc / static_cast<double>(ensemble.paths.size());

    try {
        EvtTail tail = evt_tail_risk(losses, config);
        rep.evt_var = tail.evt_var;
        rep.evt_cvar = tail.evt_cvar;
        rep.gpd_losses = tail.fit;
    } catch (const std::invalid_argument&) {
        // degenerate loss tail (e.g. zero-volatility model): leave unavailable
    }

    try {
        auto resid = standardized_residuals(historical, model, params, config.dt);
        rep.residual_mean = mean(resid);
        rep.residual_stddev = stddev(resid);
        std::vector<double> mag(resid.size());
        for (std::size_t i = 0; i < resid.size(); ++i) mag[i] = std::fabs(resid[i]);
        auto sorted = sorted_copy(mag);
        double u = quantile_sorted(sorted, config.threshold_q);
        std::vector<double> exceed;
        for (double v : mag)
            if (v > u) exceed.push_back(v - u);
        GpdFit fit = fit_gpd(exceed);
        fit.threshold = u;
        fit.zeta = static_cast<double>(exceed.size()) / static_cast<double>(mag.size());
        rep.gpd_residuals = fit;
    } catch (const std::invalid_argument&) {
        // degenerate diffusion or too few residual exceedances: unavailable
    }
    return rep;
}

}  // namespace sdekit
