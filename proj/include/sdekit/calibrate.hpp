#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdekit/model.hpp"
#include "sdekit/simulate.hpp"

namespace sdekit {

struct CalibConfig {
    int max_iters = 200;
    double eta = 1e-2;       // initial step scale, per parameter
    double fd_eps = 1e-4;    // relative finite-difference epsilon
    std::size_t n_paths = 64;  // evaluation ensemble size for consumers of the fit
    std::uint64_t seed = 0;
    double clamp_lo = -10.0;
    double clamp_hi = 10.0;
    double tol = 1e-6;  // convergence tolerance on loss change
};

struct CalibResult {
    std::vector<double> params;
    double loss = 0.0;
    std::vector<double> trace;  // initial loss plus one entry per accepted step
    bool converged = false;
};

// Time-averaged ensemble MAE against a single observed path:
// (1/T) sum_t (1/N) sum_i |S_{t,i} - S*_t|.
inline double mae_loss(const Ensemble& ensemble, const std::vector<double>& historical) {
    if (ensemble.paths.empty()) throw std::invalid_argument("mae_loss: empty ensemble");
    if (historical.empty()) throw std::invalid_argument("mae_loss: empty historical path");
    for (const auto& p : ensemble.paths)
        if (p.size() != historical.size())
            throw std::invalid_argument(
                "mae_loss: ensemble path has " + std::to_string(p.size()) +
                " points but historical has " + std::to_string(historical.size()));
    double total = 0.0;
    for (std::size_t t = 0; t < historical.size(); ++t) {
        double acc = 0.0;
        for (const auto& p : ensemble.paths) acc += std::abs(p[t] - historical[t]);
        total += acc / static_cast<double>(ensemble.paths.size());
    }
    return total / static_cast<double>(historical.size());
}

// Calibration objective: MAE along the single frozen noise path that
// simulate() would produce as path 0 of the same seed.  Shared draws make the
// loss a smooth deterministic function of the parameters, and data generated
// by the simulator under the same seed is reproduced exactly at the true
// parameters (loss -> 0).
inline double calibration_loss(const SdeModel& m, const std::vector<double>& theta,
                               const std::vector<double>& historical, const CalibConfig& cfg) {
    if (historical.size() < 2)
        throw std::invalid_argument("calibration_loss: historical path needs >= 2 prices");
    SimConfig sc;
    sc.s0 = historical.front();
    sc.horizon = historical.size() - 1;
    sc.n_paths = 1;
    sc.seed = cfg.seed;
    std::vector<double> path = simulate_path(m, theta, sc, 0);
    double acc = 0.0;
    for (std::size_t t = 0; t < historical.size(); ++t) acc += std::abs(path[t] - historical[t]);
    return acc / static_cast<double>(historical.size());
}

namespace detail {

inline double loss_or_inf(const SdeModel& m, const std::vector<double>& theta,
                          const std::vector<double>& historical, const CalibConfig& cfg) {
    try {
        double l = calibration_loss(m, theta, historical, cfg);
        return std::isfinite(l) ? l : std::numeric_limits<double>::infinity();
    } catch (const SimulationError&) {
        return std::numeric_limits<double>::infinity();
    }
}

}  // namespace detail

// Central finite-difference gradient of the calibration objective,
// h_j = eps * max(|theta_j|, 1).
inline std::vector<double> calibration_gradient(const SdeModel& m,
                                                const std::vector<double>& historical,
                                                const std::vector<double>& theta,
                                                const CalibConfig& cfg, double eps) {
    std::vector<double> g(theta.size(), 0.0);
    std::vector<double> probe = theta;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        double h = eps * std::max(std::abs(theta[j]), 1.0);
        probe[j] = theta[j] + h;
        double up = detail::loss_or_inf(m, probe, historical, cfg);
        probe[j] = theta[j] - h;
        double down = detail::loss_or_inf(m, probe, historical, cfg);
        probe[j] = theta[j];
        if (std::isinf(up) && std::isinf(down))
            g[j] = 0.0;
        else if (std::isinf(up))
            g[j] = std::numeric_limits<double>::infinity();
        else if (std::isinf(down))
            g[j] = -std::numeric_limits<double>::infinity();
        else
            g[j] = (up - down) / (2.0 * h);
    }
    return g;
}

inline CalibResult calibrate(const SdeModel& m, const std::vector<double>& historical,
                             const std::vector<double>& init, const CalibConfig& cfg = {}) {
    if (historical.size() < 10)
        throw std::invalid_argument("calibrate: historical path needs >= 10 prices");
    for (double p : historical)
        if (!(p > 0.0) || !std::isfinite(p))
            throw std::invalid_argument("calibrate: historical prices must be positive and finite");
    if (init.size() != m.n_params())
        throw std::invalid_argument("calibrate: expected " + std::to_string(m.n_params()) +
                                    " initial parameters, got " + std::to_string(init.size()));

    const std::size_t n = init.size();

    // Per-parameter boxes: the default clamp, widened to +-2|theta0| for
    // price-scale parameters the default box cannot hold; jump intensity and
    // jump volatility stay non-negative.
    std::vector<double> lo(n, cfg.clamp_lo), hi(n, cfg.clamp_hi);
    for (std::size_t j = 0; j < n; ++j) {
        if (init[j] < lo[j] || init[j] > hi[j]) {
            lo[j] = std::min(lo[j], -2.0 * std::abs(init[j]));
            hi[j] = std::max(hi[j], 2.0 * std::abs(init[j]));
        }
    }
    if (m.has_jump) {
        lo[m.n_letters()] = std::max(lo[m.n_letters()], 0.0);          // intensity
        lo[m.n_letters() + 2] = std::max(lo[m.n_letters() + 2], 0.0);  // jump sigma
    }

    std::vector<double> theta = init;
    for (std::size_t j = 0; j < n; ++j) theta[j] = std::clamp(theta[j], lo[j], hi[j]);

    CalibResult res;
    double loss = detail::loss_or_inf(m, theta, historical, cfg);
    if (!std::isfinite(loss))
        throw std::invalid_argument("calibrate: initial loss is not finite for " +
                                    render_model(m) + " at " + format_params(m, theta));
    const double initial_loss = loss;
    res.trace.push_back(loss);

    std::vector<double> step(n), step_max(n);
    for (std::size_t j = 0; j < n; ++j) {
        step[j] = cfg.eta * std::max(std::abs(theta[j]), 1.0);
        step_max[j] = std::max(std::abs(theta[j]), 10.0);
    }
    std::vector<int> prev_sign(n, 0);

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        std::vector<double> g = calibration_gradient(m, historical, theta, cfg, cfg.fd_eps);

        std::vector<int> sign(n, 0);
        for (std::size_t j = 0; j < n; ++j) {
            sign[j] = (g[j] > 0.0) - (g[j] < 0.0);
            if (sign[j] * prev_sign[j] > 0)
                step[j] = std::min(step[j] * 1.2, step_max[j]);
            else if (sign[j] * prev_sign[j] < 0)
                step[j] *= 0.5;
            prev_sign[j] = sign[j];
        }

        auto make_candidate = [&] {
            std::vector<double> c = theta;
            for (std::size_t j = 0; j < n; ++j)
                c[j] = std::clamp(theta[j] - static_cast<double>(sign[j]) * step[j], lo[j], hi[j]);
            return c;
        };

        std::vector<double> cand = make_candidate();
        double cand_loss = detail::loss_or_inf(m, cand, historical, cfg);
        int tries = 0;
        while (cand_loss > loss && tries < 40) {
            for (double& s : step) s *= 0.5;
            cand = make_candidate();
            cand_loss = detail::loss_or_inf(m, cand, historical, cfg);
            ++tries;
        }

        if (cand_loss > loss) {
            // no descent available along the sign directions
            bool all_at_bounds = true;
            for (std::size_t j = 0; j < n; ++j)
                if (theta[j] != lo[j] && theta[j] != hi[j]) all_at_bounds = false;
            res.converged = !all_at_bounds;
            break;
        }

        double improvement = loss - cand_loss;
        theta = cand;
        loss = cand_loss;
        res.trace.push_back(loss);

        if (loss > 1e6 * initial_loss && initial_loss > 0.0) {
            res.converged = false;
            break;
        }
        if (improvement < cfg.tol) {
            res.converged = true;
            break;
        }
    }

    res.params = theta;
    res.loss = loss;
    return res;
}

}  // namespace sdekit
