#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdekit/model.hpp"
#include "sdekit/rng.hpp"

namespace sdekit {

inline constexpr double kTradingDt = 1.0 / 252.0;
inline constexpr double kStateFloor = 1e-8;

struct SimConfig {
    double s0 = 100.0;
    std::size_t horizon = 252;  // number of Euler steps
    std::size_t n_paths = 1000;
    double dt = kTradingDt;
    std::uint64_t seed = 0;
    double t0 = 0.0;
};

struct Ensemble {
    std::vector<std::vector<double>> paths;  // n_paths x (horizon + 1)
    double dt = kTradingDt;
    double t0 = 0.0;
    std::uint64_t seed = 0;
    std::string model_source;

    [[nodiscard]] std::vector<double> terminal_values() const {
        std::vector<double> out;
        out.reserve(paths.size());
        for (const auto& p : paths) out.push_back(p.back());
        return out;
    }
};

class SimulationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

// Euler-Maruyama over one path. Noise layout per path:
//   substream("dW")          one gaussian per step
//   substream("jumps")       one uniform per step (Poisson count via inverse CDF)
//   substream("jumpsize")/k  gaussians for the jumps landing in step k
// Keying jump sizes by step index means a change in one step's jump count
// cannot shift any other step's draws, and a zero-intensity jump model
// consumes exactly the same "dW" stream as the jump-free model.
inline std::vector<double> euler_path(const SdeModel& m, std::span<const double> theta,
                                      const SimConfig& cfg, const Rng& path_rng) {
    Rng gauss = path_rng.substream("dW");
    Rng jump_count = path_rng.substream("jumps");
    Rng jump_size_root = path_rng.substream("jumpsize");
    const JumpParams jp = jump_params(m, theta);

    std::vector<double> path(cfg.horizon + 1);
    path[0] = std::max(cfg.s0, kStateFloor);
    const double sqrt_dt = std::sqrt(cfg.dt);
    for (std::size_t k = 0; k < cfg.horizon; ++k) {
        const double s = path[k];
        const double t = cfg.t0 + static_cast<double>(k) * cfg.dt;
        double f = 0.0, g = 0.0;
        try {
            f = eval_drift(m, s, t, theta);
            g = eval_diffusion(m, s, t, theta);
        } catch (const EvalError& e) {
            throw SimulationError(std::string("simulation failed: ") + e.what() + " [" +
                                  render_model(m) + " with " + format_params(m, theta) + "]");
        }
        double ds = f * cfg.dt + g * sqrt_dt * gauss.next_gaussian();
        if (m.has_jump) {
            int n = jump_count.next_poisson(jp.lambda * cfg.dt);
            if (n > 0) {
                Rng js = jump_size_root.substream(k);
                double jump_total = 0.0;
                for (int i = 0; i < n; ++i) jump_total += jp.mean + jp.sigma * js.next_gaussian();
                ds += s * jump_total;
            }
        }
        double next = s + ds;
        if (!std::isfinite(next))
            throw SimulationError("simulation produced a non-finite state at step " +
                                  std::to_string(k + 1) + " [" + render_model(m) + " with " +
                                  format_params(m, theta) + "]");
        path[k + 1] = std::max(next, kStateFloor);
    }
    return path;
}

}  // namespace detail

inline void validate_sim_inputs(const SdeModel& m, std::span<const double> theta,
                                const SimConfig& cfg) {
    if (theta.size() != m.n_params())
        throw std::invalid_argument("parameter count mismatch: model '" + render_model(m) +
                                    "' takes " + std::to_string(m.n_params()) + " parameters, got " +
                                    std::to_string(theta.size()));
    if (cfg.horizon == 0) throw std::invalid_argument("simulation horizon must be positive");
    if (cfg.dt <= 0.0) throw std::invalid_argument("simulation dt must be positive");
}

// One path of the ensemble, identified by its index; path i here is
// bit-identical to simulate(...).paths[i] for the same seed. Calibration
// relies on this to regenerate the frozen noise path cheaply.
inline std::vector<double> simulate_path(const SdeModel& m, std::span<const double> theta,
                                         const SimConfig& cfg, std::uint64_t path_index) {
    validate_sim_inputs(m, theta, cfg);
    Rng root(cfg.seed);
    return detail::euler_path(m, theta, cfg, root.substream(path_index));
}

inline Ensemble simulate(const SdeModel& m, std::span<const double> theta, const SimConfig& cfg) {
    validate_sim_inputs(m, theta, cfg);
    if (cfg.n_paths == 0) throw std::invalid_argument("ensemble needs at least one path");
    Rng root(cfg.seed);
    Ensemble out;
    out.dt = cfg.dt;
    out.t0 = cfg.t0;
    out.seed = cfg.seed;
    out.model_source = m.source.empty() ? render_model(m) : m.source;
    out.paths.reserve(cfg.n_paths);
    for (std::size_t p = 0; p < cfg.n_paths; ++p)
        out.paths.push_back(detail::euler_path(m, theta, cfg, root.substream(p)));
    return out;
}

}  // namespace sdekit
