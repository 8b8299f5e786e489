#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdekit/simulate.hpp"
#include "sdekit/stats.hpp"

namespace sdekit {

struct MetricReport {
    double mean = 0.0;
    double variance = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;  // excess
    double p95 = 0.0;       // 95th percentile of returns
    double hill_estimator = 0.0;
    double hurst_exponent = 0.5;
    double jump_intensity = 0.0;
    double acf_1 = 0.0, acf_5 = 0.0, acf_10 = 0.0;
    double abs_acf_1 = 0.0, abs_acf_5 = 0.0, abs_acf_10 = 0.0;
    double growth_rate = 0.0;  // mean log-return per step
    double mad_median = 0.0;
};

inline const std::array<std::pair<const char*, double MetricReport::*>, 16>& metric_fields() {
    static const std::array<std::pair<const char*, double MetricReport::*>, 16> fields = {{
        {"mean", &MetricReport::mean},
        {"variance", &MetricReport::variance},
        {"skewness", &MetricReport::skewness},
        {"kurtosis", &MetricReport::kurtosis},
        {"p95", &MetricReport::p95},
        {"hill_estimator", &MetricReport::hill_estimator},
        {"hurst_exponent", &MetricReport::hurst_exponent},
        {"jump_intensity", &MetricReport::jump_intensity},
        {"acf_1", &MetricReport::acf_1},
        {"acf_5", &MetricReport::acf_5},
        {"acf_10", &MetricReport::acf_10},
        {"abs_acf_1", &MetricReport::abs_acf_1},
        {"abs_acf_5", &MetricReport::abs_acf_5},
        {"abs_acf_10", &MetricReport::abs_acf_10},
        {"growth_rate", &MetricReport::growth_rate},
        {"mad_median", &MetricReport::mad_median},
    }};
    return fields;
}

struct DistComparison {
    double ks_statistic = 0.0;
    double wasserstein_1 = 0.0;
    double mape = 0.0;
    std::map<std::string, double> metric_deltas;  // keyed by MetricReport field name
};

// Tail-index estimate over the k largest absolute values:
// (1/k) * sum_{i=1..k} [ln X_(n-i+1) - ln X_(n-k)] on ascending order statistics.
inline double hill_estimator(std::span<const double> returns, std::size_t k) {
    std::size_t n = returns.size();
    if (k < 1 || k >= n) throw std::invalid_argument("hill estimator needs 1 <= k < n");
    std::vector<double> mag(n);
    for (std::size_t i = 0; i < n; ++i) mag[i] = std::fabs(returns[i]);
    std::sort(mag.begin(), mag.end());
    double anchor = mag[n - k - 1];  // X_(n-k), 1-indexed
    if (anchor <= 0.0)
        throw std::invalid_argument("hill estimator requires positive order statistics in scope");
    double acc = 0.0;
    for (std::size_t i = 1; i <= k; ++i) acc += std::log(mag[n - i]) - std::log(anchor);
    return acc / static_cast<double>(k);
}

// Rescaled-range Hurst exponent: slope of log(R/S) against log(window) over
// window sizes {10, 20, 40, ...} up to n/2.
inline double hurst_exponent(std::span<const double> series) {
    std::size_t n = series.size();
    if (n < 100) throw std::invalid_argument("hurst exponent needs at least 100 observations");
    std::vector<double> log_w, log_rs;
    for (std::size_t w = 10; w <= n / 2; w *= 2) {
        std::size_t blocks = n / w;
        double rs_sum = 0.0;
        std::size_t valid = 0;
        for (std::size_t b = 0; b < blocks; ++b) {
            auto block = series.subspan(b * w, w);
            double m = mean(block);
            double cum = 0.0, hi = 0.0, lo = 0.0, ss = 0.0;
            for (double v : block) {
                cum += v - m;
                hi = std::max(hi, cum);
                lo = std::min(lo, cum);
                ss += (v - m) * (v - m);
            }
            double s = std::sqrt(ss / static_cast<double>(w));
            if (s > 0.0) {
                rs_sum += (hi - lo) / s;
                ++valid;
            }
        }
        if (valid > 0) {
            log_w.push_back(std::log(static_cast<double>(w)));
            log_rs.push_back(std::log(rs_sum / static_cast<double>(valid)));
        }
    }
    if (log_w.size() < 2)
        throw std::invalid_argument("hurst exponent is degenerate on this series");
    double mx = mean(log_w), my = mean(log_rs);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < log_w.size(); ++i) {
        num += (log_w[i] - mx) * (log_rs[i] - my);
        den += (log_w[i] - mx) * (log_w[i] - mx);
    }
    return num / den;
}

// Two-sample Kolmogorov-Smirnov statistic sup |F1 - F2|.
inline double ks_statistic(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks statistic needs non-empty samples");
    auto sa = sorted_copy(a);
    auto sb = sorted_copy(b);
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < sa.size() && j < sb.size()) {
        double x = std::min(sa[i], sb[j]);
        while (i < sa.size() && sa[i] <= x) ++i;
        while (j < sb.size() && sb[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / static_cast<double>(sa.size()) -
                                  static_cast<double>(j) / static_cast<double>(sb.size())));
    }
    return d;
}

// Wasserstein-1 by equal-weight quantile matching after resampling both
// samples to the common size M = max(n1, n2).
inline double wasserstein_1(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein needs non-empty samples");
    auto sa = sorted_copy(a);
    auto sb = sorted_copy(b);
    std::size_t m = std::max(sa.size(), sb.size());
    double acc = 0.0;
    for (std::size_t j = 1; j <= m; ++j) {
        double p = static_cast<double>(j) / static_cast<double>(m);
        acc += std::fabs(quantile_sorted(sa, p) - quantile_sorted(sb, p));
    }
    return acc / static_cast<double>(m);
}

// MAPE (in percent) between the 99 interior percentiles, skipping percentiles
// where the reference value is smaller than 1e-12 in magnitude.
inline double mape_percentiles(std::span<const double> sim, std::span<const double> hist) {
    auto ss = sorted_copy(sim);
    auto sh = sorted_copy(hist);
    double acc = 0.0;
    std::size_t count = 0;
    for (int p = 1; p <= 99; ++p) {
        double h = quantile_sorted(sh, p / 100.0);
        if (std::fabs(h) < 1e-12) continue;
        double s = quantile_sorted(ss, p / 100.0);
        acc += std::fabs(s - h) / std::fabs(h);
        ++count;
    }
    return count == 0 ? 0.0 : 100.0 * acc / static_cast<double>(count);
}

// Full report over a returns series (degenerate-sample conventions: zero
// variance gives zero skew/kurtosis/ACF, Hill falls back to 0 and Hurst to
// the white-noise value 0.5 so every field stays finite).
inline MetricReport report_from_returns(std::span<const double> r) {
    if (r.size() < 2) throw std::invalid_argument("metric report needs at least 2 returns");
    MetricReport rep;
    rep.mean = mean(r);
    rep.variance = variance(r);
    rep.skewness = skewness(r);
    rep.kurtosis = excess_kurtosis(r);
    rep.p95 = quantile(r, 0.95);
    std::size_t k = static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(r.size())));
    try {
        rep.hill_estimator = hill_estimator(r, std::max<std::size_t>(k, 1));
    } catch (const std::invalid_argument&) {
        rep.hill_estimator = 0.0;
    }
    try {
        rep.hurst_exponent = r.size() >= 100 ? hurst_exponent(r) : 0.5;
    } catch (const std::invalid_argument&) {
        rep.hurst_exponent = 0.5;
    }
    double sd = stddev(r);
    if (sd > 0.0) {
        std::size_t jumps = 0;
        for (double v : r) jumps += std::fabs(v) > 3.0 * sd;
        rep.jump_intensity = static_cast<double>(jumps) / static_cast<double>(r.size());
    }
    std::vector<double> absr(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) absr[i] = std::fabs(r[i]);
    rep.acf_1 = autocorrelation(r, 1);
    rep.acf_5 = autocorrelation(r, 5);
    rep.acf_10 = autocorrelation(r, 10);
    rep.abs_acf_1 = autocorrelation(absr, 1);
    rep.abs_acf_5 = autocorrelation(absr, 5);
    rep.abs_acf_10 = autocorrelation(absr, 10);
    rep.growth_rate = rep.mean;
    rep.mad_median = mad_about_median(r);
    return rep;
}

inline MetricReport summary_stats(std::span<const double> series) {
    if (series.size() < 30) throw std::invalid_argument("summary stats need at least 30 observations");
    auto r = log_returns(series);
    return report_from_returns(r);
}

inline DistComparison compare_distributions(std::span<const double> sim_returns,
                                            std::span<const double> hist_returns) {
    if (sim_returns.size() < 30 || hist_returns.size() < 30)
        throw std::invalid_argument("distribution comparison needs at least 30 returns per sample");
    DistComparison out;
    out.ks_statistic = ks_statistic(sim_returns, hist_returns);
    out.wasserstein_1 = wasserstein_1(sim_returns, hist_returns);
    out.mape = mape_percentiles(sim_returns, hist_returns);
    MetricReport s = report_from_returns(sim_returns);
    MetricReport h = report_from_returns(hist_returns);
    for (const auto& [name, member] : metric_fields())
        out.metric_deltas[name] = std::fabs(s.*member - h.*member);
    return out;
}

struct CandidateEvaluation {
    MetricReport historical;
    MetricReport simulated;  // field-wise mean over ensemble paths
    DistComparison comparison;
};

// Critic-side evaluation of one simulated ensemble against the data: the
// ensemble report is the per-path report averaged field-wise; the
// distributional comparison pools all simulated returns.
inline CandidateEvaluation evaluate_candidate(const Ensemble& ensemble,
                                              std::span<const double> historical) {
    if (ensemble.paths.empty()) throw std::invalid_argument("empty ensemble");
    CandidateEvaluation ev;
    ev.historical = summary_stats(historical);
    std::vector<double> pooled;
    bool first = true;
    for (const auto& path : ensemble.paths) {
        MetricReport rep = summary_stats(path);
        for (const auto& [name, member] : metric_fields()) {
            if (first)
                ev.simulated.*member = rep.*member;
            else
                ev.simulated.*member += rep.*member;
        }
        first = false;
        auto r = log_returns(path);
        pooled.insert(pooled.end(), r.begin(), r.end());
    }
    auto n = static_cast<double>(ensemble.paths.size());
    for (const auto& [name, member] : metric_fields()) ev.simulated.*member /= n;

    auto hist_returns = log_returns(historical);
    ev.comparison.ks_statistic = ks_statistic(pooled, hist_returns);
    ev.comparison.wasserstein_1 = wasserstein_1(pooled, hist_returns);
    ev.comparison.mape = mape_percentiles(pooled, hist_returns);
    for (const auto& [name, member] : metric_fields())
        ev.comparison.metric_deltas[name] = std::fabs(ev.simulated.*member - ev.historical.*member);
    return ev;
}

}  // namespace sdekit
