#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace sdekit {

inline double mean(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("mean of an empty sample");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

// Unbiased sample variance (n-1); zero for a single observation.
inline double variance(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("variance of an empty sample");
    if (x.size() == 1) return 0.0;
    double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

inline double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

// Moment-based skewness m3 / m2^1.5; 0 for a degenerate sample.
inline double skewness(std::span<const double> x) {
    double m = mean(x);
    double m2 = 0.0, m3 = 0.0;
    for (double v : x) {
        double d = v - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= static_cast<double>(x.size());
    m3 /= static_cast<double>(x.size());
    if (m2 <= 0.0) return 0.0;
    return m3 / std::pow(m2, 1.5);
}

// Excess kurtosis m4 / m2^2 - 3; 0 for a degenerate sample.
inline double excess_kurtosis(std::span<const double> x) {
    double m = mean(x);
    double m2 = 0.0, m4 = 0.0;
    for (double v : x) {
        double d = v - m;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(x.size());
    m4 /= static_cast<double>(x.size());
    if (m2 <= 0.0) return 0.0;
    return m4 / (m2 * m2) - 3.0;
}

inline std::vector<double> sorted_copy(std::span<const double> x) {
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    return s;
}

// Order-statistic quantile on a pre-sorted sample: Q(p) = x_(ceil(p*n)),
// 1-indexed, Q(0) = smallest. The 1e-9 slack keeps ceil from overshooting
// when p*n is an integer up to floating-point rounding (e.g. 0.9 * 10).
inline double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile level outside [0, 1]");
    auto n = static_cast<double>(sorted.size());
    auto k = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
    if (k == 0) k = 1;
    if (k > sorted.size()) k = sorted.size();
    return sorted[k - 1];
}

inline double quantile(std::span<const double> x, double p) {
    auto s = sorted_copy(x);
    return quantile_sorted(s, p);
}

inline double median(std::span<const double> x) {
    auto s = sorted_copy(x);
    std::size_t n = s.size();
    if (n == 0) throw std::invalid_argument("median of an empty sample");
    return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

// Median absolute deviation about the median.
inline double mad_about_median(std::span<const double> x) {
    double med = median(x);
    std::vector<double> dev(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) dev[i] = std::fabs(x[i] - med);
    return median(dev);
}

// Sample autocorrelation at the given lag, using the full-sample mean and
// variance normalization; 0 when the sample is degenerate or too short.
inline double autocorrelation(std::span<const double> x, std::size_t lag) {
    if (x.size() <= lag + 1) return 0.0;
    double m = mean(x);
    double denom = 0.0;
    for (double v : x) denom += (v - m) * (v - m);
    if (denom <= 0.0) return 0.0;
    double num = 0.0;
    for (std::size_t i = 0; i + lag < x.size(); ++i) num += (x[i] - m) * (x[i + lag] - m);
    return num / denom;
}

inline std::vector<double> log_returns(std::span<const double> prices) {
    if (prices.size() < 2) throw std::invalid_argument("log returns need at least two prices");
    std::vector<double> r;
    r.reserve(prices.size() - 1);
    for (std::size_t i = 1; i < prices.size(); ++i) {
        if (prices[i] <= 0.0 || prices[i - 1] <= 0.0)
            throw std::invalid_argument("log returns require positive prices");
        r.push_back(std::log(prices[i] / prices[i - 1]));
    }
    return r;
}

}  // namespace sdekit
