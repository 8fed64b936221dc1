#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace psyprof {

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

inline double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Population variance (divide by n).
inline double variance(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

// Sample standard deviation (divide by n-1); 0 for n < 2.
inline double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Pearson correlation; 0 when either side has zero variance.
inline double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) return 0.0;
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    double r = sxy / std::sqrt(sxx * syy);
    if (r > 1.0) r = 1.0;
    if (r < -1.0) r = -1.0;
    return r;
}

inline double log_gamma(double x) { return std::lgamma(x); }

// Regularized incomplete beta I_x(a,b) via the modified Lentz continued
// fraction. Good to ~1e-12 over the ranges used by the t-test below.
inline double betacf(double a, double b, double x) {
    const double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-14) break;
    }
    return h;
}

inline double incbeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = log_gamma(a + b) - log_gamma(a) - log_gamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// Two-tailed p-value of a t statistic with nu degrees of freedom:
// p = I_{nu/(nu+t^2)}(nu/2, 1/2).
inline double t_two_tailed_p(double t, double nu) {
    if (nu <= 0.0) return 1.0;
    if (!std::isfinite(t)) return 0.0;
    const double x = nu / (nu + t * t);
    return incbeta(nu / 2.0, 0.5, x);
}

// p-value of Pearson r under the null of zero correlation, n pairs.
inline double pearson_p(double r, std::size_t n) {
    if (n < 3) return 1.0;
    const double nu = static_cast<double>(n - 2);
    const double denom = 1.0 - r * r;
    if (denom <= 0.0) return 0.0;
    const double t = r * std::sqrt(nu / denom);
    return t_two_tailed_p(t, nu);
}

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

} // namespace psyprof
