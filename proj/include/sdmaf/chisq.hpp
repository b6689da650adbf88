#pragma once

#include <cmath>
#include <limits>

#include "sdmaf/types.hpp"

// Chi-square upper-tail probabilities via the regularized incomplete
// gamma function: series expansion below the crossover, Lentz continued
// fraction above it.  The continued fraction is carried in log space so
// -log10(p) stays finite far beyond double underflow (statistics in the
// thousands).

namespace sdmaf {
namespace detail {

/// Regularized lower incomplete gamma P(a,x); valid for x < a + 1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int i = 0; i < 10000; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * std::numeric_limits<double>::epsilon()) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

/// log of the regularized upper incomplete gamma Q(a,x) by modified
/// Lentz continued fraction; valid for x >= a + 1.
inline double log_gamma_q_cf(double a, double x) {
    const double eps = std::numeric_limits<double>::epsilon();
    const double fpmin = std::numeric_limits<double>::min() / eps;
    double b = x + 1.0 - a;
    double c = 1.0 / fpmin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) <= eps) break;
    }
    return -x + a * std::log(x) - std::lgamma(a) + std::log(h);
}

inline void check_chisq_args(double w, int df) {
    if (df < 1) throw Error("chi-square: df must be at least 1");
    if (!(w >= 0.0)) throw Error("chi-square: statistic must be non-negative");
}

}  // namespace detail

/// Natural log of Pr[X >= w] for X ~ chi-square with df degrees of freedom.
inline double chisq_log_sf(double w, int df) {
    detail::check_chisq_args(w, df);
    if (w == 0.0) return 0.0;
    const double a = 0.5 * df;
    const double x = 0.5 * w;
    if (x < a + 1.0) return std::log1p(-detail::gamma_p_series(a, x));
    return detail::log_gamma_q_cf(a, x);
}

/// Upper-tail probability Pr[X >= w]; underflows to 0 for extreme w
/// (use chisq_neg_log10_sf when the magnitude matters out there).
inline double chisq_sf(double w, int df) { return std::exp(chisq_log_sf(w, df)); }

/// -log10 of the upper-tail probability, finite for any representable w.
inline double chisq_neg_log10_sf(double w, int df) {
    static const double ln10 = std::log(10.0);
    return -chisq_log_sf(w, df) / ln10;
}

/// Upper-tail quantile: the w with chisq_sf(w, df) == p, by bisection.
inline double chisq_quantile_upper(double p, int df) {
    if (df < 1) throw Error("chi-square: df must be at least 1");
    if (!(p > 0.0) || p > 1.0) throw Error("chi-square: p must be in (0, 1]");
    if (p == 1.0) return 0.0;
    double lo = 0.0;
    double hi = static_cast<double>(df) + 10.0;
    while (chisq_sf(hi, df) > p) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw Error("chi-square: quantile out of range");
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (chisq_sf(mid, df) > p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline double chisq_median(int df) { return chisq_quantile_upper(0.5, df); }

/// Bundle a Wald statistic with its chi-square reference p-value.
inline TestResult make_test_result(double w, int df) {
    const double log_sf = chisq_log_sf(w, df);
    static const double ln10 = std::log(10.0);
    TestResult r;
    r.statistic = w;
    r.df = df;
    r.p_value = std::exp(log_sf);
    r.neg_log10_p = -log_sf / ln10;
    return r;
}

}  // namespace sdmaf
