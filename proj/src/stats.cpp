#include "audit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace audit::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must be in (0,1)");

    // Acklam's rational approximation.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // One Newton polish step against the exact CDF.
    double e = normal_cdf(x) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

double log_choose(double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double binomial_pmf(long n, long k, double p) {
    if (k < 0 || k > n) return 0.0;
    if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
    if (p >= 1.0) return k == n ? 1.0 : 0.0;
    double logp = log_choose(static_cast<double>(n), static_cast<double>(k)) +
                  k * std::log(p) + (n - k) * std::log1p(-p);
    return std::exp(logp);
}

void binomial_pmf_table(long n, double p, std::vector<double>& pmf) {
    pmf.resize(static_cast<std::size_t>(n) + 1);
    for (long k = 0; k <= n; ++k) pmf[static_cast<std::size_t>(k)] = binomial_pmf(n, k, p);
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::domain_error("quantile_sorted: empty sample");
    if (q <= 0.0) return sorted.front();
    if (q >= 1.0) return sorted.back();
    const double h = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::domain_error("median: empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double two_proportion_se(double p1, long n1, double p2, long n2) {
    return std::sqrt(p1 * (1.0 - p1) / static_cast<double>(n1) +
                     p2 * (1.0 - p2) / static_cast<double>(n2));
}

ConstrainedRates constrained_mle(double p1_hat, long n1, double p2_hat, long n2, double delta0) {
    // Farrington & Manning (1990): maximum-likelihood rates under
    // p1 - p2 = delta0, via the trigonometric solution of the cubic.
    const double theta = static_cast<double>(n2) / static_cast<double>(n1);
    const double d = delta0;
    const double a = 1.0 + theta;
    const double b = -(1.0 + theta + p1_hat + theta * p2_hat + d * (theta + 2.0));
    const double c = d * d + d * (2.0 * p1_hat + theta + 1.0) + p1_hat + theta * p2_hat;
    const double e = -p1_hat * d * (1.0 + d);

    const double v = b * b * b / (27.0 * a * a * a) - b * c / (6.0 * a * a) + e / (2.0 * a);
    const double s2 = b * b / (9.0 * a * a) - c / (3.0 * a);
    double p1t;
    if (s2 <= 0.0) {
        p1t = -b / (3.0 * a);
    } else {
        const double s = std::sqrt(s2);
        double ratio = v / (s2 * s);
        ratio = std::clamp(ratio, -1.0, 1.0);
        const double w = (M_PI + std::acos(ratio)) / 3.0;
        p1t = 2.0 * s * std::cos(w) - b / (3.0 * a);
    }
    // Clamp into the feasible box; keeps the variance defined at the edges.
    p1t = std::clamp(p1t, std::max(0.0, d), std::min(1.0, 1.0 + d));
    return ConstrainedRates{p1t, p1t - d};
}

double score_se(double p1_hat, long n1, double p2_hat, long n2, double delta0) {
    const ConstrainedRates r = constrained_mle(p1_hat, n1, p2_hat, n2, delta0);
    double var = r.p1 * (1.0 - r.p1) / static_cast<double>(n1) +
                 r.p2 * (1.0 - r.p2) / static_cast<double>(n2);
    // Both constrained rates can hit {0,1} simultaneously only in degenerate
    // cases; floor the variance so the statistic stays finite.
    const double floor_var = 0.25 / static_cast<double>(n1) / static_cast<double>(n1) +
                             0.25 / static_cast<double>(n2) / static_cast<double>(n2);
    return std::sqrt(std::max(var, floor_var));
}

}  // namespace audit::stats
