#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace audit::stats {

// Standard normal CDF.
double normal_cdf(double x);

// Inverse standard normal CDF (Acklam's approximation plus one Newton step).
// Accurate to ~1e-12 for p in (0, 1).
double normal_quantile(double p);

// log C(n, k) via lgamma.
double log_choose(double n, double k);

// Binomial pmf P(X = k) for X ~ Bin(n, p).
double binomial_pmf(long n, long k, double p);

// Fills pmf[0..n] with Bin(n, p) probabilities.
void binomial_pmf_table(long n, double p, std::vector<double>& pmf);

// Linear-interpolation quantile (type 7) of an already sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double q);

// Median with the even-count convention: mean of the two central order
// statistics. Input need not be sorted.
double median(std::vector<double> values);

// Two-proportion Wald standard error sqrt(p1 q1 / n1 + p2 q2 / n2).
double two_proportion_se(double p1, long n1, double p2, long n2);

// Constrained MLEs (p1~, p2~) of two binomial proportions under the
// restriction p1 - p2 = delta0 (Farrington & Manning 1990, closed form).
struct ConstrainedRates {
    double p1;
    double p2;
};
ConstrainedRates constrained_mle(double p1_hat, long n1, double p2_hat, long n2, double delta0);

// Score-type standard error at the constrained MLE for delta0.
double score_se(double p1_hat, long n1, double p2_hat, long n2, double delta0);

}  // namespace audit::stats
