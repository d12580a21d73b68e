#include <doctest.h>

#include <cmath>

#include "audit/rng.hpp"
#include "audit/stats.hpp"

using namespace audit;

TEST_CASE("normal cdf matches known values") {
    CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(stats::normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
    CHECK(stats::normal_cdf(-1.6448536269514722) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("normal quantile inverts the cdf") {
    for (double p : {0.001, 0.01, 0.05, 0.3, 0.5, 0.7, 0.95, 0.99, 0.999}) {
        CHECK(stats::normal_cdf(stats::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
    }
    CHECK_THROWS(stats::normal_quantile(0.0));
    CHECK_THROWS(stats::normal_quantile(1.0));
}

TEST_CASE("binomial pmf sums to one and matches direct computation") {
    std::vector<double> pmf;
    stats::binomial_pmf_table(10, 0.3, pmf);
    double total = 0.0;
    for (double p : pmf) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    // C(10,3) 0.3^3 0.7^7 = 120 * 0.027 * 0.0823543
    CHECK(stats::binomial_pmf(10, 3, 0.3) ==
          doctest::Approx(120.0 * std::pow(0.3, 3) * std::pow(0.7, 7)).epsilon(1e-12));
    CHECK(stats::binomial_pmf(5, 0, 0.0) == 1.0);
    CHECK(stats::binomial_pmf(5, 5, 1.0) == 1.0);
}

TEST_CASE("median conventions") {
    CHECK(stats::median({3.0, 1.0, 2.0}) == 2.0);
    // Even count: mean of the two central order statistics.
    CHECK(stats::median({4.0, 1.0, 3.0, 2.0}) == 2.5);
}

TEST_CASE("type-7 quantile interpolation") {
    std::vector<double> sorted{1.0, 2.0, 3.0, 4.0, 5.0};
    CHECK(stats::quantile_sorted(sorted, 0.0) == 1.0);
    CHECK(stats::quantile_sorted(sorted, 1.0) == 5.0);
    CHECK(stats::quantile_sorted(sorted, 0.5) == 3.0);
    CHECK(stats::quantile_sorted(sorted, 0.25) == 2.0);
    CHECK(stats::quantile_sorted(sorted, 0.1) == doctest::Approx(1.4));
}

TEST_CASE("constrained MLE honors the restriction and the data limit") {
    auto r = stats::constrained_mle(0.6, 100, 0.4, 100, 0.1);
    CHECK(r.p1 - r.p2 == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(r.p1 > 0.4);
    CHECK(r.p1 < 0.7);
    // With delta0 equal to the observed difference, the constrained MLE is
    // the unconstrained one.
    auto exact = stats::constrained_mle(0.6, 100, 0.4, 100, 0.2);
    CHECK(exact.p1 == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(exact.p2 == doctest::Approx(0.4).epsilon(1e-6));
}

TEST_CASE("rng streams are deterministic and schedule independent") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    // Derived streams depend only on (seed, index).
    CHECK(derive_seed(7, 3) == derive_seed(7, 3));
    CHECK(derive_seed(7, 3) != derive_seed(7, 4));
    CHECK(derive_seed(7, 3) != derive_seed(8, 3));
}

TEST_CASE("rng uniform doubles live in [0,1) and gaussians have sane moments") {
    Rng rng(123);
    double sum = 0.0, sum2 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sum2 += u * u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sum2 / n == doctest::Approx(1.0 / 3.0).epsilon(0.01));

    double gsum = 0.0, gsum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.next_gaussian();
        gsum += g;
        gsum2 += g * g;
    }
    CHECK(gsum / n == doctest::Approx(0.0).epsilon(0.02));
    CHECK(gsum2 / n == doctest::Approx(1.0).epsilon(0.02));
}
