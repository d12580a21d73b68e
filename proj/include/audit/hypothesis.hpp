#pragma once

#include <cstdint>
#include <string>

namespace audit {

// The audit's null hypothesis, i.e. the legal presumption.
//   Compliance:    H0: g(f) <= 0  (burden of proof on the auditor)
//   NonCompliance: J0: g(f) >  0  (burden of proof on the provider)
enum class Presumption { Compliance, NonCompliance };

std::string presumption_name(Presumption p);

struct TestResult {
    double p_value = 1.0;
    bool reject = false;
    double gap = 0.0;  // observed |r1 - r2|
};

// Guard below which the normal approximation is not trusted.
inline constexpr long kZTestMinPerGroup = 30;
// Enumeration bound for the exact test.
inline constexpr std::uint64_t kExactEnumerationLimit = 1000000;
// The exact test's nuisance supremum runs over this many equally spaced
// baseline rates on each boundary. Part of the test's contract: independent
// reimplementations must use the same grid to reproduce p-values exactly.
inline constexpr int kNuisanceGridPoints = 201;

// Two-proportion boundary test on the rate gap, normal approximation with
// score-type standard errors.
//
// Presumption = Compliance: the null is |p1 - p2| <= eta; the p-value is
// computed at the least-favorable boundary |p1 - p2| = eta, taking the
// maximum over the two signed boundary cases.
//
// Presumption = NonCompliance: the null is |p1 - p2| > eta; two one-sided
// tests (TOST), p-value = max of the two one-sided p-values.
//
// Requires n1, n2 >= kZTestMinPerGroup; below that, use the exact test.
// Ties at zeta break toward rejection (reject iff p <= zeta).
TestResult boundary_z_test(long k1, long n1, long k2, long n2, double eta, double zeta,
                           Presumption presumption);

// The raw normal-approximation p-value with no sample-size guard. Only for
// cross-checks against the exact enumeration; audits go through
// boundary_z_test.
double boundary_z_p_value(long k1, long n1, long k2, long n2, double eta,
                          Presumption presumption);

// Same hypotheses, but the p-value comes from exhaustive enumeration of the
// joint binomial outcome space under the least-favorable boundary null, with
// a supremum over the unknown baseline rate on a fixed grid. Exact by
// construction, so it doubles as the small-sample benchmark. Requires
// n1 * n2 <= kExactEnumerationLimit.
TestResult exact_binomial_boundary_test(long k1, long n1, long k2, long n2, double eta,
                                        double zeta, Presumption presumption);

}  // namespace audit
