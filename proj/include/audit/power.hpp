#pragma once

#include <cstdint>
#include <optional>

#include "audit/auditor.hpp"
#include "audit/synthetic.hpp"

namespace audit {

struct PowerEstimate {
    std::optional<double> fpr_hat;  // set when the synthetic spec is compliant (H0 true)
    std::optional<double> tpr_hat;  // set when it is non-compliant (H1 true)
    std::optional<double> fpr_se;
    std::optional<double> tpr_se;
    std::size_t trials = 0;
};

// Runs `trials` end-to-end audits (collect -> estimate -> test) against fresh
// evidence sampled from the synthetic model, n per group. The synthetic
// spec's parameters determine the ground-truth state H, so rejections count
// toward the FPR under H0 and the TPR under H1. Trials parallelize over
// seeded sub-streams; the result is independent of worker count.
// Refuses trials < 100 (the Monte Carlo standard error would be meaningless).
PowerEstimate estimate_operating_characteristics(const AuditSpec& spec,
                                                 const SyntheticModelSpec& synthetic,
                                                 std::size_t n_per_group, std::size_t trials,
                                                 std::uint64_t seed, int workers = 1);

// Normal-approximation power of the compliance-presumption boundary test at
// significance zeta for a true gap, with the baseline-rate convention
// p1 = 0.5 + gap/2, p2 = 0.5 - gap/2.
double analytic_two_proportion_power(double eta, double gap, double zeta,
                                     std::size_t n_per_group);

// Smallest n per group whose analytic power reaches target_tpr. Bisection
// over the monotone power curve; the minimum supported size is the z-test
// guard. Throws when gap <= eta: no finite n can reach any target above the
// size in that regime.
std::size_t required_sample_size(double eta, double conjectured_gap, double zeta,
                                 double target_tpr);

}  // namespace audit
