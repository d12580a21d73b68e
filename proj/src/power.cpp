#include "audit/power.hpp"

#include <atomic>
#include <cmath>

#include "audit/parallel.hpp"
#include "audit/stats.hpp"

namespace audit {

PowerEstimate estimate_operating_characteristics(const AuditSpec& spec,
                                                 const SyntheticModelSpec& synthetic,
                                                 std::size_t n_per_group, std::size_t trials,
                                                 std::uint64_t seed, int workers) {
    if (trials < 100) {
        throw ConfigError("operating-characteristic estimation needs at least 100 trials; " +
                          std::to_string(trials) + " would have a useless standard error");
    }
    spec.validate();
    if (!synthetic.is_group_threshold()) {
        throw ConfigError(
            "operating characteristics are estimated against group-threshold synthetic "
            "specs (their parity ground truth is analytic)");
    }
    const auto* parity = std::get_if<StatisticalParityCriterion>(&spec.criterion);
    if (parity == nullptr) {
        throw ConfigError("operating characteristics need a statistical-parity criterion");
    }
    const auto& gt = synthetic.group_threshold();
    // Ground truth under the audit's own criterion, not the spec's designated
    // one. The boundary (g = 0) belongs to the null; the epsilon keeps
    // gap-exactly-eta specs there despite floating-point subtraction.
    const double true_g = std::abs(gt.p1 - gt.p2) - parity->eta;
    const bool h0_true = true_g <= 1e-12;

    const auto model = make_synthetic(synthetic);
    const SamplingStrategy strategy = StratifiedStrategy{
        DistributionSpec::uniform_over(model->input_schema()),
        {{gt.group1, n_per_group}, {gt.group2, n_per_group}}};

    std::vector<unsigned char> rejected(trials, 0);
    parallel_for(trials, workers, [&](std::size_t t) {
        QueryBudget budget(2 * n_per_group);
        const Evidence evidence =
            collect(*model, strategy, 2 * n_per_group, budget, derive_seed(seed, t), 1);
        const RunResult result = run_audit(evidence, spec);
        if (!result.completed()) {
            throw EstimationError("trial audit was withheld: " + result.refusal->reason);
        }
        rejected[t] = result.outcome->decision == AuditDecision::RejectNull ? 1 : 0;
    });
    std::size_t rejections = 0;
    for (unsigned char r : rejected) rejections += r;

    PowerEstimate est;
    est.trials = trials;
    const double rate = static_cast<double>(rejections) / static_cast<double>(trials);
    const double se = std::sqrt(rate * (1.0 - rate) / static_cast<double>(trials));
    if (h0_true) {
        est.fpr_hat = rate;
        est.fpr_se = se;
    } else {
        est.tpr_hat = rate;
        est.tpr_se = se;
    }
    return est;
}

double analytic_two_proportion_power(double eta, double gap, double zeta,
                                     std::size_t n_per_group) {
    const long n = static_cast<long>(n_per_group);
    const double p1 = 0.5 + gap / 2.0;
    const double p2 = 0.5 - gap / 2.0;
    const double se_alt = stats::two_proportion_se(p1, n, p2, n);
    // Null standard error at the constrained rates the test would estimate in
    // expectation.
    const double se_null = stats::score_se(p1, n, p2, n, +eta);
    const double z_crit = stats::normal_quantile(1.0 - zeta);
    return stats::normal_cdf((gap - eta - z_crit * se_null) / se_alt);
}

std::size_t required_sample_size(double eta, double conjectured_gap, double zeta,
                                 double target_tpr) {
    if (!(conjectured_gap > eta)) {
        throw ConfigError(
            "no finite sample size exists: the conjectured gap " +
            format_double(conjectured_gap) + " does not exceed eta " + format_double(eta) +
            ", so the alternative lies inside the null region and power cannot exceed the "
            "test's size");
    }
    if (!(target_tpr > zeta && target_tpr < 1.0)) {
        throw ConfigError("target TPR must lie in (zeta, 1)");
    }
    const std::size_t min_n = static_cast<std::size_t>(kZTestMinPerGroup);
    if (analytic_two_proportion_power(eta, conjectured_gap, zeta, min_n) >= target_tpr) {
        return min_n;
    }
    std::size_t lo = min_n, hi = min_n;
    while (analytic_two_proportion_power(eta, conjectured_gap, zeta, hi) < target_tpr) {
        lo = hi;
        hi *= 2;
        if (hi > (1ULL << 40)) {
            throw ConfigError("required sample size exceeds any practical budget");
        }
    }
    while (lo + 1 < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (analytic_two_proportion_power(eta, conjectured_gap, zeta, mid) >= target_tpr) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

}  // namespace audit
