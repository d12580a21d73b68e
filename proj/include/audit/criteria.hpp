#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "audit/evidence.hpp"
#include "audit/model.hpp"

namespace audit {

// --- Criterion definitions ---------------------------------------------------
// Each criterion is a concrete g: F -> R; the model complies iff g(f) <= 0.

enum class LossKind {
    Zero,            // l(y, x) = 0
    OutputValue,     // l(y, x) = y (the model's score read as a loss)
    AbsDiffFeature,  // l(y, x) = |y - x_feature|
};

// g(f) = max over x in S of l(f(x), x) - eta, computed exhaustively over the
// finite query set S.
struct MaxLossCriterion {
    LossKind loss = LossKind::OutputValue;
    std::string feature;  // for AbsDiffFeature
    std::vector<ModelInput> query_set;
    double eta = 0.1;
};

// g(f) = |rate(G_1) - rate(G_2)| - eta for a binary classifier.
struct StatisticalParityCriterion {
    std::string group1 = "G_1";
    std::string group2 = "G_2";
    double eta = 0.1;
};

// g(f) = sup over x, x' of D(f(x), f(x')) / d(x, x') - L. Finite evidence can
// only bound this from below; estimates are one-sided by construction.
struct IndividualFairnessCriterion {
    double lipschitz = 1.0;
};

// The LL144 metric family over demographic category axes. Whether a cell
// gets selection- or score-based metrics follows from which outcomes its
// rows carry. `eta` is the rate-gap threshold used when this criterion
// drives a hypothesis test; metric computation alone ignores it, and there
// is deliberately no default.
struct ImpactMetricsCriterion {
    std::vector<std::string> axes;  // e.g. {"race_ethnicity", "sex"}
    std::optional<double> eta;
};

using ComplianceCriterion = std::variant<MaxLossCriterion, StatisticalParityCriterion,
                                         IndividualFairnessCriterion, ImpactMetricsCriterion>;

std::string criterion_name(const ComplianceCriterion& criterion);
double criterion_threshold(const ComplianceCriterion& criterion);

// --- Estimates ----------------------------------------------------------------

struct CriterionEstimate {
    double g_hat = 0.0;
    std::optional<double> std_error;
    // Set when the estimate can only bound g from below (individual fairness,
    // or a max-loss sweep that did not exhaust S).
    bool lower_bound = false;

    // Parity bookkeeping.
    std::optional<long> k1, n1, k2, n2;
    std::optional<double> rate1, rate2;

    // Individual-fairness bookkeeping.
    std::optional<std::pair<ModelInput, ModelInput>> witness;
    std::size_t degenerate_pairs = 0;  // skipped d(x,x') = 0 or incomparable pairs
    // True when a pair with d = 0 but D > 0 was seen: a direct violation,
    // reported as a witness rather than folded into a quotient.
    bool zero_distance_violation = false;
};

// Exhaustive max-loss evaluation over criterion.query_set. Refuses when the
// budget cannot cover |S|: exhaustiveness is this operation's contract.
CriterionEstimate eval_max_loss(const BlackBoxModel& model, const MaxLossCriterion& criterion,
                                QueryBudget& budget, std::uint64_t seed);

// Two-proportion parity estimate from logged binary outputs. Refuses (naming
// the missing group) when either group has no records.
CriterionEstimate estimate_statistical_parity(const Evidence& evidence,
                                              const StatisticalParityCriterion& criterion);

// One-sided Lipschitz lower bound over all pairs of logged records.
CriterionEstimate lipschitz_lower_bound(const Evidence& evidence,
                                        const IndividualFairnessCriterion& criterion);

// --- Impact metric tables ------------------------------------------------------

// Neutral row format shared by evidence-derived and historical-table inputs.
struct OutcomeRow {
    std::map<std::string, std::string> categories;  // axis -> value
    std::optional<bool> selected;
    std::optional<double> score;
};

struct ImpactCell {
    std::string key;  // category value, or "a|b" for intersections
    long total = 0;
    std::optional<long> selected_count;
    std::optional<double> selection_rate;
    std::optional<double> scoring_rate;   // fraction scoring above the pooled median
    std::optional<double> median_score;
    std::optional<double> selection_impact_ratio;  // rate / max cell rate
    std::optional<double> scoring_impact_ratio;
};

struct ImpactTable {
    std::string axis;  // "race_ethnicity", or "race_ethnicity|sex" for intersections
    std::vector<ImpactCell> cells;
    std::optional<double> pooled_median_score;
};

// Per-category metric tables: one per axis plus the full intersection when
// more than one axis is declared. Cells appear in lexicographic key order.
// Empty metric slots stay empty; they are never reported as zero.
std::vector<ImpactTable> impact_metrics(std::span<const OutcomeRow> rows,
                                        const ImpactMetricsCriterion& criterion);

// Adapter: parity-style evidence (group + binary output) as outcome rows.
std::vector<OutcomeRow> rows_from_evidence(const Evidence& evidence,
                                           const std::string& axis_name = "group");

// Stable-column exports (schema documented in the README).
std::string impact_tables_to_csv(const std::vector<ImpactTable>& tables);
std::string impact_tables_to_json(const std::vector<ImpactTable>& tables);

}  // namespace audit
