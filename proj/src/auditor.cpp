#include "audit/auditor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "audit/bootstrap.hpp"
#include "audit/power.hpp"
#include "audit/stats.hpp"

namespace audit {

std::string test_method_name(TestMethod m) {
    switch (m) {
        case TestMethod::BoundaryZ: return "boundary_z";
        case TestMethod::ExactBinomialBoundary: return "exact_binomial_boundary";
        case TestMethod::TOSTEquivalence: return "tost_equivalence";
        case TestMethod::BootstrapCI: return "bootstrap_ci";
    }
    return "unknown";
}

TestMethod test_method_from_name(const std::string& name) {
    if (name == "boundary_z") return TestMethod::BoundaryZ;
    if (name == "exact_binomial_boundary") return TestMethod::ExactBinomialBoundary;
    if (name == "tost_equivalence") return TestMethod::TOSTEquivalence;
    if (name == "bootstrap_ci") return TestMethod::BootstrapCI;
    throw ConfigError("unknown test method '" + name + "'");
}

std::string decision_name(AuditDecision d) {
    return d == AuditDecision::RejectNull ? "reject_null" : "fail_to_reject";
}

void AuditSpec::validate() const {
    if (!(zeta > 0.0 && zeta <= 0.5)) {
        throw ConfigError("significance zeta must lie in (0, 0.5], got " + format_double(zeta));
    }
    if (method == TestMethod::TOSTEquivalence && presumption != Presumption::NonCompliance) {
        throw ConfigError(
            "tost_equivalence tests the null of non-compliance; set presumption to "
            "non_compliance or pick boundary_z/exact_binomial_boundary");
    }
    if (const auto* sp = std::get_if<StatisticalParityCriterion>(&criterion)) {
        if (!(sp->eta > 0.0)) throw ConfigError("parity threshold eta must be positive");
        if (sp->group1 == sp->group2) throw ConfigError("parity groups must differ");
    } else if (const auto* im = std::get_if<ImpactMetricsCriterion>(&criterion)) {
        if (im->axes.empty()) throw ConfigError("impact metrics need at least one axis");
        if (!im->eta) {
            throw ConfigError(
                "impact metrics audits need an explicit rate-gap threshold; "
                "the toolkit refuses to invent one");
        }
    } else if (const auto* ml = std::get_if<MaxLossCriterion>(&criterion)) {
        if (!(ml->eta > 0.0)) throw ConfigError("max-loss threshold eta must be positive");
    } else if (const auto* ifc = std::get_if<IndividualFairnessCriterion>(&criterion)) {
        if (!(ifc->lipschitz > 0.0)) throw ConfigError("Lipschitz constant must be positive");
    }
    if (method == TestMethod::BootstrapCI && bootstrap_resamples < 1000) {
        throw ConfigError("bootstrap method needs at least 1000 resamples");
    }
}

namespace {

Disclosure base_disclosure(const Evidence& evidence, const AuditSpec& spec) {
    Disclosure d;
    d.criterion = criterion_name(spec.criterion);
    d.criterion_threshold = criterion_threshold(spec.criterion);
    d.presumption = spec.presumption;
    d.zeta = spec.zeta;
    d.method = spec.method;
    d.assumptions = spec.assumptions;
    if (d.assumptions.input_distribution.empty()) {
        d.assumptions.input_distribution = evidence.provenance.distribution;
    }
    d.n = evidence.n();
    d.truncated = evidence.provenance.truncated;
    d.model_identity = evidence.provenance.model_identity;
    d.evidence_distribution = evidence.provenance.distribution;
    if (d.truncated) {
        d.notes.push_back("evidence was truncated by the query budget; see provenance");
    }
    for (const auto& note : evidence.provenance.exclusions) d.notes.push_back(note);
    if (!evidence.records.empty() && !evidence.records.front().replayable) {
        d.notes.push_back(
            "remote model randomness is not replayable; per-query seeds were not transmitted");
    }
    return d;
}

void finish_statement(AuditOutcome& outcome) {
    const bool compliance = outcome.disclosure.presumption == Presumption::Compliance;
    const char* presumed = compliance ? "presumed compliant" : "presumed non-compliant";
    const char* verdict = outcome.decision == AuditDecision::RejectNull
                              ? "evidence does suffice to reject"
                              : "evidence does not suffice to reject";
    outcome.disclosure.statement = std::string(presumed) + "; " + verdict;
}

RunResult refuse(std::string reason, std::size_t recommended) {
    RunResult result;
    result.refusal = SampleSizeAdvice{std::move(reason), recommended};
    return result;
}

// Recommendation when the evidence cannot support the configured method. If
// the observed gap already exceeds eta, size the audit to detect that gap at
// 90% power; otherwise fall back to the method's minimum.
std::size_t recommend_n(const std::optional<CriterionEstimate>& est, double eta, double zeta) {
    const std::size_t method_min = static_cast<std::size_t>(kZTestMinPerGroup);
    if (est && est->rate1 && est->rate2) {
        const double gap = std::abs(*est->rate1 - *est->rate2);
        if (gap > eta + 1e-12) {
            return std::max(method_min, required_sample_size(eta, gap, zeta, 0.9));
        }
    }
    return method_min;
}

RunResult run_parity_audit(const Evidence& evidence, const AuditSpec& spec,
                           const StatisticalParityCriterion& criterion) {
    std::optional<CriterionEstimate> est;
    try {
        est = estimate_statistical_parity(evidence, criterion);
    } catch (const EstimationError& e) {
        return refuse(e.what(), recommend_n(est, criterion.eta, spec.zeta));
    }

    AuditOutcome outcome;
    outcome.estimate = *est;
    outcome.disclosure = base_disclosure(evidence, spec);

    const long k1 = *est->k1, n1 = *est->n1, k2 = *est->k2, n2 = *est->n2;
    try {
        switch (spec.method) {
            case TestMethod::BoundaryZ:
            case TestMethod::TOSTEquivalence: {
                const TestResult t = boundary_z_test(k1, n1, k2, n2, criterion.eta, spec.zeta,
                                                     spec.presumption);
                outcome.p_value = t.p_value;
                outcome.decision =
                    t.reject ? AuditDecision::RejectNull : AuditDecision::FailToReject;
                // Wald interval for the signed gap, reported alongside.
                const double diff = *est->rate1 - *est->rate2;
                const double z = stats::normal_quantile(1.0 - spec.zeta / 2.0);
                const double se = *est->std_error;
                outcome.confidence_interval = std::make_pair(diff - z * se, diff + z * se);
                break;
            }
            case TestMethod::ExactBinomialBoundary: {
                const TestResult t = exact_binomial_boundary_test(k1, n1, k2, n2, criterion.eta,
                                                                  spec.zeta, spec.presumption);
                outcome.p_value = t.p_value;
                outcome.decision =
                    t.reject ? AuditDecision::RejectNull : AuditDecision::FailToReject;
                break;
            }
            case TestMethod::BootstrapCI: {
                std::vector<QueryRecord> rows(evidence.records.begin(), evidence.records.end());
                const std::string g1 = criterion.group1, g2 = criterion.group2;
                std::function<std::optional<double>(const std::vector<QueryRecord>&)> gap_stat =
                    [g1, g2](const std::vector<QueryRecord>& sample) -> std::optional<double> {
                    long kk1 = 0, nn1 = 0, kk2 = 0, nn2 = 0;
                    for (const auto& rec : sample) {
                        if (!rec.input.group) continue;
                        const bool sel = rec.output.is_number() && rec.output.number() == 1.0;
                        if (*rec.input.group == g1) {
                            ++nn1;
                            kk1 += sel;
                        } else if (*rec.input.group == g2) {
                            ++nn2;
                            kk2 += sel;
                        }
                    }
                    if (nn1 == 0 || nn2 == 0) return std::nullopt;
                    return std::abs(static_cast<double>(kk1) / nn1 -
                                    static_cast<double>(kk2) / nn2);
                };
                const BootstrapInterval ci = bootstrap_ci<QueryRecord>(
                    rows, gap_stat, spec.bootstrap_resamples, spec.zeta, spec.seed);
                outcome.confidence_interval = std::make_pair(ci.lo, ci.hi);
                if (ci.redraws > 0) {
                    outcome.disclosure.notes.push_back(
                        std::to_string(ci.redraws) +
                        " bootstrap resamples were redrawn (statistic undefined)");
                }
                // CI-exclusion decision; no p-value is manufactured.
                if (spec.presumption == Presumption::Compliance) {
                    outcome.decision = ci.lo > criterion.eta ? AuditDecision::RejectNull
                                                             : AuditDecision::FailToReject;
                } else {
                    outcome.decision = ci.hi <= criterion.eta ? AuditDecision::RejectNull
                                                              : AuditDecision::FailToReject;
                }
                outcome.disclosure.notes.push_back(
                    "decision by percentile-bootstrap interval exclusion at level zeta");
                break;
            }
        }
    } catch (const EstimationError& e) {
        return refuse(e.what(), recommend_n(est, criterion.eta, spec.zeta));
    }
    finish_statement(outcome);
    return RunResult{std::move(outcome), std::nullopt};
}

RunResult run_max_loss_audit(const Evidence& evidence, const AuditSpec& spec,
                             const MaxLossCriterion& criterion) {
    // The evidence must cover S; records outside S are ignored.
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t covered = 0;
    for (const auto& target : criterion.query_set) {
        for (const auto& rec : evidence.records) {
            if (rec.input == target) {
                double loss = 0.0;
                switch (criterion.loss) {
                    case LossKind::Zero: loss = 0.0; break;
                    case LossKind::OutputValue:
                        if (!rec.output.is_number()) {
                            return refuse("max_loss needs numeric outputs", 0);
                        }
                        loss = rec.output.number();
                        break;
                    case LossKind::AbsDiffFeature: {
                        auto it = rec.input.features.find(criterion.feature);
                        if (it == rec.input.features.end() ||
                            !std::holds_alternative<double>(it->second) ||
                            !rec.output.is_number()) {
                            return refuse("max_loss loss feature '" + criterion.feature +
                                              "' missing or non-numeric",
                                          0);
                        }
                        loss = std::abs(rec.output.number() - std::get<double>(it->second));
                        break;
                    }
                }
                worst = std::max(worst, loss);
                ++covered;
                break;
            }
        }
    }
    if (covered == 0) {
        return refuse("evidence covers none of the max-loss query set S (|S|=" +
                          std::to_string(criterion.query_set.size()) + ")",
                      criterion.query_set.size());
    }
    AuditOutcome outcome;
    outcome.disclosure = base_disclosure(evidence, spec);
    outcome.estimate.g_hat = worst - criterion.eta;
    const bool exhaustive = covered == criterion.query_set.size();
    outcome.estimate.lower_bound = !exhaustive;
    outcome.disclosure.one_sided = !exhaustive;

    const bool violated = outcome.estimate.g_hat > 0.0;
    if (spec.presumption == Presumption::Compliance) {
        // A violation on any covered subset already witnesses g > 0.
        outcome.decision = violated ? AuditDecision::RejectNull : AuditDecision::FailToReject;
        if (!exhaustive && !violated) {
            outcome.disclosure.notes.push_back(
                "S only partially covered (" + std::to_string(covered) + "/" +
                std::to_string(criterion.query_set.size()) +
                "); the max-loss estimate is a lower bound and cannot clear the model");
        }
    } else {
        // Rejecting "non-compliant" asserts g <= 0, which needs the full S.
        outcome.decision = (exhaustive && !violated) ? AuditDecision::RejectNull
                                                     : AuditDecision::FailToReject;
        if (!exhaustive) {
            outcome.disclosure.notes.push_back(
                "S only partially covered; compliance cannot be asserted from a lower bound");
        }
    }
    outcome.disclosure.notes.push_back(
        exhaustive ? "max loss computed exhaustively over S; deterministic comparison, "
                     "no p-value is defined"
                   : "max loss over a partial sweep of S");
    finish_statement(outcome);
    return RunResult{std::move(outcome), std::nullopt};
}

RunResult run_individual_fairness_audit(const Evidence& evidence, const AuditSpec& spec,
                                        const IndividualFairnessCriterion& criterion) {
    std::optional<CriterionEstimate> est;
    try {
        est = lipschitz_lower_bound(evidence, criterion);
    } catch (const EstimationError& e) {
        return refuse(e.what(), 2);
    }
    AuditOutcome outcome;
    outcome.estimate = *est;
    outcome.disclosure = base_disclosure(evidence, spec);
    outcome.disclosure.one_sided = true;
    outcome.disclosure.notes.push_back(
        "individual fairness over a continuous domain can only be refuted by finite "
        "queries, never certified; the estimate bounds g from below");
    const bool violated = est->zero_distance_violation || est->g_hat > 0.0;
    if (est->zero_distance_violation) {
        outcome.disclosure.notes.push_back(
            "witness pair with d(x, x') = 0 but different outputs: a direct violation "
            "of the Lipschitz condition");
    }
    if (spec.presumption == Presumption::Compliance) {
        outcome.decision = violated ? AuditDecision::RejectNull : AuditDecision::FailToReject;
    } else {
        outcome.decision = AuditDecision::FailToReject;
        outcome.disclosure.notes.push_back(
            "under the presumption of non-compliance this audit can never reject: "
            "finite evidence cannot establish g <= 0 for this criterion");
    }
    finish_statement(outcome);
    return RunResult{std::move(outcome), std::nullopt};
}

RunResult run_impact_audit(const Evidence& evidence, const AuditSpec& spec,
                           const ImpactMetricsCriterion& criterion) {
    // Evidence rows carry a single demographic axis: the model's group.
    const std::string axis =
        criterion.axes.empty() ? std::string("group") : criterion.axes.front();
    const auto rows = rows_from_evidence(evidence, axis);
    ImpactMetricsCriterion local = criterion;
    local.axes = {axis};
    std::vector<ImpactTable> tables;
    try {
        tables = impact_metrics(rows, local);
    } catch (const EstimationError& e) {
        return refuse(e.what(), static_cast<std::size_t>(kZTestMinPerGroup));
    }
    // Test the extreme selection-rate cells of the first axis.
    const ImpactTable& table = tables.front();
    const ImpactCell* best = nullptr;
    const ImpactCell* worst = nullptr;
    for (const auto& cell : table.cells) {
        if (!cell.selection_rate) continue;
        if (!best || *cell.selection_rate > *best->selection_rate) best = &cell;
        if (!worst || *cell.selection_rate < *worst->selection_rate) worst = &cell;
    }
    if (best == nullptr || best == worst) {
        return refuse("impact audit needs at least two categories with selection rates",
                      static_cast<std::size_t>(kZTestMinPerGroup));
    }
    StatisticalParityCriterion parity;
    parity.group1 = best->key;
    parity.group2 = worst->key;
    parity.eta = *criterion.eta;
    AuditSpec inner = spec;
    inner.criterion = parity;
    RunResult result = run_parity_audit(evidence, inner, parity);
    if (result.completed()) {
        // The reader audited impact metrics; the parity test is the engine.
        result.outcome->disclosure.criterion = criterion_name(spec.criterion);
        result.outcome->disclosure.notes.push_back(
            "impact test compares the highest-rate cell ('" + best->key +
            "') against the lowest-rate cell ('" + worst->key + "') at the declared gap "
            "threshold");
    }
    return result;
}

}  // namespace

RunResult run_audit(const Evidence& evidence, const AuditSpec& spec) {
    spec.validate();
    if (const auto* sp = std::get_if<StatisticalParityCriterion>(&spec.criterion)) {
        return run_parity_audit(evidence, spec, *sp);
    }
    if (const auto* ml = std::get_if<MaxLossCriterion>(&spec.criterion)) {
        return run_max_loss_audit(evidence, spec, *ml);
    }
    if (const auto* ifc = std::get_if<IndividualFairnessCriterion>(&spec.criterion)) {
        return run_individual_fairness_audit(evidence, spec, *ifc);
    }
    return run_impact_audit(evidence, spec, std::get<ImpactMetricsCriterion>(spec.criterion));
}

// --- Serialization ------------------------------------------------------------

namespace {

Json estimate_to_json(const CriterionEstimate& est) {
    Json j;
    j["g_hat"] = est.g_hat;
    j["lower_bound"] = est.lower_bound;
    if (est.std_error) j["std_error"] = *est.std_error;
    if (est.k1) {
        j["group1"] = {{"selected", *est.k1}, {"total", *est.n1}, {"rate", *est.rate1}};
        j["group2"] = {{"selected", *est.k2}, {"total", *est.n2}, {"rate", *est.rate2}};
    }
    if (est.witness) {
        j["witness"] = Json::array(
            {input_to_json(est.witness->first), input_to_json(est.witness->second)});
    }
    if (est.degenerate_pairs > 0) j["degenerate_pairs"] = est.degenerate_pairs;
    if (est.zero_distance_violation) j["zero_distance_violation"] = true;
    return j;
}

}  // namespace

Json outcome_to_json(const AuditOutcome& outcome) {
    Json j;
    j["schema_version"] = "1";
    j["kind"] = "audit-outcome";
    j["decision"] = decision_name(outcome.decision);
    j["p_value"] = outcome.p_value ? Json(*outcome.p_value) : Json(nullptr);
    j["estimate"] = estimate_to_json(outcome.estimate);
    if (outcome.confidence_interval) {
        j["confidence_interval"] =
            Json::array({outcome.confidence_interval->first, outcome.confidence_interval->second});
    } else {
        j["confidence_interval"] = nullptr;
    }
    const Disclosure& d = outcome.disclosure;
    Json dj;
    dj["criterion"] = d.criterion;
    dj["criterion_threshold"] = d.criterion_threshold;
    dj["presumption"] = presumption_name(d.presumption);
    dj["zeta"] = d.zeta;
    dj["method"] = test_method_name(d.method);
    dj["assumptions"] = {{"input_distribution", d.assumptions.input_distribution},
                         {"model_family", d.assumptions.model_family}};
    dj["n"] = d.n;
    dj["truncated"] = d.truncated;
    dj["one_sided"] = d.one_sided;
    dj["statement"] = d.statement;
    dj["notes"] = d.notes;
    dj["model_identity"] = d.model_identity;
    dj["evidence_distribution"] = d.evidence_distribution;
    j["disclosure"] = std::move(dj);
    return j;
}

std::string outcome_to_markdown(const AuditOutcome& outcome) {
    const Disclosure& d = outcome.disclosure;
    std::string md;
    md += "# Audit outcome\n\n";
    md += "- decision: **" + decision_name(outcome.decision) + "**\n";
    md += "- statement: " + d.statement + "\n";
    md += "- p-value: " +
          (outcome.p_value ? format_double(*outcome.p_value) : std::string("not defined")) + "\n";
    md += "- estimate g_hat: " + format_double(outcome.estimate.g_hat) +
          (outcome.estimate.lower_bound ? " (lower bound)" : "") + "\n";
    if (outcome.estimate.std_error) {
        md += "- standard error: " + format_double(*outcome.estimate.std_error) + "\n";
    }
    if (outcome.confidence_interval) {
        md += "- confidence interval: [" + format_double(outcome.confidence_interval->first) +
              ", " + format_double(outcome.confidence_interval->second) + "]\n";
    }
    if (outcome.estimate.k1) {
        md += "- group 1: " + std::to_string(*outcome.estimate.k1) + "/" +
              std::to_string(*outcome.estimate.n1) + " selected (rate " +
              format_double(*outcome.estimate.rate1) + ")\n";
        md += "- group 2: " + std::to_string(*outcome.estimate.k2) + "/" +
              std::to_string(*outcome.estimate.n2) + " selected (rate " +
              format_double(*outcome.estimate.rate2) + ")\n";
    }
    md += "\n## Disclosure\n\n";
    md += "- criterion: " + d.criterion + " (threshold " +
          format_double(d.criterion_threshold) + ")\n";
    md += "- presumption: " + presumption_name(d.presumption) + "\n";
    md += "- significance (zeta): " + format_double(d.zeta) + "\n";
    md += "- method: " + test_method_name(d.method) + "\n";
    md += "- N: " + std::to_string(d.n) + (d.truncated ? " (truncated)" : "") + "\n";
    md += "- one-sided: " + std::string(d.one_sided ? "yes" : "no") + "\n";
    md += "- model: " + d.model_identity + "\n";
    md += "- declared input distribution: " + d.assumptions.input_distribution + "\n";
    if (!d.assumptions.model_family.empty()) {
        md += "- assumed model family: " + d.assumptions.model_family + "\n";
    }
    if (!d.notes.empty()) {
        md += "\n### Notes\n\n";
        for (const auto& note : d.notes) md += "- " + note + "\n";
    }
    return md;
}

}  // namespace audit
