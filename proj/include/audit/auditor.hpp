#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "audit/criteria.hpp"
#include "audit/evidence.hpp"
#include "audit/hypothesis.hpp"
#include "audit/json_io.hpp"

namespace audit {

enum class TestMethod { BoundaryZ, ExactBinomialBoundary, TOSTEquivalence, BootstrapCI };

std::string test_method_name(TestMethod m);
TestMethod test_method_from_name(const std::string& name);

// The model (D, F-bar) under which the audit's error rates are defined.
struct ModelAssumptions {
    std::string input_distribution;  // declared D
    std::string model_family;        // free-text family descriptor plus tags
};

struct AuditSpec {
    ComplianceCriterion criterion;
    Presumption presumption = Presumption::Compliance;
    double zeta = 0.05;
    TestMethod method = TestMethod::ExactBinomialBoundary;
    ModelAssumptions assumptions;
    std::size_t bootstrap_resamples = 2000;  // BootstrapCI only
    std::uint64_t seed = 0;                  // consumed only by resampling methods

    // Checks zeta, thresholds, and the method/criterion/presumption
    // compatibility table (documented in the README).
    void validate() const;
};

enum class AuditDecision { RejectNull, FailToReject };

std::string decision_name(AuditDecision d);

// Everything a reader needs to interpret the decision. Mandatory in every
// serialized outcome.
struct Disclosure {
    std::string criterion;  // which g was audited
    double criterion_threshold = 0.0;
    Presumption presumption = Presumption::Compliance;
    double zeta = 0.05;
    TestMethod method = TestMethod::ExactBinomialBoundary;
    ModelAssumptions assumptions;
    std::size_t n = 0;
    bool truncated = false;
    bool one_sided = false;
    std::string statement;  // e.g. "presumed compliant; evidence does not suffice to reject"
    std::vector<std::string> notes;
    std::string model_identity;
    std::string evidence_distribution;
};

struct AuditOutcome {
    AuditDecision decision = AuditDecision::FailToReject;
    std::optional<double> p_value;  // absent for deterministic / witness / CI decisions
    CriterionEstimate estimate;
    std::optional<std::pair<double, double>> confidence_interval;
    Disclosure disclosure;
};

struct SampleSizeAdvice {
    std::string reason;
    std::size_t recommended_n_per_group = 0;
};

// An audit either completes with an outcome or is withheld with advice; a
// withheld audit is not a decision.
struct RunResult {
    std::optional<AuditOutcome> outcome;
    std::optional<SampleSizeAdvice> refusal;

    bool completed() const { return outcome.has_value(); }
};

// Maps evidence to a decision under the declared presumption. Dispatch:
//  - statistical parity / impact metrics: the configured test method;
//  - max loss over an exhaustively covered S: deterministic comparison
//    (no sampling distribution is involved, so no p-value is reported);
//  - individual fairness: one-sided witness test; rejects compliance when a
//    logged quotient exceeds L, never confirms it.
RunResult run_audit(const Evidence& evidence, const AuditSpec& spec);

// Versioned JSON document; the disclosure block is always present.
Json outcome_to_json(const AuditOutcome& outcome);
// Human-readable report.
std::string outcome_to_markdown(const AuditOutcome& outcome);

}  // namespace audit
