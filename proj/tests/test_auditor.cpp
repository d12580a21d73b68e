#include <doctest.h>

#include <cmath>

#include "audit/auditor.hpp"
#include "audit/power.hpp"
#include "audit/synthetic.hpp"

using namespace audit;

namespace {

Evidence parity_evidence(long k1, long n1, long k2, long n2) {
    Evidence evidence;
    evidence.provenance.model_identity = "fixture";
    evidence.provenance.distribution = "fixture";
    evidence.provenance.strategy_tag = "fixture";
    auto add = [&](const std::string& group, long selected, long total) {
        for (long i = 0; i < total; ++i) {
            QueryRecord rec;
            rec.index = evidence.records.size();
            rec.input.group = group;
            rec.output = ModelOutput::of(i < selected ? 1.0 : 0.0);
            rec.strategy_tag = "fixture";
            evidence.records.push_back(std::move(rec));
        }
    };
    add("G_1", k1, n1);
    add("G_2", k2, n2);
    return evidence;
}

AuditSpec parity_spec(TestMethod method, Presumption presumption) {
    AuditSpec spec;
    StatisticalParityCriterion parity;
    parity.eta = 0.1;
    spec.criterion = parity;
    spec.presumption = presumption;
    spec.zeta = 0.05;
    spec.method = method;
    return spec;
}

ModelInput x_input(double x) {
    ModelInput in;
    in.features["x"] = x;
    return in;
}

}  // namespace

TEST_CASE("presumption duality: identical weak evidence, opposite defaults") {
    // The fixed weak-evidence fixture: 20 per group, equal rates.
    const Evidence evidence = parity_evidence(5, 20, 5, 20);

    const auto compliance = run_audit(
        evidence, parity_spec(TestMethod::ExactBinomialBoundary, Presumption::Compliance));
    REQUIRE(compliance.completed());
    CHECK(compliance.outcome->decision == AuditDecision::FailToReject);
    CHECK(compliance.outcome->disclosure.statement ==
          "presumed compliant; evidence does not suffice to reject");

    const auto non_compliance = run_audit(
        evidence, parity_spec(TestMethod::ExactBinomialBoundary, Presumption::NonCompliance));
    REQUIRE(non_compliance.completed());
    CHECK(non_compliance.outcome->decision == AuditDecision::FailToReject);
    CHECK(non_compliance.outcome->disclosure.statement ==
          "presumed non-compliant; evidence does not suffice to reject");

    // Same evidence, same estimate, different defaults: the conclusion is a
    // pure function of the declared presumption.
    CHECK(compliance.outcome->estimate.g_hat == non_compliance.outcome->estimate.g_hat);
}

TEST_CASE("reports never claim confirmed compliance") {
    const Evidence evidence = parity_evidence(5, 20, 5, 20);
    for (auto presumption : {Presumption::Compliance, Presumption::NonCompliance}) {
        const auto result =
            run_audit(evidence, parity_spec(TestMethod::ExactBinomialBoundary, presumption));
        REQUIRE(result.completed());
        const std::string json = outcome_to_json(*result.outcome).dump();
        const std::string md = outcome_to_markdown(*result.outcome);
        CHECK(json.find("confirmed") == std::string::npos);
        CHECK(md.find("confirmed") == std::string::npos);
        CHECK(md.find("presumed") != std::string::npos);
    }
}

TEST_CASE("strong evidence rejects under presumption of compliance") {
    const auto spec = parity_spec(TestMethod::BoundaryZ, Presumption::Compliance);
    const auto model = make_synthetic(make_group_threshold_spec(0.8, 0.5, 0.1));
    StratifiedStrategy strategy;
    strategy.dist.group = CategoricalDist{{"G_1", "G_2"}, {}};
    strategy.quotas = {{"G_1", 1000}, {"G_2", 1000}};

    int rejections = 0;
    const int trials = 500;
    for (int t = 0; t < trials; ++t) {
        QueryBudget budget(2000);
        const auto evidence =
            collect(*model, strategy, 2000, budget, derive_seed(523, t), 1);
        const auto result = run_audit(evidence, spec);
        REQUIRE(result.completed());
        rejections += result.outcome->decision == AuditDecision::RejectNull;
        if (t == 0) {
            REQUIRE(result.outcome->p_value.has_value());
            CHECK(result.outcome->confidence_interval.has_value());
        }
    }
    // Analytic cross-check: power at gap 0.3, n=1000 is indistinguishable
    // from 1, so near-certain rejection is what the theory predicts.
    CHECK(analytic_two_proportion_power(0.1, 0.3, 0.05, 1000) >= 0.999);
    CHECK(rejections >= trials * 99 / 100);
}

TEST_CASE("insufficient evidence withholds the outcome with advice") {
    // 20 per group is below the z-test guard.
    const Evidence evidence = parity_evidence(9, 20, 2, 20);
    const auto result = run_audit(evidence, parity_spec(TestMethod::BoundaryZ,
                                                        Presumption::Compliance));
    CHECK_FALSE(result.completed());
    REQUIRE(result.refusal.has_value());
    CHECK(result.refusal->recommended_n_per_group >= 30);

    // A missing group also withholds, naming the group.
    Evidence one_group = parity_evidence(5, 20, 0, 0);
    const auto missing = run_audit(one_group, parity_spec(TestMethod::ExactBinomialBoundary,
                                                          Presumption::Compliance));
    CHECK_FALSE(missing.completed());
    CHECK(missing.refusal->reason.find("G_2") != std::string::npos);
}

TEST_CASE("decision matches the p-value against zeta whenever p is defined") {
    Rng rng(8080);
    for (int t = 0; t < 100; ++t) {
        const long n = 40 + static_cast<long>(rng.next_below(60));
        const Evidence evidence =
            parity_evidence(static_cast<long>(rng.next_below(n + 1)), n,
                            static_cast<long>(rng.next_below(n + 1)), n);
        const auto result = run_audit(
            evidence, parity_spec(TestMethod::ExactBinomialBoundary, Presumption::Compliance));
        REQUIRE(result.completed());
        REQUIRE(result.outcome->p_value.has_value());
        CHECK((result.outcome->decision == AuditDecision::RejectNull) ==
              (*result.outcome->p_value <= 0.05));
    }
}

TEST_CASE("max loss audit short-circuits to a deterministic comparison") {
    const auto model = make_synthetic(make_loss_plant_spec(0.25, 0.9, 0.1, 0.5));
    MaxLossCriterion criterion;
    criterion.loss = LossKind::OutputValue;
    criterion.eta = 0.5;
    for (int i = 0; i <= 4; ++i) criterion.query_set.push_back(x_input(i * 0.25));

    Evidence evidence;
    evidence.provenance.model_identity = model->identity();
    for (std::size_t i = 0; i < criterion.query_set.size(); ++i) {
        QueryRecord rec;
        rec.index = i;
        rec.input = criterion.query_set[i];
        rec.output = model->query(rec.input, 0);
        evidence.records.push_back(rec);
    }

    AuditSpec spec;
    spec.criterion = criterion;
    spec.presumption = Presumption::Compliance;
    spec.zeta = 0.05;
    spec.method = TestMethod::ExactBinomialBoundary;  // ignored by this path
    const auto result = run_audit(evidence, spec);
    REQUIRE(result.completed());
    CHECK(result.outcome->decision == AuditDecision::RejectNull);  // 0.9 > 0.5
    CHECK_FALSE(result.outcome->p_value.has_value());
    CHECK_FALSE(result.outcome->estimate.lower_bound);
    CHECK(result.outcome->estimate.g_hat == doctest::Approx(0.4));

    // Under the opposite presumption the exhaustive sweep can reject J0 only
    // when the loss clears the bar, which it does not here.
    spec.presumption = Presumption::NonCompliance;
    const auto dual = run_audit(evidence, spec);
    REQUIRE(dual.completed());
    CHECK(dual.outcome->decision == AuditDecision::FailToReject);
}

TEST_CASE("partial max loss coverage is one-sided") {
    const auto model = make_synthetic(make_loss_plant_spec(0.25, 0.9, 0.1, 0.5));
    MaxLossCriterion criterion;
    criterion.loss = LossKind::OutputValue;
    criterion.eta = 0.5;
    criterion.query_set = {x_input(0.25), x_input(0.5), x_input(0.75)};

    // Evidence covers only the benign part of S.
    Evidence evidence;
    QueryRecord rec;
    rec.index = 0;
    rec.input = x_input(0.5);
    rec.output = model->query(rec.input, 0);
    evidence.records.push_back(rec);

    AuditSpec spec;
    spec.criterion = criterion;
    spec.presumption = Presumption::Compliance;
    const auto result = run_audit(evidence, spec);
    REQUIRE(result.completed());
    CHECK(result.outcome->decision == AuditDecision::FailToReject);
    CHECK(result.outcome->estimate.lower_bound);
    CHECK(result.outcome->disclosure.one_sided);

    spec.presumption = Presumption::NonCompliance;
    const auto dual = run_audit(evidence, spec);
    // A lower bound can never certify compliance.
    CHECK(dual.outcome->decision == AuditDecision::FailToReject);
}

TEST_CASE("individual fairness audit rejects only via a witness") {
    const auto violating =
        make_synthetic(make_score_function_spec(ScoreFunctionSpec::linear(2.0), 1.0));
    Evidence evidence;
    for (int i = 0; i < 6; ++i) {
        QueryRecord rec;
        rec.index = i;
        rec.input = x_input(0.1 + 0.15 * i);
        rec.output = violating->query(rec.input, 0);
        evidence.records.push_back(rec);
    }
    AuditSpec spec;
    IndividualFairnessCriterion criterion;
    criterion.lipschitz = 1.0;
    spec.criterion = criterion;
    spec.presumption = Presumption::Compliance;

    const auto result = run_audit(evidence, spec);
    REQUIRE(result.completed());
    CHECK(result.outcome->decision == AuditDecision::RejectNull);
    CHECK_FALSE(result.outcome->p_value.has_value());
    CHECK(result.outcome->disclosure.one_sided);
    CHECK(result.outcome->estimate.witness.has_value());

    // The same evidence under presumption of non-compliance can never reject:
    // finite queries cannot certify a supremum over a continuum.
    spec.presumption = Presumption::NonCompliance;
    const auto dual = run_audit(evidence, spec);
    REQUIRE(dual.completed());
    CHECK(dual.outcome->decision == AuditDecision::FailToReject);

    // A generously compliant bound fails to reject under compliance.
    IndividualFairnessCriterion loose;
    loose.lipschitz = 5.0;
    spec.criterion = loose;
    spec.presumption = Presumption::Compliance;
    const auto ok = run_audit(evidence, spec);
    CHECK(ok.outcome->decision == AuditDecision::FailToReject);
}

TEST_CASE("bootstrap-CI method decides by interval exclusion") {
    AuditSpec spec = parity_spec(TestMethod::BootstrapCI, Presumption::Compliance);
    spec.seed = 1234;

    const auto clear_gap = run_audit(parity_evidence(90, 100, 20, 100), spec);
    REQUIRE(clear_gap.completed());
    CHECK(clear_gap.outcome->decision == AuditDecision::RejectNull);
    REQUIRE(clear_gap.outcome->confidence_interval.has_value());
    CHECK(clear_gap.outcome->confidence_interval->first > 0.1);
    CHECK_FALSE(clear_gap.outcome->p_value.has_value());

    const auto no_gap = run_audit(parity_evidence(50, 100, 50, 100), spec);
    CHECK(no_gap.outcome->decision == AuditDecision::FailToReject);
}

TEST_CASE("spec validation names the failing field") {
    AuditSpec spec = parity_spec(TestMethod::BoundaryZ, Presumption::Compliance);
    spec.zeta = 1.5;
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("zeta"), ConfigError);

    AuditSpec tost = parity_spec(TestMethod::TOSTEquivalence, Presumption::Compliance);
    CHECK_THROWS_AS(tost.validate(), ConfigError);
    tost.presumption = Presumption::NonCompliance;
    CHECK_NOTHROW(tost.validate());

    AuditSpec impact;
    ImpactMetricsCriterion im;
    im.axes = {"group"};
    impact.criterion = im;  // eta left unset on purpose
    CHECK_THROWS_WITH_AS(impact.validate(), doctest::Contains("threshold"), ConfigError);
}

TEST_CASE("impact-metrics audits test the extreme cells") {
    const auto model = make_synthetic(make_group_threshold_spec(0.8, 0.4, 0.1));
    StratifiedStrategy strategy;
    strategy.dist.group = CategoricalDist{{"G_1", "G_2"}, {}};
    strategy.quotas = {{"G_1", 200}, {"G_2", 200}};
    QueryBudget budget(400);
    const auto evidence = collect(*model, strategy, 400, budget, 99, 1);

    AuditSpec spec;
    ImpactMetricsCriterion criterion;
    criterion.axes = {"group"};
    criterion.eta = 0.1;
    spec.criterion = criterion;
    spec.presumption = Presumption::Compliance;
    spec.method = TestMethod::ExactBinomialBoundary;
    const auto result = run_audit(evidence, spec);
    REQUIRE(result.completed());
    CHECK(result.outcome->decision == AuditDecision::RejectNull);
    bool mentions_cells = false;
    for (const auto& note : result.outcome->disclosure.notes) {
        mentions_cells = mentions_cells || note.find("highest-rate") != std::string::npos;
    }
    CHECK(mentions_cells);
}

TEST_CASE("disclosure carries truncation and provenance") {
    const auto model = make_synthetic(make_group_threshold_spec(0.5, 0.5, 0.1));
    IidStrategy strategy;
    strategy.dist.group = CategoricalDist{{"G_1", "G_2"}, {}};
    QueryBudget budget(60);
    const auto evidence = collect(*model, strategy, 100, budget, 5, 1);
    REQUIRE(evidence.provenance.truncated);

    const auto result = run_audit(
        evidence, parity_spec(TestMethod::ExactBinomialBoundary, Presumption::Compliance));
    REQUIRE(result.completed());
    CHECK(result.outcome->disclosure.truncated);
    CHECK(result.outcome->disclosure.n == 60);
    CHECK(result.outcome->disclosure.model_identity == model->identity());
    bool mentions_truncation = false;
    for (const auto& note : result.outcome->disclosure.notes) {
        mentions_truncation = mentions_truncation || note.find("truncated") != std::string::npos;
    }
    CHECK(mentions_truncation);

    const Json j = outcome_to_json(*result.outcome);
    CHECK(j.at("disclosure").at("truncated").get<bool>());
    CHECK_FALSE(j.at("disclosure").at("statement").get<std::string>().empty());
    CHECK(j.at("schema_version").get<std::string>() == "1");
}
