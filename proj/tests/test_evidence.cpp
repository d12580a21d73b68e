#include <doctest.h>

#include <cmath>
#include <sstream>

#include "audit/evidence.hpp"
#include "audit/synthetic.hpp"

using namespace audit;

namespace {

DistributionSpec group_only_dist() {
    DistributionSpec dist;
    dist.group = CategoricalDist{{"G_1", "G_2"}, {}};
    return dist;
}

}  // namespace

TEST_CASE("stratified draws meet quotas exactly") {
    StratifiedStrategy strategy;
    strategy.dist = group_only_dist();
    strategy.quotas = {{"G_1", 10}, {"G_2", 10}};
    const auto inputs = draw_inputs(strategy, 20, 1);
    REQUIRE(inputs.size() == 20);
    long g1 = 0, g2 = 0;
    for (const auto& in : inputs) {
        g1 += *in.group == "G_1";
        g2 += *in.group == "G_2";
    }
    CHECK(g1 == 10);
    CHECK(g2 == 10);

    // Uneven quotas are met exactly too.
    strategy.quotas = {{"G_1", 3}, {"G_2", 17}};
    const auto uneven = draw_inputs(strategy, 20, 1);
    g1 = g2 = 0;
    for (const auto& in : uneven) {
        g1 += *in.group == "G_1";
        g2 += *in.group == "G_2";
    }
    CHECK(g1 == 3);
    CHECK(g2 == 17);
}

TEST_CASE("infeasible quota is rejected naming the group") {
    StratifiedStrategy strategy;
    strategy.dist = group_only_dist();
    strategy.quotas = {{"G_1", 10}, {"G_5", 10}};
    CHECK_THROWS_WITH_AS(draw_inputs(strategy, 20, 1), doctest::Contains("G_5"), ConfigError);

    StratifiedStrategy bad_total = strategy;
    bad_total.quotas = {{"G_1", 5}, {"G_2", 5}};
    CHECK_THROWS_AS(draw_inputs(bad_total, 20, 1), ConfigError);
}

TEST_CASE("iid over a point mass yields identical inputs") {
    IidStrategy strategy;
    strategy.dist.features["x"] = PointDist{0.4};
    const auto inputs = draw_inputs(strategy, 7, 3);
    REQUIRE(inputs.size() == 7);
    for (const auto& in : inputs) CHECK(in == inputs.front());
}

TEST_CASE("iid uniform over a binary feature hits its frequency") {
    IidStrategy strategy;
    strategy.dist.features["flag"] = CategoricalDist{{"0", "1"}, {}};
    const std::size_t n = 10000;
    const auto inputs = draw_inputs(strategy, n, 77);
    long ones = 0;
    for (const auto& in : inputs) ones += std::get<std::string>(in.features.at("flag")) == "1";
    // Binomial oracle: 3 standard errors around 1/2.
    const double se = std::sqrt(0.25 / static_cast<double>(n));
    CHECK(std::abs(ones / static_cast<double>(n) - 0.5) <= 3.0 * se);
}

TEST_CASE("collect with n=0 yields empty evidence without truncation") {
    const auto model = make_synthetic(make_group_threshold_spec(0.5, 0.5, 0.1));
    QueryBudget budget(10);
    const auto evidence =
        collect(*model, IidStrategy{group_only_dist()}, 0, budget, 7);
    CHECK(evidence.n() == 0);
    CHECK_FALSE(evidence.provenance.truncated);
    CHECK(budget.spent() == 0);
}

TEST_CASE("budget exhaustion truncates with an explicit marker") {
    const auto model = make_synthetic(make_group_threshold_spec(0.5, 0.5, 0.1));
    QueryBudget budget(5);
    const auto evidence =
        collect(*model, IidStrategy{group_only_dist()}, 10, budget, 7);
    CHECK(evidence.n() == 5);
    CHECK(evidence.provenance.truncated);
    REQUIRE_FALSE(evidence.provenance.exclusions.empty());
    CHECK(evidence.provenance.exclusions.front().find("truncated") != std::string::npos);
    CHECK(budget.spent() == 5);
    CHECK_THROWS_AS(budget.charge(1), BudgetError);
}

TEST_CASE("collect is byte-identical across worker counts") {
    const auto model = make_synthetic(make_group_threshold_spec(0.7, 0.3, 0.1));
    StratifiedStrategy strategy;
    strategy.dist = group_only_dist();
    strategy.quotas = {{"G_1", 50}, {"G_2", 50}};
    std::string dumps[3];
    int idx = 0;
    for (int workers : {1, 2, 4}) {
        QueryBudget budget(100);
        const auto evidence = collect(*model, strategy, 100, budget, 99, workers);
        std::ostringstream out;
        save_evidence(evidence, out);
        dumps[idx++] = out.str();
    }
    CHECK(dumps[0] == dumps[1]);
    CHECK(dumps[0] == dumps[2]);
}

TEST_CASE("records carry contiguous indices and the provenance strategy tag") {
    const auto model = make_synthetic(make_group_threshold_spec(0.7, 0.3, 0.1));
    QueryBudget budget(30);
    const auto evidence = collect(*model, IidStrategy{group_only_dist()}, 30, budget, 5);
    for (std::size_t i = 0; i < evidence.n(); ++i) {
        CHECK(evidence.records[i].index == i);
        CHECK(evidence.records[i].strategy_tag == evidence.provenance.strategy_tag);
        CHECK(evidence.records[i].replayable);
    }
    CHECK(evidence.provenance.strategy_tag == "iid");
    CHECK(evidence.provenance.model_identity == model->identity());
}

TEST_CASE("evidence serialization round-trips") {
    const auto model = make_synthetic(make_group_threshold_spec(0.7, 0.3, 0.1));
    StratifiedStrategy strategy;
    strategy.dist = group_only_dist();
    strategy.quotas = {{"G_1", 7}, {"G_2", 4}};
    QueryBudget budget(11);
    const auto evidence = collect(*model, strategy, 11, budget, 31);

    std::stringstream buffer;
    save_evidence(evidence, buffer);
    const auto loaded = load_evidence(buffer);
    REQUIRE(loaded.n() == evidence.n());
    CHECK(loaded.provenance.audit_seed == evidence.provenance.audit_seed);
    CHECK(loaded.provenance.distribution == evidence.provenance.distribution);
    CHECK(loaded.provenance.truncated == evidence.provenance.truncated);
    for (std::size_t i = 0; i < loaded.n(); ++i) {
        CHECK(loaded.records[i].input == evidence.records[i].input);
        CHECK(loaded.records[i].output == evidence.records[i].output);
        CHECK(loaded.records[i].seed == evidence.records[i].seed);
    }
    // Round-trip again: serialization is a fixed point.
    std::stringstream again;
    save_evidence(loaded, again);
    std::stringstream first;
    save_evidence(evidence, first);
    CHECK(again.str() == first.str());
}

TEST_CASE("adaptive cold start proposes pure restart pairs") {
    AdaptivePairSearch strategy;
    strategy.dist.features["x"] = UniformDist{0.0, 1.0};
    strategy.radius = 0.05;
    const auto batch = adaptive_next(Evidence{}, strategy, 6, 9);
    REQUIRE(batch.size() == 12);
    for (std::size_t i = 0; i + 1 < batch.size(); i += 2) {
        const auto d = input_distance(batch[i], batch[i + 1]);
        REQUIRE(d.has_value());
        CHECK(*d >= strategy.min_separation);
        CHECK(*d <= strategy.radius + 1e-12);
    }
}

TEST_CASE("adaptive batches concentrate on the best pair") {
    AdaptivePairSearch strategy;
    strategy.dist.features["x"] = UniformDist{0.0, 1.0};
    strategy.radius = 0.05;

    // Hand-built evidence: one pair with quotient 1.8, others at 1.0.
    Evidence evidence;
    auto push_pair = [&](double x1, double y1, double x2, double y2) {
        QueryRecord a, b;
        a.index = evidence.records.size();
        a.input.features["x"] = x1;
        a.output = ModelOutput::of(y1);
        evidence.records.push_back(a);
        b.index = evidence.records.size();
        b.input.features["x"] = x2;
        b.output = ModelOutput::of(y2);
        evidence.records.push_back(b);
    };
    push_pair(0.10, 0.0, 0.20, 0.10);   // quotient 1.0
    push_pair(0.60, 0.5, 0.70, 0.68);   // quotient 1.8  <- best
    push_pair(0.85, 0.2, 0.95, 0.30);   // quotient 1.0

    const auto best = best_pair_quotient(evidence);
    REQUIRE(best.has_value());
    CHECK(best->quotient == doctest::Approx(1.8));
    CHECK(best->first_index == 2);

    const std::size_t pairs = 8;
    const auto batch = adaptive_next(evidence, strategy, pairs, 17);
    REQUIRE(batch.size() == pairs * 2);
    std::size_t near_best = 0;
    for (std::size_t p = 0; p < pairs; ++p) {
        const double a = std::get<double>(batch[2 * p].features.at("x"));
        const double b = std::get<double>(batch[2 * p + 1].features.at("x"));
        const bool near = std::abs(a - 0.60) <= strategy.radius + 1e-12 &&
                          std::abs(b - 0.70) <= strategy.radius + 1e-12;
        near_best += near;
    }
    // Stated policy: at least half of the proposals stay within the radius.
    CHECK(near_best >= pairs / 2);
}

TEST_CASE("adaptive search finds the lipschitz violation on f(x)=2x") {
    const auto model = make_synthetic(make_score_function_spec(ScoreFunctionSpec::linear(2.0), 1.0));
    AdaptivePairSearch strategy;
    strategy.dist = DistributionSpec::uniform_over(model->input_schema());
    QueryBudget budget(200);
    const auto evidence = collect(*model, SamplingStrategy{strategy}, 200, budget, 4, 1);
    CHECK(evidence.n() == 200);
    const auto best = best_pair_quotient(evidence);
    REQUIRE(best.has_value());
    CHECK(best->quotient >= 1.9);

    // Dense grid sweep oracle: the logged ratio never beats the sweep.
    const int grid = 2000;
    std::vector<double> values(grid + 1);
    for (int i = 0; i <= grid; ++i) {
        ModelInput in;
        in.features["x"] = i / static_cast<double>(grid);
        values[i] = model->query(in, 0).number();
    }
    double oracle = 0.0;
    for (int i = 0; i <= grid; ++i) {
        for (int j = i + 1; j <= grid; ++j) {
            oracle = std::max(oracle, std::abs(values[j] - values[i]) /
                                          ((j - i) / static_cast<double>(grid)));
        }
    }
    CHECK(best->quotient <= oracle + 1e-12);
}

TEST_CASE("adaptive search matches or beats budget-matched random pair sampling") {
    // Steep local segment the random baseline rarely resolves.
    ScoreFunctionSpec fn;
    fn.knot_x = {0.0, 0.45, 0.5, 1.0};
    fn.knot_y = {0.0, 0.1, 0.5, 0.6};  // slopes 0.222, 8, 0.2
    const auto model = make_synthetic(make_score_function_spec(fn, 1.0));
    AdaptivePairSearch strategy;
    strategy.dist = DistributionSpec::uniform_over(model->input_schema());
    strategy.radius = 0.05;
    strategy.restarts = 8;

    int adaptive_wins = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        QueryBudget adaptive_budget(200), random_budget(200);
        const auto adaptive_evidence = collect(*model, SamplingStrategy{strategy}, 200,
                                               adaptive_budget, derive_seed(1001, t), 1);
        const auto best = best_pair_quotient(adaptive_evidence);

        const auto random_evidence =
            collect(*model, SamplingStrategy{IidStrategy{strategy.dist}}, 200, random_budget,
                    derive_seed(1001, t), 1);
        double random_best = 0.0;
        for (std::size_t i = 0; i + 1 < random_evidence.records.size(); i += 2) {
            const auto d = input_distance(random_evidence.records[i].input,
                                          random_evidence.records[i + 1].input);
            if (d && *d > 0.0) {
                random_best = std::max(
                    random_best, output_distance(random_evidence.records[i].output,
                                                 random_evidence.records[i + 1].output) /
                                     *d);
            }
        }
        if (best && best->quotient >= random_best) ++adaptive_wins;
    }
    // Paired Monte Carlo comparison at matched budgets.
    CHECK(adaptive_wins >= 90);
}

TEST_CASE("distribution must cover the model schema") {
    const auto model = make_synthetic(make_group_threshold_spec(0.5, 0.5, 0.1));
    DistributionSpec empty;
    QueryBudget budget(10);
    CHECK_THROWS_AS(collect(*model, IidStrategy{empty}, 5, budget, 1), ConfigError);
}

TEST_CASE("evidence loading rejects corrupted streams") {
    std::istringstream not_evidence("{\"kind\":\"something-else\"}\n");
    CHECK_THROWS_AS(load_evidence(not_evidence), ConfigError);

    std::istringstream empty("");
    CHECK_THROWS_AS(load_evidence(empty), ConfigError);

    // A record with a gap in the indices breaks the append-only contract.
    const auto model = make_synthetic(make_group_threshold_spec(0.5, 0.5, 0.1));
    QueryBudget budget(3);
    const auto evidence = collect(*model, IidStrategy{group_only_dist()}, 3, budget, 1);
    std::stringstream buffer;
    save_evidence(evidence, buffer);
    std::string text = buffer.str();
    const auto pos = text.find("\"index\":1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 9, "\"index\":7");
    std::istringstream tampered(text);
    CHECK_THROWS_WITH_AS(load_evidence(tampered), doctest::Contains("contiguous"),
                         ConfigError);

    // A header that over-declares N is caught too.
    std::string short_body = buffer.str();
    short_body = short_body.substr(0, short_body.rfind("{\"index\":2"));
    std::istringstream truncated(short_body);
    CHECK_THROWS_WITH_AS(load_evidence(truncated), doctest::Contains("records follow"),
                         ConfigError);
}
