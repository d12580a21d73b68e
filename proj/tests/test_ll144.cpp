#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "audit/ll144.hpp"
#include "audit/synthetic.hpp"

using namespace audit;
using namespace audit::ll144;

namespace {

const std::string kFixtureDir = FIXTURE_DIR;

Ll144Config fixture_config() {
    Ll144Config config;
    config.impact_gap_threshold = 0.2;
    config.presumption = Presumption::Compliance;
    config.zeta = 0.05;
    config.method = TestMethod::ExactBinomialBoundary;
    config.per_cell_minimum = 4;
    config.bootstrap_resamples = 2000;
    config.seed = 7;
    config.audit_date = "2024-05-01";
    config.multiplicity = "bonferroni";
    return config;
}

}  // namespace

TEST_CASE("ingest accepts an empty file with a valid header") {
    std::istringstream in(
        "applicant_id,job_category,race_ethnicity,sex,demographics_source,selected,score\n");
    const auto [records, report] = ingest(in);
    CHECK(records.empty());
    CHECK(report.data_rows == 0);
    CHECK(report.quarantined.empty());
}

TEST_CASE("ingest refuses a wrong header naming the expectation") {
    std::istringstream in("id,category\nfoo,bar\n");
    CHECK_THROWS_WITH_AS(ingest(in), doctest::Contains("applicant_id"), ConfigError);
}

TEST_CASE("out-of-range scores are quarantined with the row number") {
    std::istringstream in(
        "applicant_id,job_category,race_ethnicity,sex,demographics_source,selected,score\n"
        "a1,eng,White,Male,self-reported,1,1.2\n");
    const auto [records, report] = ingest(in);
    CHECK(records.empty());
    REQUIRE(report.quarantined.size() == 1);
    CHECK(report.quarantined[0].row_number == 2);
    CHECK(report.quarantined[0].reason == "score out of range");
}

TEST_CASE("the 20-row ingest fixture quarantines exactly the hand-labeled set") {
    const auto [records, report] = ingest_file(kFixtureDir + "/ll144_ingest_fixture.csv");
    CHECK(report.data_rows == 20);
    CHECK(records.size() == 12);
    REQUIRE(report.quarantined.size() == 8);

    const std::vector<std::pair<std::size_t, std::string>> expected{
        {6, "score out of range"},
        {7, "selected not in {0,1,empty}"},
        {8, "invalid demographics_source"},
        {9, "no outcome (selected and score both empty)"},
        {10, "missing applicant_id"},
        {11, "missing job_category"},
        {12, "malformed score"},
        {13, "wrong field count"},
    };
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(report.quarantined[i].row_number == expected[i].first);
        CHECK(report.quarantined[i].reason == expected[i].second);
    }
    for (const auto& [reason, count] : report.reason_counts) CHECK(count == 1);
}

TEST_CASE("fully self-reported data has zero exclusions") {
    std::vector<HistoricalRecord> records(5);
    for (std::size_t i = 0; i < records.size(); ++i) {
        records[i].applicant_id = "r" + std::to_string(i);
        records[i].job_category = "eng";
        records[i].race_ethnicity = "White";
        records[i].sex = "Female";
        records[i].selected = true;
        records[i].demographics_source = DemographicsSource::SelfReported;
    }
    const auto [usable, ledger] = apply_exclusions(records);
    CHECK(usable.size() == 5);
    CHECK(ledger.entries.empty());
}

TEST_CASE("one imputed row among ten is excluded by name") {
    std::vector<HistoricalRecord> records(10);
    for (std::size_t i = 0; i < records.size(); ++i) {
        records[i].applicant_id = "r" + std::to_string(i);
        records[i].job_category = "eng";
        records[i].race_ethnicity = "White";
        records[i].sex = "Female";
        records[i].selected = true;
        records[i].demographics_source =
            i == 3 ? DemographicsSource::Imputed : DemographicsSource::SelfReported;
    }
    const auto [usable, ledger] = apply_exclusions(records);
    CHECK(usable.size() == 9);
    REQUIRE(ledger.entries.size() == 1);
    CHECK(ledger.entries[0].applicant_id == "r3");
    CHECK(ledger.entries[0].reason == "demographics_source=imputed");
}

TEST_CASE("the mixed fixture excludes exactly the hand-computed set") {
    const auto [records, report] = ingest_file(kFixtureDir + "/ll144_ingest_fixture.csv");
    const auto [usable, ledger] = apply_exclusions(records);
    CHECK(usable.size() == 7);
    REQUIRE(ledger.entries.size() == 5);
    CHECK(ledger.entries[0].applicant_id == "a13");
    CHECK(ledger.entries[0].reason == "demographics_source=imputed");
    CHECK(ledger.entries[1].applicant_id == "a14");
    CHECK(ledger.entries[1].reason == "race_ethnicity=UNKNOWN");
    CHECK(ledger.entries[2].applicant_id == "a15");
    CHECK(ledger.entries[2].reason == "sex=UNKNOWN");
    CHECK(ledger.entries[3].applicant_id == "a16");
    CHECK(ledger.entries[3].reason == "demographics_source=inferred");
    CHECK(ledger.entries[4].applicant_id == "a17");
    CHECK(ledger.entries[4].reason == "demographics_source=unknown");
}

TEST_CASE("test data is refused while historical data is sufficient") {
    auto config = fixture_config();
    config.per_cell_minimum = 1;
    config.race_categories = {"White"};
    config.sex_categories = {"Male"};
    std::vector<HistoricalRecord> usable(3);
    for (auto& rec : usable) {
        rec.race_ethnicity = "White";
        rec.sex = "Male";
        rec.selected = true;
        rec.demographics_source = DemographicsSource::SelfReported;
    }
    const auto model = make_synthetic(make_group_threshold_spec(0.8, 0.5, 0.1));
    CHECK_THROWS_WITH_AS(generate_test_data(*model, config, usable, 100, 1),
                         doctest::Contains("sufficient"), ConfigError);
}

TEST_CASE("test data stratifies evenly over the declared cells") {
    auto config = fixture_config();
    config.race_categories = {"G_1", "G_2"};
    config.sex_categories = {"Female", "Male"};
    config.per_cell_minimum = 30;
    const auto model = make_synthetic(make_group_threshold_spec(0.8, 0.5, 0.1));
    const auto result = generate_test_data(*model, config, {}, 100, 3);
    CHECK(result.rows.size() == 100);
    CHECK(result.evidence.n() == 100);
    std::map<std::string, int> cell_counts;
    for (const auto& row : result.rows) {
        cell_counts[row.categories.at("race_ethnicity") + "|" + row.categories.at("sex")]++;
    }
    REQUIRE(cell_counts.size() == 4);
    for (const auto& [cell, count] : cell_counts) CHECK(count == 25);
    CHECK_FALSE(result.disclosure.trigger.empty());
    CHECK(result.disclosure.n == 100);
    CHECK(result.disclosure.seed == 3);
}

TEST_CASE("generated test data reproduces the model's selection rates") {
    auto config = fixture_config();
    config.race_categories = {"G_1", "G_2"};
    config.sex_categories = {"Female", "Male"};
    const auto model = make_synthetic(make_group_threshold_spec(0.8, 0.5, 0.1));
    const auto result = generate_test_data(*model, config, {}, 2000, 5);

    long k1 = 0, n1 = 0, k2 = 0, n2 = 0;
    for (const auto& row : result.rows) {
        REQUIRE(row.selected.has_value());
        if (row.categories.at("race_ethnicity") == "G_1") {
            ++n1;
            k1 += *row.selected;
        } else {
            ++n2;
            k2 += *row.selected;
        }
    }
    const double r1 = static_cast<double>(k1) / n1;
    const double r2 = static_cast<double>(k2) / n2;
    // Binomial oracle: three standard errors at 1000 draws per race value.
    CHECK(std::abs(r1 - 0.8) <= 3.0 * std::sqrt(0.8 * 0.2 / n1));
    CHECK(std::abs(r2 - 0.5) <= 3.0 * std::sqrt(0.5 * 0.5 / n2));
}

TEST_CASE("single-category data produces the singleton ratio table") {
    std::vector<HistoricalRecord> records(40);
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto& rec = records[i];
        rec.applicant_id = "r" + std::to_string(i);
        rec.job_category = "eng";
        rec.race_ethnicity = "White";
        rec.sex = "Female";
        rec.selected = i % 3 == 0;
        rec.demographics_source = DemographicsSource::SelfReported;
    }
    auto config = fixture_config();
    config.per_cell_minimum = 10;
    const auto summary = run_bias_audit(records, IngestReport{}, config, nullptr);
    REQUIRE(summary.categories.size() == 1);
    const auto& tables = summary.categories[0].tables;
    REQUIRE(tables.size() == 3);
    for (const auto& table : tables) {
        REQUIRE(table.cells.size() == 1);
        CHECK(*table.cells[0].selection_impact_ratio == doctest::Approx(1.0));
    }
}

TEST_CASE("bias audit summary matches the hand-computed fixture numbers") {
    const auto [records, report] = ingest_file(kFixtureDir + "/ll144_audit_fixture.csv");
    REQUIRE(records.size() == 20);
    const auto summary = run_bias_audit(records, report, fixture_config(), nullptr);

    CHECK(summary.ingested_rows == 20);
    CHECK(summary.quarantined_rows == 0);
    CHECK(summary.records_used == 16);
    CHECK(summary.records_excluded == 4);
    REQUIRE(summary.exclusions.entries.size() == 4);
    CHECK(summary.exclusions.entries[0].applicant_id == "s17");
    CHECK(summary.exclusions.entries[0].reason == "demographics_source=imputed");
    CHECK(summary.exclusions.entries[1].applicant_id == "s18");
    CHECK(summary.exclusions.entries[2].applicant_id == "s19");
    CHECK(summary.exclusions.entries[2].reason == "race_ethnicity=UNKNOWN");
    CHECK(summary.exclusions.entries[3].applicant_id == "s20");

    REQUIRE(summary.categories.size() == 1);
    const auto& audit = summary.categories[0];
    CHECK(audit.job_category == "software_engineer");
    CHECK(audit.used == 16);
    CHECK(audit.excluded == 4);
    REQUIRE(audit.tables.size() == 3);

    // Race table, cells sorted lexicographically: Black then White.
    const auto& race = audit.tables[0];
    CHECK(race.axis == "race_ethnicity");
    REQUIRE(race.cells.size() == 2);
    CHECK(race.cells[0].key == "Black");
    CHECK(race.cells[0].total == 8);
    CHECK(*race.cells[0].selection_rate == doctest::Approx(0.25));
    CHECK(*race.cells[0].selection_impact_ratio == doctest::Approx(0.4));
    CHECK(*race.cells[0].median_score == doctest::Approx(0.45));
    CHECK(*race.cells[0].scoring_rate == doctest::Approx(0.25));
    CHECK(race.cells[1].key == "White");
    CHECK(*race.cells[1].selection_rate == doctest::Approx(0.625));
    CHECK(*race.cells[1].selection_impact_ratio == doctest::Approx(1.0));
    CHECK(*race.cells[1].median_score == doctest::Approx(0.725));
    CHECK(*race.cells[1].scoring_rate == doctest::Approx(0.75));
    CHECK(*race.pooled_median_score == doctest::Approx(0.575));

    // Sex table: Female 3/8, Male 4/8.
    const auto& sex = audit.tables[1];
    CHECK(*sex.cells[0].selection_rate == doctest::Approx(0.375));
    CHECK(*sex.cells[1].selection_rate == doctest::Approx(0.5));
    CHECK(*sex.cells[0].selection_impact_ratio == doctest::Approx(0.75));

    // Intersection: Black|Female .25, Black|Male .25, White|Female .5, White|Male .75.
    const auto& inter = audit.tables[2];
    REQUIRE(inter.cells.size() == 4);
    CHECK(*inter.cells[0].selection_rate == doctest::Approx(0.25));
    CHECK(*inter.cells[3].selection_rate == doctest::Approx(0.75));
    CHECK(*inter.cells[3].selection_impact_ratio == doctest::Approx(1.0));
    CHECK(*inter.cells[1].selection_impact_ratio == doctest::Approx(1.0 / 3.0));

    // One test per axis, all with disclosures and adjusted p-values.
    REQUIRE(audit.tests.size() == 3);
    for (const auto& test : audit.tests) {
        CHECK_FALSE(test.outcome.disclosure.statement.empty());
        CHECK(test.outcome.p_value.has_value());
        CHECK(test.adjusted_p.has_value());
    }
    CHECK(audit.tests[0].high_cell == "White");
    CHECK(audit.tests[0].low_cell == "Black");
}

TEST_CASE("no demographic cell ever counts an excluded record") {
    const auto [records, report] = ingest_file(kFixtureDir + "/ll144_audit_fixture.csv");
    const auto summary = run_bias_audit(records, report, fixture_config(), nullptr);
    // Instrumented recount: rebuild cell totals from scratch using only
    // self-reported records with known demographics.
    std::map<std::string, long> expected;
    long usable_total = 0;
    for (const auto& rec : records) {
        if (rec.demographics_source != DemographicsSource::SelfReported) continue;
        if (rec.race_ethnicity == kUnknownCategory || rec.sex == kUnknownCategory) continue;
        ++usable_total;
        expected["race_ethnicity|" + rec.race_ethnicity]++;
        expected["sex|" + rec.sex]++;
        expected["race_ethnicity|sex|" + rec.race_ethnicity + "|" + rec.sex]++;
    }
    for (const auto& table : summary.categories[0].tables) {
        long table_total = 0;
        for (const auto& cell : table.cells) {
            table_total += cell.total;
            CHECK(cell.total == expected.at(table.axis + "|" + cell.key));
        }
        CHECK(table_total == usable_total);
    }
    // Conservation: used + excluded = parsed records, per category and overall.
    CHECK(summary.records_used + summary.records_excluded == records.size());
    CHECK(summary.categories[0].used + summary.categories[0].excluded == records.size());
}

TEST_CASE("bias audit output is deterministic") {
    const auto [records, report] = ingest_file(kFixtureDir + "/ll144_audit_fixture.csv");
    const auto a = run_bias_audit(records, report, fixture_config(), nullptr);
    const auto b = run_bias_audit(records, report, fixture_config(), nullptr);
    CHECK(summary_to_json(a).dump(2) == summary_to_json(b).dump(2));
    CHECK(summary_to_markdown(a) == summary_to_markdown(b));
}

TEST_CASE("insufficient cells are marked, never dropped") {
    const auto [records, report] = ingest_file(kFixtureDir + "/ll144_audit_fixture.csv");
    auto config = fixture_config();
    config.per_cell_minimum = 30;  // every cell in the fixture is below this
    const auto summary = run_bias_audit(records, report, config, nullptr);
    const auto& audit = summary.categories[0];
    CHECK_FALSE(audit.insufficient_cells.empty());
    // Cells are still present in the tables with their counts.
    for (const auto& table : audit.tables) {
        for (const auto& cell : table.cells) CHECK(cell.total > 0);
    }
    // No testable pair of sufficient cells -> tests skipped with notes.
    CHECK(audit.tests.empty());
    bool noted = false;
    for (const auto& note : summary.notes) {
        noted = noted || note.find("insufficient historical data") != std::string::npos;
    }
    CHECK(noted);
    // Without a model, the test-data section stays absent.
    CHECK_FALSE(summary.test_data.has_value());
}

TEST_CASE("the test-data path fills in when allowed and a model is present") {
    const auto [records, report] = ingest_file(kFixtureDir + "/ll144_audit_fixture.csv");
    auto config = fixture_config();
    config.per_cell_minimum = 30;
    config.allow_test_data = true;
    config.test_data_n = 400;
    config.race_categories = {"G_1", "G_2"};
    config.sex_categories = {"Female", "Male"};
    const auto model = make_synthetic(make_group_threshold_spec(0.8, 0.5, 0.1));
    const auto summary = run_bias_audit(records, report, config, model.get());
    REQUIRE(summary.test_data.has_value());
    CHECK(summary.test_data->n == 400);
    CHECK_FALSE(summary.test_data->trigger.empty());
    REQUIRE(summary.test_data_audit.has_value());
    CHECK(summary.test_data_audit->used == 400);
    CHECK_FALSE(summary.test_data_audit->tests.empty());
    // Disclosure completeness: generation section present iff test data used.
    const Json j = summary_to_json(summary);
    CHECK_FALSE(j.at("test_data").is_null());
}

TEST_CASE("config validation refuses missing mandatory choices") {
    Ll144Config config;
    config.audit_date = "2024-05-01";
    CHECK_THROWS_WITH_AS(config.validate(), doctest::Contains("impact_gap_threshold"),
                         ConfigError);
    config.impact_gap_threshold = 0.2;
    CHECK_THROWS_WITH_AS(config.validate(), doctest::Contains("presumption"), ConfigError);
    config.presumption = Presumption::Compliance;
    CHECK_NOTHROW(config.validate());
    config.audit_date.clear();
    CHECK_THROWS_WITH_AS(config.validate(), doctest::Contains("audit_date"), ConfigError);
}

TEST_CASE("an audit with no usable records refuses loudly") {
    std::vector<HistoricalRecord> records(3);
    for (auto& rec : records) {
        rec.applicant_id = "x";
        rec.job_category = "eng";
        rec.race_ethnicity = "White";
        rec.sex = "Female";
        rec.selected = true;
        rec.demographics_source = DemographicsSource::Imputed;
    }
    CHECK_THROWS_WITH_AS(run_bias_audit(records, IngestReport{}, fixture_config(), nullptr),
                         doctest::Contains("no usable records"), EstimationError);
}
