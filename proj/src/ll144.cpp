#include "audit/ll144.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "audit/bootstrap.hpp"
#include "audit/multiplicity.hpp"
#include "audit/rng.hpp"
#include "audit/stats.hpp"

namespace audit::ll144 {

std::string demographics_source_name(DemographicsSource s) {
    switch (s) {
        case DemographicsSource::SelfReported: return "self-reported";
        case DemographicsSource::Imputed: return "imputed";
        case DemographicsSource::Inferred: return "inferred";
        case DemographicsSource::Unknown: return "unknown";
    }
    return "unknown";
}

// --- Ingestion ------------------------------------------------------------------

namespace {

constexpr const char* kExpectedHeader =
    "applicant_id,job_category,race_ethnicity,sex,demographics_source,selected,score";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(field);
    return fields;
}

std::optional<DemographicsSource> parse_source(const std::string& raw) {
    if (raw == "self-reported" || raw == "self_reported") return DemographicsSource::SelfReported;
    if (raw == "imputed") return DemographicsSource::Imputed;
    if (raw == "inferred") return DemographicsSource::Inferred;
    if (raw == "unknown") return DemographicsSource::Unknown;
    return std::nullopt;
}

}  // namespace

std::pair<std::vector<HistoricalRecord>, IngestReport> ingest(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty input: expected the CSV header");
    {
        std::string header = line;
        if (!header.empty() && header.back() == '\r') header.pop_back();
        if (header != kExpectedHeader) {
            throw ConfigError(std::string("CSV header mismatch; expected '") + kExpectedHeader +
                              "', got '" + header + "'");
        }
    }

    std::vector<HistoricalRecord> records;
    IngestReport report;
    std::size_t row_number = 1;  // header was row 1
    auto quarantine = [&](std::size_t row, const std::string& reason) {
        report.quarantined.push_back(QuarantinedRow{row, reason});
        ++report.reason_counts[reason];
    };

    while (std::getline(in, line)) {
        ++row_number;
        if (line.empty() || line == "\r") continue;
        ++report.data_rows;
        const auto fields = split_csv(line);
        if (fields.size() != 7) {
            quarantine(row_number, "wrong field count");
            continue;
        }
        HistoricalRecord rec;
        rec.applicant_id = fields[0];
        rec.job_category = fields[1];
        rec.race_ethnicity = fields[2].empty() ? kUnknownCategory : fields[2];
        rec.sex = fields[3].empty() ? kUnknownCategory : fields[3];
        if (rec.applicant_id.empty()) {
            quarantine(row_number, "missing applicant_id");
            continue;
        }
        if (rec.job_category.empty()) {
            quarantine(row_number, "missing job_category");
            continue;
        }
        const auto source = parse_source(fields[4]);
        if (!source) {
            quarantine(row_number, "invalid demographics_source");
            continue;
        }
        rec.demographics_source = *source;
        const std::string& selected_raw = fields[5];
        if (selected_raw == "1") {
            rec.selected = true;
        } else if (selected_raw == "0") {
            rec.selected = false;
        } else if (!selected_raw.empty()) {
            quarantine(row_number, "selected not in {0,1,empty}");
            continue;
        }
        const std::string& score_raw = fields[6];
        if (!score_raw.empty()) {
            char* end = nullptr;
            const double v = std::strtod(score_raw.c_str(), &end);
            if (end == nullptr || *end != '\0') {
                quarantine(row_number, "malformed score");
                continue;
            }
            if (!(v >= 0.0 && v <= 1.0)) {
                quarantine(row_number, "score out of range");
                continue;
            }
            rec.score = v;
        }
        if (!rec.selected && !rec.score) {
            quarantine(row_number, "no outcome (selected and score both empty)");
            continue;
        }
        records.push_back(std::move(rec));
    }
    return {std::move(records), std::move(report)};
}

std::pair<std::vector<HistoricalRecord>, IngestReport> ingest_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open historical data file '" + path + "'");
    return ingest(in);
}

// --- Exclusions -----------------------------------------------------------------

std::pair<std::vector<HistoricalRecord>, ExclusionLedger> apply_exclusions(
    const std::vector<HistoricalRecord>& records) {
    std::vector<HistoricalRecord> usable;
    ExclusionLedger ledger;
    for (const auto& rec : records) {
        std::vector<std::string> reasons;
        switch (rec.demographics_source) {
            case DemographicsSource::Imputed:
                reasons.push_back("demographics_source=imputed");
                break;
            case DemographicsSource::Inferred:
                reasons.push_back("demographics_source=inferred");
                break;
            case DemographicsSource::Unknown:
                reasons.push_back("demographics_source=unknown");
                break;
            case DemographicsSource::SelfReported:
                break;
        }
        if (rec.race_ethnicity == kUnknownCategory) reasons.push_back("race_ethnicity=UNKNOWN");
        if (rec.sex == kUnknownCategory) reasons.push_back("sex=UNKNOWN");
        if (reasons.empty()) {
            usable.push_back(rec);
        } else {
            std::string joined;
            for (std::size_t i = 0; i < reasons.size(); ++i) {
                if (i) joined += ", ";
                joined += reasons[i];
            }
            ledger.entries.push_back(ExclusionEntry{rec.applicant_id, rec.job_category, joined});
        }
    }
    return {std::move(usable), std::move(ledger)};
}

// --- Config ----------------------------------------------------------------------

void Ll144Config::validate() const {
    if (!(impact_gap_threshold > 0.0 && impact_gap_threshold < 1.0)) {
        throw ConfigError(
            "impact_gap_threshold is required and must lie in (0, 1); the rules cite no "
            "numeric standard, so it cannot be defaulted");
    }
    if (!presumption) {
        throw ConfigError(
            "presumption is required: LL144's 'statistically significant' does not "
            "choose a null hypothesis, so the auditor must");
    }
    if (!(zeta > 0.0 && zeta <= 0.5)) throw ConfigError("zeta must lie in (0, 0.5]");
    if (per_cell_minimum < 1) throw ConfigError("per_cell_minimum must be at least 1");
    if (multiplicity != "bonferroni" && multiplicity != "benjamini_hochberg" &&
        multiplicity != "none") {
        throw ConfigError("multiplicity must be bonferroni, benjamini_hochberg, or none");
    }
    if (audit_date.empty()) {
        throw ConfigError("audit_date is required (ISO date); it pins the summary bytes");
    }
}

// --- Test data -------------------------------------------------------------------

namespace {

struct CellCount {
    std::string race;
    std::string sex;
    long count = 0;
};

std::vector<std::string> categories_or_observed(const std::vector<std::string>& declared,
                                                const std::vector<HistoricalRecord>& usable,
                                                const std::string axis) {
    if (!declared.empty()) return declared;
    std::set<std::string> seen;
    for (const auto& rec : usable) {
        seen.insert(axis == "race_ethnicity" ? rec.race_ethnicity : rec.sex);
    }
    return {seen.begin(), seen.end()};
}

std::vector<CellCount> intersection_counts(const Ll144Config& config,
                                           const std::vector<HistoricalRecord>& usable) {
    const auto races = categories_or_observed(config.race_categories, usable, "race_ethnicity");
    const auto sexes = categories_or_observed(config.sex_categories, usable, "sex");
    std::vector<CellCount> cells;
    for (const auto& r : races) {
        for (const auto& s : sexes) {
            CellCount c{r, s, 0};
            for (const auto& rec : usable) {
                if (rec.race_ethnicity == r && rec.sex == s) ++c.count;
            }
            cells.push_back(std::move(c));
        }
    }
    return cells;
}

std::string insufficiency_trigger(const Ll144Config& config,
                                  const std::vector<CellCount>& cells) {
    std::string trigger;
    for (const auto& c : cells) {
        if (c.count < config.per_cell_minimum) {
            if (!trigger.empty()) trigger += "; ";
            trigger += c.race + "|" + c.sex + " has " + std::to_string(c.count) + " < " +
                       std::to_string(config.per_cell_minimum);
        }
    }
    return trigger;
}

}  // namespace

TestDataResult generate_test_data(const BlackBoxModel& model, const Ll144Config& config,
                                  const std::vector<HistoricalRecord>& usable, std::size_t n,
                                  std::uint64_t seed) {
    config.validate();
    const auto cells = intersection_counts(config, usable);
    if (cells.empty()) throw ConfigError("no demographic cells declared or observed");
    const std::string trigger = insufficiency_trigger(config, cells);
    if (trigger.empty()) {
        throw ConfigError(
            "historical data sufficient: every demographic cell meets the per-cell "
            "minimum, and the law prefers historical data");
    }
    if (n < cells.size()) {
        throw ConfigError("test data n=" + std::to_string(n) + " cannot cover " +
                          std::to_string(cells.size()) + " demographic cells");
    }

    // Even stratification; the first (n mod cells) cells take the remainder.
    const std::size_t base = n / cells.size();
    std::size_t remainder = n % cells.size();

    const InputSchema& schema = model.input_schema();
    DistributionSpec dist = DistributionSpec::uniform_over(schema);

    TestDataResult result;
    result.evidence.provenance.audit_seed = seed;
    result.evidence.provenance.model_identity = model.identity();
    result.evidence.provenance.distribution = dist.describe();
    result.evidence.provenance.strategy_tag = "ll144_test_data";

    Rng rng(derive_seed(seed, 0x7E57DA7AULL));
    std::size_t index = 0;
    for (const auto& cell : cells) {
        std::size_t quota = base + (remainder > 0 ? 1 : 0);
        if (remainder > 0) --remainder;
        for (std::size_t i = 0; i < quota; ++i) {
            ModelInput input = dist.sample(rng);
            input.group.reset();
            // Demographics ride along as audit annotations; they reach the
            // model only through axes its schema actually declares.
            if (!schema.group_set.empty() &&
                std::find(schema.group_set.begin(), schema.group_set.end(), cell.race) !=
                    schema.group_set.end()) {
                input.group = cell.race;
            }
            if (schema.find("race_ethnicity") != nullptr) {
                input.features["race_ethnicity"] = cell.race;
            }
            if (schema.find("sex") != nullptr) input.features["sex"] = cell.sex;

            const std::uint64_t qseed = derive_seed(seed, index);
            const ModelOutput output = model.query(input, qseed);
            result.evidence.records.push_back(QueryRecord{index, input, output,
                                                          "ll144_test_data", qseed,
                                                          model.replayable()});
            OutcomeRow row;
            row.categories["race_ethnicity"] = cell.race;
            row.categories["sex"] = cell.sex;
            if (output.is_number() &&
                (output.number() == 0.0 || output.number() == 1.0) &&
                model.output_space().kind == OutputSpace::Kind::Binary) {
                row.selected = output.number() == 1.0;
            } else if (output.is_number()) {
                row.score = output.number();
            }
            result.rows.push_back(std::move(row));
            ++index;
        }
    }
    result.disclosure.method =
        "stratified synthetic applicants (uniform features per declared cell), queried "
        "through the audited model";
    result.disclosure.seed = seed;
    result.disclosure.n = n;
    result.disclosure.trigger = trigger;
    return result;
}

// --- The audit --------------------------------------------------------------------

namespace {

std::vector<OutcomeRow> rows_for_category(const std::vector<HistoricalRecord>& usable,
                                          const std::string& job_category) {
    std::vector<OutcomeRow> rows;
    for (const auto& rec : usable) {
        if (rec.job_category != job_category) continue;
        OutcomeRow row;
        row.categories["race_ethnicity"] = rec.race_ethnicity;
        row.categories["sex"] = rec.sex;
        row.selected = rec.selected;
        row.score = rec.score;
        rows.push_back(std::move(row));
    }
    return rows;
}

// Historical rows repackaged as evidence so the generic audit machinery can
// test them: the "model" is the historical record itself.
Evidence evidence_from_rows(const std::vector<OutcomeRow>& rows, const std::string& axis,
                            bool use_scoring_indicator, double pooled_median) {
    Evidence evidence;
    evidence.provenance.model_identity = "historical records";
    evidence.provenance.distribution = "empirical historical data";
    evidence.provenance.strategy_tag = "historical";
    std::uint64_t index = 0;
    for (const auto& row : rows) {
        auto it = row.categories.find(axis);
        if (it == row.categories.end()) continue;
        std::optional<bool> indicator;
        if (use_scoring_indicator) {
            if (row.score) indicator = *row.score > pooled_median;
        } else {
            indicator = row.selected;
        }
        if (!indicator) continue;
        QueryRecord rec;
        rec.index = index++;
        rec.input.group = it->second;
        rec.output = ModelOutput::of(*indicator ? 1.0 : 0.0);
        rec.strategy_tag = "historical";
        rec.replayable = true;
        evidence.records.push_back(std::move(rec));
    }
    return evidence;
}

// Intersection cells get composite keys "race|sex"; the evidence view reuses
// the composite as the group label.
Evidence evidence_from_rows_intersection(const std::vector<OutcomeRow>& rows,
                                         const std::vector<std::string>& axes) {
    Evidence evidence;
    evidence.provenance.model_identity = "historical records";
    evidence.provenance.distribution = "empirical historical data";
    evidence.provenance.strategy_tag = "historical";
    std::uint64_t index = 0;
    for (const auto& row : rows) {
        if (!row.selected) continue;
        std::string key;
        bool complete = true;
        for (std::size_t i = 0; i < axes.size(); ++i) {
            auto it = row.categories.find(axes[i]);
            if (it == row.categories.end()) {
                complete = false;
                break;
            }
            if (i) key += "|";
            key += it->second;
        }
        if (!complete) continue;
        QueryRecord rec;
        rec.index = index++;
        rec.input.group = key;
        rec.output = ModelOutput::of(*row.selected ? 1.0 : 0.0);
        rec.strategy_tag = "historical";
        rec.replayable = true;
        evidence.records.push_back(std::move(rec));
    }
    return evidence;
}

struct AxisTestPlan {
    std::string axis;
    std::string metric;
    std::string high_cell;
    std::string low_cell;
    Evidence evidence;
};

CategoryAudit audit_rows(const std::vector<OutcomeRow>& rows, const std::string& label,
                         const Ll144Config& config) {
    CategoryAudit audit;
    audit.job_category = label;
    audit.used = rows.size();

    ImpactMetricsCriterion metric_criterion;
    metric_criterion.axes = {"race_ethnicity", "sex"};
    metric_criterion.eta = config.impact_gap_threshold;
    audit.tables = impact_metrics(rows, metric_criterion);

    // Insufficiency marks, never silent drops.
    for (const auto& table : audit.tables) {
        for (const auto& cell : table.cells) {
            if (cell.total < config.per_cell_minimum) {
                audit.insufficient_cells.push_back(CellFlag{table.axis, cell.key, cell.total});
            }
        }
    }

    // One test per axis (race, sex, and the intersection): highest vs lowest
    // rate among sufficient cells.
    for (const auto& table : audit.tables) {
        const bool intersection = table.axis.find('|') != std::string::npos;
        // Prefer selection rates; fall back to scoring rates when the table
        // has only scores.
        bool scoring = true;
        for (const auto& cell : table.cells) {
            if (cell.selection_rate) {
                scoring = false;
                break;
            }
        }
        const ImpactCell* best = nullptr;
        const ImpactCell* worst = nullptr;
        auto rate_of = [scoring](const ImpactCell& c) -> std::optional<double> {
            return scoring ? c.scoring_rate : c.selection_rate;
        };
        for (const auto& cell : table.cells) {
            if (cell.total < config.per_cell_minimum) continue;
            const auto rate = rate_of(cell);
            if (!rate) continue;
            if (!best || *rate > *rate_of(*best)) best = &cell;
            if (!worst || *rate < *rate_of(*worst)) worst = &cell;
        }
        if (best == nullptr || best == worst) {
            audit.notes.push_back("axis '" + table.axis +
                                  "': fewer than two sufficient cells; test skipped");
            continue;
        }

        AuditSpec spec;
        StatisticalParityCriterion parity;
        parity.group1 = best->key;
        parity.group2 = worst->key;
        parity.eta = config.impact_gap_threshold;
        spec.criterion = parity;
        spec.presumption = *config.presumption;
        spec.zeta = config.zeta;
        spec.method = config.method;
        spec.seed = config.seed;
        spec.bootstrap_resamples = config.bootstrap_resamples;
        spec.assumptions.input_distribution = "empirical historical data";
        spec.assumptions.model_family = "binary selection per applicant, independent across rows";

        Evidence evidence;
        if (intersection) {
            evidence = evidence_from_rows_intersection(rows, {"race_ethnicity", "sex"});
        } else {
            evidence = evidence_from_rows(rows, table.axis, scoring,
                                          table.pooled_median_score.value_or(0.0));
        }
        const RunResult result = run_audit(evidence, spec);
        if (!result.completed()) {
            audit.notes.push_back("axis '" + table.axis + "': audit withheld (" +
                                  result.refusal->reason + "); recommended n per cell: " +
                                  std::to_string(result.refusal->recommended_n_per_group));
            continue;
        }
        CategoryTest test;
        test.axis = table.axis;
        test.metric = scoring ? "scoring_rate" : "selection_rate";
        test.high_cell = best->key;
        test.low_cell = worst->key;
        test.outcome = *result.outcome;
        audit.tests.push_back(std::move(test));
    }

    // Bootstrap intervals for single-axis selection rates.
    for (const auto& table : audit.tables) {
        if (table.axis.find('|') != std::string::npos) continue;
        for (const auto& cell : table.cells) {
            if (!cell.selection_rate || cell.total < config.per_cell_minimum) continue;
            const std::string axis = table.axis;
            const std::string key = cell.key;
            std::function<std::optional<double>(const std::vector<OutcomeRow>&)> stat =
                [axis, key](const std::vector<OutcomeRow>& sample) -> std::optional<double> {
                long total = 0, selected = 0;
                for (const auto& row : sample) {
                    auto it = row.categories.find(axis);
                    if (it == row.categories.end() || it->second != key || !row.selected) {
                        continue;
                    }
                    ++total;
                    selected += *row.selected ? 1 : 0;
                }
                if (total == 0) return std::nullopt;
                return static_cast<double>(selected) / static_cast<double>(total);
            };
            const auto ci = bootstrap_ci<OutcomeRow>(rows, stat, config.bootstrap_resamples,
                                                     config.zeta, config.seed);
            audit.selection_rate_intervals.push_back(CellInterval{table.axis, key, ci.lo, ci.hi});
        }
    }
    return audit;
}

void adjust_summary_tests(BiasAuditSummary& summary, const Ll144Config& config) {
    if (config.multiplicity == "none") return;
    std::vector<double> p_values;
    std::vector<CategoryTest*> tests;
    auto gather = [&](CategoryAudit& audit) {
        for (auto& test : audit.tests) {
            if (test.outcome.p_value) {
                p_values.push_back(*test.outcome.p_value);
                tests.push_back(&test);
            }
        }
    };
    for (auto& cat : summary.categories) gather(cat);
    if (summary.test_data_audit) gather(*summary.test_data_audit);
    if (p_values.empty()) return;
    const auto method = config.multiplicity == "bonferroni"
                            ? MultiplicityMethod::Bonferroni
                            : MultiplicityMethod::BenjaminiHochberg;
    const auto adjusted = adjust_multiplicity(p_values, method, config.zeta);
    for (std::size_t i = 0; i < tests.size(); ++i) {
        tests[i]->adjusted_p = adjusted.adjusted_p[i];
        tests[i]->adjusted_reject = adjusted.reject[i];
    }
    summary.notes.push_back("p-values adjusted across " + std::to_string(p_values.size()) +
                            " simultaneous tests (" + config.multiplicity + ")");
}

}  // namespace

BiasAuditSummary run_bias_audit(const std::vector<HistoricalRecord>& records,
                                const IngestReport& ingest_report, const Ll144Config& config,
                                const BlackBoxModel* model) {
    config.validate();
    auto [usable, ledger] = apply_exclusions(records);
    if (usable.empty()) {
        throw EstimationError("no usable records after the imputed/unknown-demographics "
                              "exclusions; cannot run a bias audit");
    }

    BiasAuditSummary summary;
    summary.audit_date = config.audit_date;
    summary.model_identity = model != nullptr ? model->identity() : "historical records only";
    summary.impact_gap_threshold = config.impact_gap_threshold;
    summary.presumption = *config.presumption;
    summary.zeta = config.zeta;
    summary.method = config.method;
    summary.per_cell_minimum = config.per_cell_minimum;
    summary.multiplicity = config.multiplicity;
    summary.ingested_rows = ingest_report.data_rows;
    summary.quarantined_rows = ingest_report.quarantined.size();
    summary.quarantine_reasons = ingest_report.reason_counts;
    summary.records_used = usable.size();
    summary.records_excluded = ledger.entries.size();
    summary.exclusions = ledger;

    std::set<std::string> job_categories;
    for (const auto& rec : usable) job_categories.insert(rec.job_category);
    for (const auto& category : job_categories) {
        const auto rows = rows_for_category(usable, category);
        CategoryAudit audit = audit_rows(rows, category, config);
        std::size_t excluded_here = 0;
        for (const auto& e : ledger.entries) {
            if (e.job_category == category) ++excluded_here;
        }
        audit.excluded = excluded_here;
        summary.categories.push_back(std::move(audit));
    }

    // Test-data path: triggered by insufficiency, allowed by config, and
    // only possible with a live model to query.
    const auto cells = intersection_counts(config, usable);
    const std::string trigger = insufficiency_trigger(config, cells);
    if (!trigger.empty()) {
        summary.notes.push_back("insufficient historical data: " + trigger);
        if (config.allow_test_data && model != nullptr) {
            const std::size_t n = config.test_data_n > 0
                                      ? config.test_data_n
                                      : cells.size() * static_cast<std::size_t>(
                                                           config.per_cell_minimum);
            TestDataResult generated =
                generate_test_data(*model, config, usable, n, config.seed);
            summary.test_data = generated.disclosure;
            summary.test_data_audit =
                audit_rows(generated.rows, "synthetic test data", config);
        } else if (config.allow_test_data && model == nullptr) {
            summary.notes.push_back(
                "test data allowed but no model configured; insufficient cells are "
                "marked and left untested (test data cannot be fabricated without "
                "querying the actual AEDT)");
        } else {
            summary.notes.push_back(
                "test data disallowed by configuration; insufficient cells are marked");
        }
    }
    adjust_summary_tests(summary, config);
    return summary;
}

// --- Serialization -----------------------------------------------------------------

namespace {

Json cell_to_json(const ImpactCell& cell) {
    Json j;
    j["cell"] = cell.key;
    j["total"] = cell.total;
    auto put = [&j](const char* name, const auto& opt) {
        if (opt) {
            j[name] = *opt;
        } else {
            j[name] = nullptr;  // empty, never zero
        }
    };
    put("selected", cell.selected_count);
    put("selection_rate", cell.selection_rate);
    put("scoring_rate", cell.scoring_rate);
    put("median_score", cell.median_score);
    put("selection_impact_ratio", cell.selection_impact_ratio);
    put("scoring_impact_ratio", cell.scoring_impact_ratio);
    return j;
}

Json category_to_json(const CategoryAudit& audit) {
    Json j;
    j["job_category"] = audit.job_category;
    j["records_used"] = audit.used;
    j["records_excluded"] = audit.excluded;
    Json tables = Json::array();
    for (const auto& table : audit.tables) {
        Json t;
        t["axis"] = table.axis;
        if (table.pooled_median_score) {
            t["pooled_median_score"] = *table.pooled_median_score;
        }
        Json cells = Json::array();
        for (const auto& cell : table.cells) cells.push_back(cell_to_json(cell));
        t["cells"] = std::move(cells);
        tables.push_back(std::move(t));
    }
    j["tables"] = std::move(tables);
    Json flags = Json::array();
    for (const auto& flag : audit.insufficient_cells) {
        flags.push_back(Json{{"table", flag.table}, {"cell", flag.cell}, {"count", flag.count},
                             {"status", "insufficient data"}});
    }
    j["insufficient_cells"] = std::move(flags);
    Json tests = Json::array();
    for (const auto& test : audit.tests) {
        Json t;
        t["axis"] = test.axis;
        t["metric"] = test.metric;
        t["high_cell"] = test.high_cell;
        t["low_cell"] = test.low_cell;
        t["outcome"] = outcome_to_json(test.outcome);
        t["adjusted_p"] = test.adjusted_p ? Json(*test.adjusted_p) : Json(nullptr);
        t["adjusted_reject"] =
            test.adjusted_reject ? Json(*test.adjusted_reject) : Json(nullptr);
        tests.push_back(std::move(t));
    }
    j["tests"] = std::move(tests);
    Json intervals = Json::array();
    for (const auto& ci : audit.selection_rate_intervals) {
        intervals.push_back(Json{{"table", ci.table},
                                 {"cell", ci.cell},
                                 {"lo", ci.lo},
                                 {"hi", ci.hi}});
    }
    j["selection_rate_intervals"] = std::move(intervals);
    j["notes"] = audit.notes;
    return j;
}

}  // namespace

Json summary_to_json(const BiasAuditSummary& summary) {
    Json j;
    j["schema_version"] = summary.schema_version;
    j["kind"] = "ll144-bias-audit-summary";
    j["audit_date"] = summary.audit_date;
    j["model_identity"] = summary.model_identity;
    Json cfg;
    cfg["impact_gap_threshold"] = summary.impact_gap_threshold;
    cfg["presumption"] = presumption_name(summary.presumption);
    cfg["zeta"] = summary.zeta;
    cfg["method"] = test_method_name(summary.method);
    cfg["per_cell_minimum"] = summary.per_cell_minimum;
    cfg["multiplicity"] = summary.multiplicity;
    j["configuration"] = std::move(cfg);
    Json prov;
    prov["ingested_rows"] = summary.ingested_rows;
    prov["quarantined_rows"] = summary.quarantined_rows;
    Json qreasons = Json::object();
    for (const auto& [reason, count] : summary.quarantine_reasons) qreasons[reason] = count;
    prov["quarantine_reasons"] = std::move(qreasons);
    prov["records_used"] = summary.records_used;
    prov["records_excluded"] = summary.records_excluded;
    j["data_provenance"] = std::move(prov);
    Json ledger = Json::array();
    for (const auto& e : summary.exclusions.entries) {
        ledger.push_back(Json{{"applicant_id", e.applicant_id},
                              {"job_category", e.job_category},
                              {"reason", e.reason}});
    }
    j["exclusion_ledger"] = std::move(ledger);
    Json cats = Json::array();
    for (const auto& cat : summary.categories) cats.push_back(category_to_json(cat));
    j["job_categories"] = std::move(cats);
    if (summary.test_data) {
        Json td;
        td["method"] = summary.test_data->method;
        td["seed"] = summary.test_data->seed;
        td["n"] = summary.test_data->n;
        td["trigger"] = summary.test_data->trigger;
        j["test_data"] = std::move(td);
    } else {
        j["test_data"] = nullptr;
    }
    if (summary.test_data_audit) {
        j["test_data_audit"] = category_to_json(*summary.test_data_audit);
    } else {
        j["test_data_audit"] = nullptr;
    }
    j["notes"] = summary.notes;
    return j;
}

namespace {

std::string fmt_opt(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("-");
}

// Intersection keys contain '|', which would break markdown table cells.
std::string md_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += '\\';
        out += c;
    }
    return out;
}

void render_category(std::string& md, const CategoryAudit& audit) {
    md += "## Job category: " + audit.job_category + "\n\n";
    md += "- records used: " + std::to_string(audit.used) + "\n";
    md += "- records excluded: " + std::to_string(audit.excluded) + "\n\n";
    for (const auto& table : audit.tables) {
        md += "### " + table.axis + "\n\n";
        md += "| cell | total | selected | selection rate | scoring rate | median score | "
              "impact ratio |\n";
        md += "|---|---|---|---|---|---|---|\n";
        for (const auto& cell : table.cells) {
            const bool insufficient = [&] {
                for (const auto& flag : audit.insufficient_cells) {
                    if (flag.table == table.axis && flag.cell == cell.key) return true;
                }
                return false;
            }();
            md += "| " + md_escape(cell.key) + (insufficient ? " (insufficient data)" : "") +
                  " | " +
                  std::to_string(cell.total) + " | " +
                  (cell.selected_count ? std::to_string(*cell.selected_count)
                                       : std::string("-")) +
                  " | " + fmt_opt(cell.selection_rate) + " | " + fmt_opt(cell.scoring_rate) +
                  " | " + fmt_opt(cell.median_score) + " | " +
                  fmt_opt(cell.selection_impact_ratio ? cell.selection_impact_ratio
                                                      : cell.scoring_impact_ratio) +
                  " |\n";
        }
        md += "\n";
    }
    if (!audit.selection_rate_intervals.empty()) {
        md += "### Selection-rate confidence intervals (percentile bootstrap)\n\n";
        for (const auto& ci : audit.selection_rate_intervals) {
            md += "- " + ci.table + " / " + ci.cell + ": [" + format_double(ci.lo) + ", " +
                  format_double(ci.hi) + "]\n";
        }
        md += "\n";
    }
    if (!audit.tests.empty()) {
        md += "### Statistical tests\n\n";
        for (const auto& test : audit.tests) {
            md += "- " + test.axis + " (" + test.metric + "): '" + test.high_cell + "' vs '" +
                  test.low_cell + "': " + decision_name(test.outcome.decision) +
                  (test.outcome.p_value ? ", p=" + format_double(*test.outcome.p_value)
                                        : std::string()) +
                  (test.adjusted_p ? ", adjusted p=" + format_double(*test.adjusted_p) +
                                         (*test.adjusted_reject ? " (reject)" : " (no reject)")
                                   : std::string()) +
                  "\n";
            md += "  - " + test.outcome.disclosure.statement + "\n";
        }
        md += "\n";
    }
    for (const auto& note : audit.notes) md += "> " + note + "\n";
    if (!audit.notes.empty()) md += "\n";
}

}  // namespace

std::string summary_to_markdown(const BiasAuditSummary& summary) {
    std::string md;
    md += "# Bias audit summary\n\n";
    md += "- audit date: " + summary.audit_date + "\n";
    md += "- audited object: " + summary.model_identity + "\n";
    md += "- presumption: " + presumption_name(summary.presumption) + "\n";
    md += "- significance (zeta): " + format_double(summary.zeta) + "\n";
    md += "- method: " + test_method_name(summary.method) + "\n";
    md += "- impact gap threshold: " + format_double(summary.impact_gap_threshold) + "\n";
    md += "- per-cell minimum: " + std::to_string(summary.per_cell_minimum) + "\n";
    md += "- multiplicity adjustment: " + summary.multiplicity + "\n\n";

    md += "## Data provenance\n\n";
    md += "- rows ingested: " + std::to_string(summary.ingested_rows) + "\n";
    md += "- rows quarantined at ingest: " + std::to_string(summary.quarantined_rows) + "\n";
    for (const auto& [reason, count] : summary.quarantine_reasons) {
        md += "  - " + reason + ": " + std::to_string(count) + "\n";
    }
    md += "- records used in demographic analyses: " + std::to_string(summary.records_used) +
          "\n";
    md += "- records excluded from demographic analyses: " +
          std::to_string(summary.records_excluded) + "\n\n";

    md += "## Exclusion ledger\n\n";
    if (summary.exclusions.entries.empty()) {
        md += "No records were excluded.\n\n";
    } else {
        md += "| applicant_id | job_category | reason |\n|---|---|---|\n";
        for (const auto& e : summary.exclusions.entries) {
            md += "| " + e.applicant_id + " | " + e.job_category + " | " + e.reason + " |\n";
        }
        md += "\n";
    }

    for (const auto& cat : summary.categories) render_category(md, cat);

    if (summary.test_data) {
        md += "## Test data\n\n";
        md += "- why historical data was not used alone: " + summary.test_data->trigger + "\n";
        md += "- generation method: " + summary.test_data->method + "\n";
        md += "- seed: " + std::to_string(summary.test_data->seed) + "\n";
        md += "- n: " + std::to_string(summary.test_data->n) + "\n\n";
        if (summary.test_data_audit) render_category(md, *summary.test_data_audit);
    }

    if (!summary.notes.empty()) {
        md += "## Notes\n\n";
        for (const auto& note : summary.notes) md += "- " + note + "\n";
    }
    return md;
}

}  // namespace audit::ll144
