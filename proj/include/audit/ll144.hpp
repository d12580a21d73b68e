#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "audit/auditor.hpp"
#include "audit/criteria.hpp"
#include "audit/evidence.hpp"
#include "audit/model.hpp"

namespace audit::ll144 {

enum class DemographicsSource { SelfReported, Imputed, Inferred, Unknown };

std::string demographics_source_name(DemographicsSource s);

inline constexpr const char* kUnknownCategory = "UNKNOWN";

struct HistoricalRecord {
    std::string applicant_id;
    std::string job_category;
    std::string race_ethnicity;  // kUnknownCategory when not collected
    std::string sex;
    std::optional<bool> selected;
    std::optional<double> score;  // in [0, 1]
    DemographicsSource demographics_source = DemographicsSource::Unknown;
};

// --- Ingestion ------------------------------------------------------------------

struct QuarantinedRow {
    std::size_t row_number = 0;  // 1-based, counting the header as row 1
    std::string reason;
};

struct IngestReport {
    std::size_t data_rows = 0;  // rows after the header
    std::vector<QuarantinedRow> quarantined;
    std::map<std::string, std::size_t> reason_counts;
};

// Strict CSV with the exact header
//   applicant_id,job_category,race_ethnicity,sex,demographics_source,selected,score
// Malformed rows are quarantined with row numbers; missing or renamed columns
// refuse the whole file.
std::pair<std::vector<HistoricalRecord>, IngestReport> ingest(std::istream& in);
std::pair<std::vector<HistoricalRecord>, IngestReport> ingest_file(const std::string& path);

// --- Imputed-data exclusion -------------------------------------------------------

struct ExclusionEntry {
    std::string applicant_id;
    std::string job_category;
    std::string reason;
};

struct ExclusionLedger {
    std::vector<ExclusionEntry> entries;
};

// Removes records whose demographics are imputed, inferred, of unknown
// provenance, or simply missing from every demographic analysis. Excluded
// records stay in the totals; the ledger flows verbatim into the summary.
std::pair<std::vector<HistoricalRecord>, ExclusionLedger> apply_exclusions(
    const std::vector<HistoricalRecord>& records);

// --- Configuration ------------------------------------------------------------------

struct Ll144Config {
    // Required: the selection-rate gap threshold the statistical tests use.
    // The rules cite no numeric standard, so the toolkit refuses to invent one.
    double impact_gap_threshold = 0.0;
    // Required: LL144's "statistically significant" does not pick a null;
    // the auditor must.
    std::optional<Presumption> presumption;
    double zeta = 0.05;
    TestMethod method = TestMethod::ExactBinomialBoundary;
    // Cells below this count are marked insufficient and trigger the
    // test-data path when it is allowed. Default ties to the z-test guard.
    long per_cell_minimum = 30;
    bool allow_test_data = false;
    std::size_t test_data_n = 0;
    std::size_t bootstrap_resamples = 2000;
    std::uint64_t seed = 0;
    std::string audit_date;  // ISO date; pinned by config for reproducibility
    // Declared category domains; derived from the data when left empty.
    std::vector<std::string> race_categories;
    std::vector<std::string> sex_categories;
    std::string multiplicity = "bonferroni";  // bonferroni | benjamini_hochberg | none

    void validate() const;
};

// --- Test data -----------------------------------------------------------------------

struct GenerationDisclosure {
    std::string method;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::string trigger;  // why historical data was not sufficient
};

struct TestDataResult {
    Evidence evidence;
    std::vector<OutcomeRow> rows;
    GenerationDisclosure disclosure;
};

// Stratified synthetic applicants covering every declared demographic cell,
// queried through the live model. Refuses when the usable historical data
// already meets the per-cell minimum everywhere (the law prefers historical
// data) and when no model is available to query.
TestDataResult generate_test_data(const BlackBoxModel& model, const Ll144Config& config,
                                  const std::vector<HistoricalRecord>& usable, std::size_t n,
                                  std::uint64_t seed);

// --- The audit -------------------------------------------------------------------------

struct CellFlag {
    std::string table;
    std::string cell;
    long count = 0;
};

struct CategoryTest {
    std::string axis;
    std::string metric;  // "selection_rate" or "scoring_rate"
    std::string high_cell;
    std::string low_cell;
    AuditOutcome outcome;
    std::optional<double> adjusted_p;
    std::optional<bool> adjusted_reject;
};

struct CellInterval {
    std::string table;
    std::string cell;
    double lo = 0.0;
    double hi = 0.0;
};

struct CategoryAudit {
    std::string job_category;
    std::size_t used = 0;
    std::size_t excluded = 0;
    std::vector<ImpactTable> tables;
    std::vector<CellFlag> insufficient_cells;
    std::vector<CategoryTest> tests;
    std::vector<CellInterval> selection_rate_intervals;
    std::vector<std::string> notes;
};

struct BiasAuditSummary {
    std::string schema_version = "1";
    std::string audit_date;
    std::string model_identity;  // audited object, or "historical records only"
    double impact_gap_threshold = 0.0;
    Presumption presumption = Presumption::Compliance;
    double zeta = 0.05;
    TestMethod method = TestMethod::ExactBinomialBoundary;
    long per_cell_minimum = 30;
    std::string multiplicity;

    std::size_t ingested_rows = 0;
    std::size_t quarantined_rows = 0;
    std::map<std::string, std::size_t> quarantine_reasons;
    std::size_t records_used = 0;
    std::size_t records_excluded = 0;
    ExclusionLedger exclusions;

    std::vector<CategoryAudit> categories;
    std::optional<GenerationDisclosure> test_data;
    std::optional<CategoryAudit> test_data_audit;
    std::vector<std::string> notes;
};

// Computes the mandated metric family, attaches calibrated test outcomes and
// bootstrap intervals, and assembles the disclosure sections. `model` may be
// null: insufficient cells are then marked rather than backfilled.
BiasAuditSummary run_bias_audit(const std::vector<HistoricalRecord>& records,
                                const IngestReport& ingest_report, const Ll144Config& config,
                                const BlackBoxModel* model);

Json summary_to_json(const BiasAuditSummary& summary);
std::string summary_to_markdown(const BiasAuditSummary& summary);

}  // namespace audit::ll144
