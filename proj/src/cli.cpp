#include "audit/cli.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "audit/config.hpp"
#include "audit/power.hpp"

namespace audit::cli {

namespace {

namespace fs = std::filesystem;

std::string out_path(const CommonOptions& options, const std::string& name) {
    fs::create_directories(options.out_dir);
    return (fs::path(options.out_dir) / name).string();
}

int config_error(const std::string& what) {
    std::cerr << "error: " << what << "\n";
    return 2;
}

int refusal(const std::string& what) {
    std::cerr << "audit refused: " << what << "\n";
    return 1;
}

}  // namespace

bool format_enabled(const CommonOptions& options, const std::string& name) {
    std::size_t pos = 0;
    while (pos <= options.format.size()) {
        const std::size_t comma = options.format.find(',', pos);
        const std::string token = options.format.substr(
            pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (token == name) return true;
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return false;
}

int cmd_run(const std::string& config_path, const CommonOptions& options) {
    std::string raw;
    RunPlan plan;
    try {
        raw = read_file(config_path);
        plan = parse_run_config(Json::parse(raw), options.strict);
    } catch (const std::exception& e) {
        return config_error(e.what());
    }
    if (options.seed_override) {
        plan.seed = *options.seed_override;
        plan.audit.seed = plan.seed;
    }
    if (options.workers_override) plan.workers = *options.workers_override;
    const std::string digest = config_digest(raw);

    try {
        QueryBudget budget(plan.budget);
        const Evidence evidence =
            collect(*plan.model, plan.strategy, plan.n, budget, plan.seed, plan.workers);
        const RunResult result = run_audit(evidence, plan.audit);
        if (!result.completed()) {
            std::cerr << "audit refused: " << result.refusal->reason << "\n"
                      << "recommended sample size per group: "
                      << result.refusal->recommended_n_per_group << "\n";
            return 1;
        }

        Json report;
        report["schema_version"] = "1";
        report["kind"] = "audit-report";
        report["config_hash"] = digest;
        report["seed"] = plan.seed;
        report["outcome"] = outcome_to_json(*result.outcome);
        if (format_enabled(options, "json")) {
            write_file_atomic(out_path(options, plan.report_basename + ".json"),
                              report.dump(2) + "\n");
        }
        if (format_enabled(options, "markdown")) {
            std::string md = outcome_to_markdown(*result.outcome);
            md += "\n---\nconfig hash: " + digest + "\n";
            write_file_atomic(out_path(options, plan.report_basename + ".md"), md);
        }
        {
            std::ostringstream ev;
            save_evidence(evidence, ev);
            write_file_atomic(out_path(options, plan.report_basename + ".evidence.jsonl"),
                              ev.str());
        }
        std::cout << "audit completed: " << decision_name(result.outcome->decision) << " ("
                  << result.outcome->disclosure.statement << ")\n";
        return 0;
    } catch (const TransportError& e) {
        return config_error(std::string("transport: ") + e.what());
    } catch (const BudgetError& e) {
        return refusal(e.what());
    } catch (const EstimationError& e) {
        return refusal(e.what());
    } catch (const AuditError& e) {
        // Schema mismatches, non-conformant outputs, bad configuration.
        return config_error(e.what());
    }
}

int cmd_power(const std::string& config_path, const CommonOptions& options) {
    std::string raw;
    PowerPlan plan;
    try {
        raw = read_file(config_path);
        plan = parse_power_config(Json::parse(raw), options.strict);
    } catch (const std::exception& e) {
        return config_error(e.what());
    }
    if (options.seed_override) {
        plan.seed = *options.seed_override;
        plan.audit.seed = plan.seed;
    }
    if (options.workers_override) plan.workers = *options.workers_override;
    const std::string digest = config_digest(raw);

    const auto* parity = std::get_if<StatisticalParityCriterion>(&plan.audit.criterion);
    try {
        Json rows = Json::array();
        std::string csv =
            "p1,p2,gap,ground_truth_g,n_per_group,trials,fpr_hat,fpr_se,tpr_hat,tpr_se\n";
        for (std::size_t i = 0; i < plan.grid.size(); ++i) {
            const auto& point = plan.grid[i];
            const auto spec =
                make_group_threshold_spec(point.p1, point.p2, parity->eta);
            const PowerEstimate est = estimate_operating_characteristics(
                plan.audit, spec, point.n_per_group, point.trials,
                derive_seed(plan.seed, i), plan.workers);
            Json row;
            row["p1"] = point.p1;
            row["p2"] = point.p2;
            row["gap"] = std::abs(point.p1 - point.p2);
            row["ground_truth_g"] = spec.ground_truth_g;
            row["n_per_group"] = point.n_per_group;
            row["trials"] = point.trials;
            row["fpr_hat"] = est.fpr_hat ? Json(*est.fpr_hat) : Json(nullptr);
            row["fpr_se"] = est.fpr_se ? Json(*est.fpr_se) : Json(nullptr);
            row["tpr_hat"] = est.tpr_hat ? Json(*est.tpr_hat) : Json(nullptr);
            row["tpr_se"] = est.tpr_se ? Json(*est.tpr_se) : Json(nullptr);
            rows.push_back(row);
            auto opt = [](const std::optional<double>& v) {
                return v ? format_double(*v) : std::string();
            };
            csv += format_double(point.p1) + "," + format_double(point.p2) + "," +
                   format_double(std::abs(point.p1 - point.p2)) + "," +
                   format_double(spec.ground_truth_g) + "," +
                   std::to_string(point.n_per_group) + "," + std::to_string(point.trials) +
                   "," + opt(est.fpr_hat) + "," + opt(est.fpr_se) + "," + opt(est.tpr_hat) +
                   "," + opt(est.tpr_se) + "\n";
        }
        Json table;
        table["schema_version"] = "1";
        table["kind"] = "operating-characteristics";
        table["config_hash"] = digest;
        table["seed"] = plan.seed;
        table["rows"] = std::move(rows);
        if (format_enabled(options, "json")) {
            write_file_atomic(out_path(options, plan.report_basename + ".json"),
                              table.dump(2) + "\n");
        }
        if (format_enabled(options, "csv")) {
            write_file_atomic(out_path(options, plan.report_basename + ".csv"), csv);
        }
        std::cout << "power table written (" << plan.grid.size() << " grid points)\n";
        return 0;
    } catch (const EstimationError& e) {
        return refusal(e.what());
    } catch (const AuditError& e) {
        return config_error(e.what());
    }
}

int cmd_ll144(const std::string& data_path, const std::string& config_path,
              const CommonOptions& options) {
    std::string raw;
    Ll144Plan plan;
    try {
        raw = read_file(config_path);
        plan = parse_ll144_config(Json::parse(raw), options.strict);
    } catch (const std::exception& e) {
        return config_error(e.what());
    }
    if (options.seed_override) plan.config.seed = *options.seed_override;
    const std::string digest = config_digest(raw);

    try {
        auto [records, report] = ll144::ingest_file(data_path);
        if (records.empty()) {
            return refusal("no usable records in '" + data_path + "'");
        }
        const ll144::BiasAuditSummary summary =
            ll144::run_bias_audit(records, report, plan.config, plan.model.get());
        Json j = ll144::summary_to_json(summary);
        j["config_hash"] = digest;
        if (format_enabled(options, "json")) {
            write_file_atomic(out_path(options, plan.report_basename + ".json"),
                              j.dump(2) + "\n");
        }
        if (format_enabled(options, "markdown")) {
            std::string md = ll144::summary_to_markdown(summary);
            md += "\n---\nconfig hash: " + digest + "\n";
            write_file_atomic(out_path(options, plan.report_basename + ".md"), md);
        }
        if (format_enabled(options, "csv")) {
            std::string csv;
            for (const auto& cat : summary.categories) {
                csv += "# job_category: " + cat.job_category + "\n";
                csv += impact_tables_to_csv(cat.tables);
            }
            write_file_atomic(out_path(options, plan.report_basename + ".csv"), csv);
        }
        std::cout << "bias audit summary written (" << summary.categories.size()
                  << " job categories, " << summary.records_used << " records used)\n";
        return 0;
    } catch (const EstimationError& e) {
        return refusal(e.what());
    } catch (const AuditError& e) {
        return config_error(e.what());
    }
}

int cmd_simulate(const CommonOptions& options, std::size_t trials) {
    const std::uint64_t seed = options.seed_override.value_or(20240901ULL);
    const int workers = options.workers_override.value_or(1);
    try {
        struct Point {
            double p1, p2;
        };
        const Point points[] = {{0.5, 0.5}, {0.55, 0.45}, {0.65, 0.35}, {0.8, 0.5}};
        const double eta = 0.1, zeta = 0.05;
        std::string csv = "p1,p2,ground_truth_g,n_per_group,trials,rate,se,kind\n";
        std::cout << "synthetic-zoo calibration (eta=" << eta << ", zeta=" << zeta
                  << ", trials=" << trials << ")\n";
        for (std::size_t i = 0; i < std::size(points); ++i) {
            const auto spec = make_group_threshold_spec(points[i].p1, points[i].p2, eta);
            AuditSpec audit;
            StatisticalParityCriterion parity;
            parity.eta = eta;
            audit.criterion = parity;
            audit.presumption = Presumption::Compliance;
            audit.zeta = zeta;
            audit.method = TestMethod::ExactBinomialBoundary;
            audit.assumptions.model_family = "binary classifier, independent outputs";
            const PowerEstimate est = estimate_operating_characteristics(
                audit, spec, 200, trials, derive_seed(seed, i), workers);
            const bool h0 = est.fpr_hat.has_value();
            const double rate = h0 ? *est.fpr_hat : *est.tpr_hat;
            const double se = h0 ? *est.fpr_se : *est.tpr_se;
            std::cout << "  group_threshold(" << points[i].p1 << ", " << points[i].p2
                      << "): " << (h0 ? "FPR" : "TPR") << " = " << rate << " +/- " << se
                      << "\n";
            csv += format_double(points[i].p1) + "," + format_double(points[i].p2) + "," +
                   format_double(spec.ground_truth_g) + ",200," + std::to_string(trials) +
                   "," + format_double(rate) + "," + format_double(se) + "," +
                   (h0 ? "fpr" : "tpr") + "\n";
        }
        if (format_enabled(options, "csv")) {
            write_file_atomic(out_path(options, "simulate_calibration.csv"), csv);
        }
        return 0;
    } catch (const EstimationError& e) {
        return refusal(e.what());
    } catch (const AuditError& e) {
        return config_error(e.what());
    }
}

}  // namespace audit::cli
