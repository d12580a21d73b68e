#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "audit/auditor.hpp"
#include "audit/evidence.hpp"
#include "audit/ll144.hpp"
#include "audit/remote.hpp"
#include "audit/synthetic.hpp"

namespace audit {

// Parsed "run" configuration: a model source, a collection plan, and an
// audit spec. Unknown keys are rejected; silent misconfiguration is an
// audit-integrity hazard.
struct RunPlan {
    std::shared_ptr<const BlackBoxModel> model;
    std::optional<SyntheticModelSpec> synthetic;  // set when the model is synthetic
    SamplingStrategy strategy;
    std::size_t n = 0;
    std::uint64_t budget = 0;
    AuditSpec audit;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string report_basename = "audit_report";
};

struct PowerGridPoint {
    double p1 = 0.5;
    double p2 = 0.5;
    std::size_t n_per_group = 100;
    std::size_t trials = 1000;
};

struct PowerPlan {
    AuditSpec audit;
    std::vector<PowerGridPoint> grid;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string report_basename = "power_table";
};

struct Ll144Plan {
    ll144::Ll144Config config;
    std::shared_ptr<const BlackBoxModel> model;  // may be null
    std::string report_basename = "bias_audit_summary";
};

RunPlan parse_run_config(const Json& config, bool strict);
PowerPlan parse_power_config(const Json& config, bool strict);
Ll144Plan parse_ll144_config(const Json& config, bool strict);

// Shared sub-parsers (also used by tests).
DistributionSpec parse_distribution(const Json& j, bool strict);
ComplianceCriterion parse_criterion(const Json& j, bool strict);
SyntheticModelSpec parse_synthetic_spec(const Json& j, bool strict);
EndpointDescriptor parse_endpoint(const Json& j, bool strict);

// FNV-1a digest of the raw config bytes; embedded in every report.
std::string config_digest(const std::string& raw_bytes);

Json load_json_file(const std::string& path);
std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace audit
