#include "audit/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace audit {

namespace {

// Strict mode rejects keys the schema does not know, naming the offender.
void check_keys(const Json& j, std::initializer_list<const char*> allowed,
                const std::string& context, bool strict) {
    if (!strict) return;
    if (!j.is_object()) throw ConfigError(context + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (const char* a : allowed) {
            if (key == a) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError("unknown key '" + key + "' in " + context +
                              " (strict mode rejects unknown keys)");
        }
    }
}

double require_number(const Json& j, const char* key, const std::string& context) {
    if (!j.contains(key)) throw ConfigError(context + " is missing required key '" + key + "'");
    if (!j.at(key).is_number()) throw ConfigError(context + "." + key + " must be a number");
    return j.at(key).get<double>();
}

std::string require_string(const Json& j, const char* key, const std::string& context) {
    if (!j.contains(key)) throw ConfigError(context + " is missing required key '" + key + "'");
    if (!j.at(key).is_string()) throw ConfigError(context + "." + key + " must be a string");
    return j.at(key).get<std::string>();
}

Presumption parse_presumption(const std::string& name) {
    if (name == "compliance") return Presumption::Compliance;
    if (name == "non_compliance") return Presumption::NonCompliance;
    throw ConfigError("presumption must be 'compliance' or 'non_compliance', got '" + name +
                      "'");
}

}  // namespace

DistributionSpec parse_distribution(const Json& j, bool strict) {
    check_keys(j, {"features", "group"}, "distribution", strict);
    DistributionSpec spec;
    if (j.contains("features")) {
        for (const auto& [name, fj] : j.at("features").items()) {
            const std::string kind = require_string(fj, "kind", "distribution feature");
            if (kind == "uniform") {
                check_keys(fj, {"kind", "lo", "hi"}, "uniform feature", strict);
                spec.features[name] = UniformDist{require_number(fj, "lo", name),
                                                  require_number(fj, "hi", name)};
            } else if (kind == "point") {
                check_keys(fj, {"kind", "value"}, "point feature", strict);
                spec.features[name] = PointDist{require_number(fj, "value", name)};
            } else if (kind == "categorical") {
                check_keys(fj, {"kind", "values", "probs"}, "categorical feature", strict);
                CategoricalDist c;
                c.values = fj.at("values").get<std::vector<std::string>>();
                if (fj.contains("probs")) c.probs = fj.at("probs").get<std::vector<double>>();
                spec.features[name] = std::move(c);
            } else {
                throw ConfigError("distribution feature kind must be uniform, point, or "
                                  "categorical, got '" + kind + "'");
            }
        }
    }
    if (j.contains("group")) {
        check_keys(j.at("group"), {"values", "probs"}, "group distribution", strict);
        spec.group.values = j.at("group").at("values").get<std::vector<std::string>>();
        if (j.at("group").contains("probs")) {
            spec.group.probs = j.at("group").at("probs").get<std::vector<double>>();
        }
    }
    spec.validate();
    return spec;
}

ComplianceCriterion parse_criterion(const Json& j, bool strict) {
    const std::string kind = require_string(j, "kind", "criterion");
    if (kind == "statistical_parity") {
        check_keys(j, {"kind", "group1", "group2", "eta"}, "statistical_parity", strict);
        StatisticalParityCriterion c;
        c.group1 = require_string(j, "group1", "statistical_parity");
        c.group2 = require_string(j, "group2", "statistical_parity");
        c.eta = require_number(j, "eta", "statistical_parity");
        return c;
    }
    if (kind == "max_loss") {
        check_keys(j, {"kind", "loss", "feature", "eta", "query_set", "query_grid"},
                   "max_loss", strict);
        MaxLossCriterion c;
        const std::string loss = require_string(j, "loss", "max_loss");
        if (loss == "zero") {
            c.loss = LossKind::Zero;
        } else if (loss == "output_value") {
            c.loss = LossKind::OutputValue;
        } else if (loss == "abs_diff_feature") {
            c.loss = LossKind::AbsDiffFeature;
            c.feature = require_string(j, "feature", "max_loss");
        } else {
            throw ConfigError("max_loss loss must be zero, output_value, or abs_diff_feature");
        }
        c.eta = require_number(j, "eta", "max_loss");
        if (j.contains("query_set")) {
            for (const auto& ij : j.at("query_set")) {
                c.query_set.push_back(input_from_json(ij));
            }
        } else if (j.contains("query_grid")) {
            const Json& g = j.at("query_grid");
            check_keys(g, {"feature", "points", "lo", "hi"}, "query_grid", strict);
            const std::string feature = require_string(g, "feature", "query_grid");
            const long points = static_cast<long>(require_number(g, "points", "query_grid"));
            const double lo = require_number(g, "lo", "query_grid");
            const double hi = require_number(g, "hi", "query_grid");
            if (points < 1) throw ConfigError("query_grid.points must be positive");
            for (long i = 0; i < points; ++i) {
                ModelInput input;
                input.features[feature] =
                    points == 1 ? lo : lo + (hi - lo) * i / static_cast<double>(points - 1);
                c.query_set.push_back(std::move(input));
            }
        } else {
            throw ConfigError("max_loss needs query_set or query_grid");
        }
        return c;
    }
    if (kind == "individual_fairness") {
        check_keys(j, {"kind", "lipschitz"}, "individual_fairness", strict);
        IndividualFairnessCriterion c;
        c.lipschitz = require_number(j, "lipschitz", "individual_fairness");
        return c;
    }
    if (kind == "impact_metrics") {
        check_keys(j, {"kind", "axes", "eta"}, "impact_metrics", strict);
        ImpactMetricsCriterion c;
        if (j.contains("axes")) c.axes = j.at("axes").get<std::vector<std::string>>();
        if (j.contains("eta")) c.eta = j.at("eta").get<double>();
        return c;
    }
    throw ConfigError("criterion kind must be statistical_parity, max_loss, "
                      "individual_fairness, or impact_metrics; got '" + kind + "'");
}

SyntheticModelSpec parse_synthetic_spec(const Json& j, bool strict) {
    const std::string kind = require_string(j, "kind", "synthetic model");
    if (kind == "group_threshold") {
        check_keys(j, {"kind", "p1", "p2", "eta"}, "group_threshold", strict);
        return make_group_threshold_spec(require_number(j, "p1", "group_threshold"),
                                         require_number(j, "p2", "group_threshold"),
                                         require_number(j, "eta", "group_threshold"));
    }
    if (kind == "score_function") {
        check_keys(j, {"kind", "knots_x", "knots_y", "grid_step", "lipschitz_bound"},
                   "score_function", strict);
        ScoreFunctionSpec fn;
        fn.knot_x = j.at("knots_x").get<std::vector<double>>();
        fn.knot_y = j.at("knots_y").get<std::vector<double>>();
        if (j.contains("grid_step")) fn.grid_step = j.at("grid_step").get<double>();
        return make_score_function_spec(std::move(fn),
                                        require_number(j, "lipschitz_bound", "score_function"));
    }
    if (kind == "loss_plant") {
        check_keys(j, {"kind", "planted_x", "planted_loss", "baseline_loss", "eta"},
                   "loss_plant", strict);
        return make_loss_plant_spec(require_number(j, "planted_x", "loss_plant"),
                                    require_number(j, "planted_loss", "loss_plant"),
                                    require_number(j, "baseline_loss", "loss_plant"),
                                    require_number(j, "eta", "loss_plant"));
    }
    throw ConfigError("synthetic model kind must be group_threshold, score_function, or "
                      "loss_plant; got '" + kind + "'");
}

namespace {

InputSchema parse_schema(const Json& j, bool strict) {
    check_keys(j, {"features", "groups"}, "schema", strict);
    InputSchema schema;
    if (j.contains("features")) {
        for (const auto& fj : j.at("features")) {
            check_keys(fj, {"name", "kind", "lo", "hi", "categories"}, "schema feature",
                       strict);
            FeatureSpec f;
            f.name = require_string(fj, "name", "schema feature");
            const std::string kind = require_string(fj, "kind", "schema feature");
            if (kind == "numeric") {
                f.kind = FeatureKind::Numeric;
                if (fj.contains("lo")) f.lo = fj.at("lo").get<double>();
                if (fj.contains("hi")) f.hi = fj.at("hi").get<double>();
            } else if (kind == "categorical") {
                f.kind = FeatureKind::Categorical;
                f.categories = fj.at("categories").get<std::vector<std::string>>();
            } else {
                throw ConfigError("schema feature kind must be numeric or categorical");
            }
            schema.features.push_back(std::move(f));
        }
    }
    if (j.contains("groups")) {
        schema.group_set = j.at("groups").get<std::vector<std::string>>();
    }
    return schema;
}

OutputSpace parse_output_space(const Json& j, bool strict) {
    check_keys(j, {"kind", "labels", "lo", "hi", "step"}, "output_space", strict);
    const std::string kind = require_string(j, "kind", "output_space");
    if (kind == "binary") return OutputSpace::binary();
    if (kind == "categorical") {
        return OutputSpace::categorical(j.at("labels").get<std::vector<std::string>>());
    }
    if (kind == "score_grid") {
        return OutputSpace::score_grid(require_number(j, "lo", "output_space"),
                                       require_number(j, "hi", "output_space"),
                                       j.contains("step") ? j.at("step").get<double>() : 0.0);
    }
    throw ConfigError("output_space kind must be binary, categorical, or score_grid");
}

}  // namespace

EndpointDescriptor parse_endpoint(const Json& j, bool strict) {
    check_keys(j,
               {"url", "timeout_ms", "max_batch", "bearer_token_env", "deterministic",
                "schema", "output_space", "name"},
               "remote endpoint", strict);
    EndpointDescriptor d;
    d.url = require_string(j, "url", "remote endpoint");
    if (j.contains("timeout_ms")) d.timeout_ms = j.at("timeout_ms").get<int>();
    if (j.contains("max_batch")) d.max_batch = j.at("max_batch").get<int>();
    if (j.contains("bearer_token_env")) {
        d.bearer_token_env = j.at("bearer_token_env").get<std::string>();
    }
    if (j.contains("deterministic")) d.deterministic = j.at("deterministic").get<bool>();
    if (j.contains("name")) d.name = j.at("name").get<std::string>();
    if (!j.contains("schema")) throw ConfigError("remote endpoint needs a declared schema");
    d.schema = parse_schema(j.at("schema"), strict);
    if (!j.contains("output_space")) {
        throw ConfigError("remote endpoint needs a declared output_space");
    }
    d.output_space = parse_output_space(j.at("output_space"), strict);
    return d;
}

namespace {

AuditSpec parse_audit_spec(const Json& j, bool strict) {
    check_keys(j,
               {"criterion", "presumption", "zeta", "method", "assumptions",
                "bootstrap_resamples"},
               "audit", strict);
    AuditSpec spec;
    if (!j.contains("criterion")) throw ConfigError("audit needs a criterion");
    spec.criterion = parse_criterion(j.at("criterion"), strict);
    spec.presumption = parse_presumption(require_string(j, "presumption", "audit"));
    spec.zeta = require_number(j, "zeta", "audit");
    spec.method = test_method_from_name(require_string(j, "method", "audit"));
    if (j.contains("assumptions")) {
        check_keys(j.at("assumptions"), {"input_distribution", "model_family"}, "assumptions",
                   strict);
        if (j.at("assumptions").contains("input_distribution")) {
            spec.assumptions.input_distribution =
                j.at("assumptions").at("input_distribution").get<std::string>();
        }
        if (j.at("assumptions").contains("model_family")) {
            spec.assumptions.model_family =
                j.at("assumptions").at("model_family").get<std::string>();
        }
    }
    if (j.contains("bootstrap_resamples")) {
        spec.bootstrap_resamples = j.at("bootstrap_resamples").get<std::size_t>();
    }
    spec.validate();
    return spec;
}

SamplingStrategy parse_strategy(const Json& j, const DistributionSpec& dist, bool strict) {
    const std::string kind = require_string(j, "kind", "strategy");
    if (kind == "iid") {
        check_keys(j, {"kind"}, "iid strategy", strict);
        return IidStrategy{dist};
    }
    if (kind == "stratified") {
        check_keys(j, {"kind", "quotas"}, "stratified strategy", strict);
        StratifiedStrategy s;
        s.dist = dist;
        if (!j.contains("quotas")) throw ConfigError("stratified strategy needs quotas");
        for (const auto& [group, count] : j.at("quotas").items()) {
            s.quotas.emplace_back(group, count.get<std::size_t>());
        }
        return s;
    }
    if (kind == "adaptive_pair_search") {
        check_keys(j, {"kind", "radius", "restarts", "min_separation"}, "adaptive strategy",
                   strict);
        AdaptivePairSearch s;
        s.dist = dist;
        if (j.contains("radius")) s.radius = j.at("radius").get<double>();
        if (j.contains("restarts")) s.restarts = j.at("restarts").get<std::size_t>();
        if (j.contains("min_separation")) {
            s.min_separation = j.at("min_separation").get<double>();
        }
        return s;
    }
    throw ConfigError("strategy kind must be iid, stratified, or adaptive_pair_search; got '" +
                      kind + "'");
}

std::shared_ptr<const BlackBoxModel> parse_model(const Json& j, bool strict,
                                                 std::optional<SyntheticModelSpec>* synthetic) {
    check_keys(j, {"synthetic", "remote"}, "model", strict);
    if (j.contains("synthetic") == j.contains("remote")) {
        throw ConfigError("model needs exactly one of 'synthetic' or 'remote'");
    }
    if (j.contains("synthetic")) {
        const auto spec = parse_synthetic_spec(j.at("synthetic"), strict);
        if (synthetic != nullptr) *synthetic = spec;
        return make_synthetic(spec);
    }
    return remote_model(parse_endpoint(j.at("remote"), strict));
}

}  // namespace

RunPlan parse_run_config(const Json& config, bool strict) {
    check_keys(config,
               {"schema_version", "seed", "workers", "model", "collection", "audit", "output"},
               "config", strict);
    RunPlan plan;
    if (config.contains("seed")) plan.seed = config.at("seed").get<std::uint64_t>();
    if (config.contains("workers")) plan.workers = config.at("workers").get<int>();
    if (!config.contains("model")) throw ConfigError("config needs a model");
    plan.model = parse_model(config.at("model"), strict, &plan.synthetic);
    if (!config.contains("collection")) throw ConfigError("config needs a collection plan");
    const Json& coll = config.at("collection");
    check_keys(coll, {"strategy", "n", "budget", "distribution"}, "collection", strict);
    plan.n = static_cast<std::size_t>(require_number(coll, "n", "collection"));
    plan.budget = coll.contains("budget")
                      ? coll.at("budget").get<std::uint64_t>()
                      : static_cast<std::uint64_t>(plan.n);
    DistributionSpec dist = coll.contains("distribution")
                                ? parse_distribution(coll.at("distribution"), strict)
                                : DistributionSpec::uniform_over(plan.model->input_schema());
    if (!coll.contains("strategy")) throw ConfigError("collection needs a strategy");
    plan.strategy = parse_strategy(coll.at("strategy"), dist, strict);
    if (!config.contains("audit")) throw ConfigError("config needs an audit block");
    plan.audit = parse_audit_spec(config.at("audit"), strict);
    plan.audit.seed = plan.seed;
    if (config.contains("output")) {
        check_keys(config.at("output"), {"report_basename"}, "output", strict);
        if (config.at("output").contains("report_basename")) {
            plan.report_basename =
                config.at("output").at("report_basename").get<std::string>();
        }
    }
    return plan;
}

PowerPlan parse_power_config(const Json& config, bool strict) {
    check_keys(config, {"schema_version", "seed", "workers", "audit", "grid", "output"},
               "power config", strict);
    PowerPlan plan;
    if (config.contains("seed")) plan.seed = config.at("seed").get<std::uint64_t>();
    if (config.contains("workers")) plan.workers = config.at("workers").get<int>();
    if (!config.contains("audit")) throw ConfigError("power config needs an audit block");
    plan.audit = parse_audit_spec(config.at("audit"), strict);
    plan.audit.seed = plan.seed;
    if (!std::holds_alternative<StatisticalParityCriterion>(plan.audit.criterion)) {
        throw ConfigError("power estimation needs a statistical_parity criterion");
    }
    if (!config.contains("grid")) throw ConfigError("power config needs a grid");
    for (const auto& gj : config.at("grid")) {
        check_keys(gj, {"p1", "p2", "n_per_group", "trials"}, "grid point", strict);
        PowerGridPoint point;
        point.p1 = require_number(gj, "p1", "grid point");
        point.p2 = require_number(gj, "p2", "grid point");
        point.n_per_group =
            static_cast<std::size_t>(require_number(gj, "n_per_group", "grid point"));
        point.trials = static_cast<std::size_t>(require_number(gj, "trials", "grid point"));
        plan.grid.push_back(point);
    }
    if (config.contains("output")) {
        check_keys(config.at("output"), {"report_basename"}, "output", strict);
        if (config.at("output").contains("report_basename")) {
            plan.report_basename =
                config.at("output").at("report_basename").get<std::string>();
        }
    }
    return plan;
}

Ll144Plan parse_ll144_config(const Json& config, bool strict) {
    check_keys(config,
               {"schema_version", "impact_gap_threshold", "presumption", "zeta", "method",
                "per_cell_minimum", "allow_test_data", "test_data_n", "bootstrap_resamples",
                "seed", "audit_date", "race_categories", "sex_categories", "multiplicity",
                "model", "output"},
               "ll144 config", strict);
    Ll144Plan plan;
    ll144::Ll144Config& c = plan.config;
    c.impact_gap_threshold = require_number(config, "impact_gap_threshold", "ll144 config");
    c.presumption = parse_presumption(require_string(config, "presumption", "ll144 config"));
    if (config.contains("zeta")) c.zeta = config.at("zeta").get<double>();
    if (config.contains("method")) {
        c.method = test_method_from_name(config.at("method").get<std::string>());
    }
    if (config.contains("per_cell_minimum")) {
        c.per_cell_minimum = config.at("per_cell_minimum").get<long>();
    }
    if (config.contains("allow_test_data")) {
        c.allow_test_data = config.at("allow_test_data").get<bool>();
    }
    if (config.contains("test_data_n")) {
        c.test_data_n = config.at("test_data_n").get<std::size_t>();
    }
    if (config.contains("bootstrap_resamples")) {
        c.bootstrap_resamples = config.at("bootstrap_resamples").get<std::size_t>();
    }
    if (config.contains("seed")) c.seed = config.at("seed").get<std::uint64_t>();
    c.audit_date = require_string(config, "audit_date", "ll144 config");
    if (config.contains("race_categories")) {
        c.race_categories = config.at("race_categories").get<std::vector<std::string>>();
    }
    if (config.contains("sex_categories")) {
        c.sex_categories = config.at("sex_categories").get<std::vector<std::string>>();
    }
    if (config.contains("multiplicity")) {
        c.multiplicity = config.at("multiplicity").get<std::string>();
    }
    c.validate();
    if (config.contains("model")) {
        plan.model = parse_model(config.at("model"), strict, nullptr);
    }
    if (config.contains("output")) {
        check_keys(config.at("output"), {"report_basename"}, "output", strict);
        if (config.at("output").contains("report_basename")) {
            plan.report_basename =
                config.at("output").at("report_basename").get<std::string>();
        }
    }
    return plan;
}

std::string config_digest(const std::string& raw_bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : raw_bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json load_json_file(const std::string& path) {
    const std::string raw = read_file(path);
    try {
        return Json::parse(raw);
    } catch (const std::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write to '" + tmp + "'");
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace audit
