#include "audit/synthetic.hpp"

#include <cmath>

#include "audit/rng.hpp"

namespace audit {

ScoreFunctionSpec ScoreFunctionSpec::linear(double slope, double intercept) {
    ScoreFunctionSpec s;
    s.knot_x = {0.0, 1.0};
    s.knot_y = {intercept, intercept + slope};
    return s;
}

double ScoreFunctionSpec::eval(double x) const {
    if (knot_x.size() < 2 || knot_x.size() != knot_y.size()) {
        throw ConfigError("score function needs matching knot_x/knot_y with >= 2 knots");
    }
    if (x <= knot_x.front()) return knot_y.front();
    if (x >= knot_x.back()) return knot_y.back();
    for (std::size_t i = 1; i < knot_x.size(); ++i) {
        if (x <= knot_x[i]) {
            const double t = (x - knot_x[i - 1]) / (knot_x[i] - knot_x[i - 1]);
            return knot_y[i - 1] + t * (knot_y[i] - knot_y[i - 1]);
        }
    }
    return knot_y.back();
}

double ScoreFunctionSpec::max_abs_slope() const {
    double best = 0.0;
    for (std::size_t i = 1; i < knot_x.size(); ++i) {
        const double dx = knot_x[i] - knot_x[i - 1];
        if (dx <= 0.0) throw ConfigError("score function knots must be strictly increasing");
        best = std::max(best, std::abs((knot_y[i] - knot_y[i - 1]) / dx));
    }
    return best;
}

double expected_ground_truth(const SyntheticModelSpec& spec) {
    if (const auto* gt = std::get_if<GroupThresholdSpec>(&spec.kind)) {
        return std::abs(gt->p1 - gt->p2) - spec.criterion_threshold;
    }
    if (const auto* sf = std::get_if<ScoreFunctionSpec>(&spec.kind)) {
        return sf->max_abs_slope() - spec.criterion_threshold;
    }
    const auto& lp = std::get<LossPlantSpec>(spec.kind);
    return lp.planted_loss - spec.criterion_threshold;
}

namespace {

std::string default_name(const SyntheticModelSpec& spec) {
    if (const auto* gt = std::get_if<GroupThresholdSpec>(&spec.kind)) {
        return "synthetic:group_threshold(p1=" + format_double(gt->p1) +
               ",p2=" + format_double(gt->p2) + ")";
    }
    if (const auto* sf = std::get_if<ScoreFunctionSpec>(&spec.kind)) {
        std::string s = "synthetic:score_function(knots=";
        for (std::size_t i = 0; i < sf->knot_x.size(); ++i) {
            if (i) s += ";";
            s += format_double(sf->knot_x[i]) + ":" + format_double(sf->knot_y[i]);
        }
        if (sf->grid_step > 0.0) s += ",grid_step=" + format_double(sf->grid_step);
        return s + ")";
    }
    const auto& lp = std::get<LossPlantSpec>(spec.kind);
    return "synthetic:loss_plant(x=" + format_double(lp.planted_x) +
           ",loss=" + format_double(lp.planted_loss) + ")";
}

class GroupThresholdModel final : public BlackBoxModel {
public:
    GroupThresholdModel(GroupThresholdSpec spec, std::string name) : spec_(spec), name_(std::move(name)) {
        schema_.group_set = {spec_.group1, spec_.group2};
        space_ = OutputSpace::binary();
    }

    const InputSchema& input_schema() const override { return schema_; }
    const OutputSpace& output_space() const override { return space_; }
    bool stochastic() const override { return true; }
    std::string identity() const override { return name_; }

    ModelOutput query(const ModelInput& input, std::uint64_t seed) const override {
        schema_.validate(input);
        const double p = (*input.group == spec_.group1) ? spec_.p1 : spec_.p2;
        // The draw is a pure function of (input, seed).
        Rng rng(derive_seed(seed, input_hash(input)));
        return ModelOutput::of(rng.next_double() < p ? 1.0 : 0.0);
    }

private:
    GroupThresholdSpec spec_;
    std::string name_;
    InputSchema schema_;
    OutputSpace space_;
};

class ScoreFunctionModel final : public BlackBoxModel {
public:
    ScoreFunctionModel(ScoreFunctionSpec spec, std::string name) : spec_(std::move(spec)), name_(std::move(name)) {
        schema_.features = {FeatureSpec{"x", FeatureKind::Numeric, 0.0, 1.0, {}}};
        double lo = spec_.knot_y.front(), hi = lo;
        for (double y : spec_.knot_y) {
            lo = std::min(lo, y);
            hi = std::max(hi, y);
        }
        space_ = OutputSpace::score_grid(lo, hi, spec_.grid_step);
    }

    const InputSchema& input_schema() const override { return schema_; }
    const OutputSpace& output_space() const override { return space_; }
    bool stochastic() const override { return false; }
    std::string identity() const override { return name_; }

    ModelOutput query(const ModelInput& input, std::uint64_t /*seed*/) const override {
        schema_.validate(input);
        const double x = std::get<double>(input.features.at("x"));
        return ModelOutput::of(space_.snap(spec_.eval(x)));
    }

private:
    ScoreFunctionSpec spec_;
    std::string name_;
    InputSchema schema_;
    OutputSpace space_;
};

class LossPlantModel final : public BlackBoxModel {
public:
    LossPlantModel(LossPlantSpec spec, std::string name) : spec_(spec), name_(std::move(name)) {
        schema_.features = {FeatureSpec{"x", FeatureKind::Numeric, 0.0, 1.0, {}}};
        space_ = OutputSpace::score_grid(0.0, 1.0, 0.0);
    }

    const InputSchema& input_schema() const override { return schema_; }
    const OutputSpace& output_space() const override { return space_; }
    bool stochastic() const override { return false; }
    std::string identity() const override { return name_; }

    ModelOutput query(const ModelInput& input, std::uint64_t /*seed*/) const override {
        schema_.validate(input);
        const double x = std::get<double>(input.features.at("x"));
        return ModelOutput::of(x == spec_.planted_x ? spec_.planted_loss : spec_.baseline_loss);
    }

private:
    LossPlantSpec spec_;
    std::string name_;
    InputSchema schema_;
    OutputSpace space_;
};

void validate_spec(const SyntheticModelSpec& spec) {
    if (const auto* gt = std::get_if<GroupThresholdSpec>(&spec.kind)) {
        if (gt->p1 < 0.0 || gt->p1 > 1.0 || gt->p2 < 0.0 || gt->p2 > 1.0) {
            throw ConfigError("group threshold probabilities must lie in [0,1]");
        }
        if (gt->group1 == gt->group2) throw ConfigError("group labels must differ");
    } else if (const auto* lp = std::get_if<LossPlantSpec>(&spec.kind)) {
        if (!(lp->baseline_loss < lp->planted_loss)) {
            throw ConfigError("loss plant requires baseline_loss < planted_loss");
        }
        if (lp->planted_loss < 0.0 || lp->planted_loss > 1.0 || lp->baseline_loss < 0.0) {
            throw ConfigError("loss plant values must lie in [0,1]");
        }
        if (lp->planted_x < 0.0 || lp->planted_x > 1.0) {
            throw ConfigError("loss plant location must lie in [0,1]");
        }
    }
    if (!(spec.criterion_threshold > 0.0)) {
        throw ConfigError("criterion threshold must be positive");
    }
    const double expected = expected_ground_truth(spec);
    if (std::abs(expected - spec.ground_truth_g) > 1e-12) {
        throw ConfigError("declared ground_truth_g " + format_double(spec.ground_truth_g) +
                          " is inconsistent with parameters (expected " +
                          format_double(expected) + ")");
    }
}

}  // namespace

SyntheticModelSpec make_group_threshold_spec(double p1, double p2, double eta) {
    SyntheticModelSpec spec;
    spec.kind = GroupThresholdSpec{p1, p2};
    spec.criterion_threshold = eta;
    spec.ground_truth_g = std::abs(p1 - p2) - eta;
    spec.name = default_name(spec);
    return spec;
}

SyntheticModelSpec make_score_function_spec(ScoreFunctionSpec fn, double lipschitz_bound) {
    SyntheticModelSpec spec;
    spec.kind = std::move(fn);
    spec.criterion_threshold = lipschitz_bound;
    spec.ground_truth_g = std::get<ScoreFunctionSpec>(spec.kind).max_abs_slope() - lipschitz_bound;
    spec.name = default_name(spec);
    return spec;
}

SyntheticModelSpec make_loss_plant_spec(double planted_x, double planted_loss,
                                        double baseline_loss, double eta) {
    SyntheticModelSpec spec;
    spec.kind = LossPlantSpec{planted_x, planted_loss, baseline_loss};
    spec.criterion_threshold = eta;
    spec.ground_truth_g = planted_loss - eta;
    spec.name = default_name(spec);
    return spec;
}

std::shared_ptr<const BlackBoxModel> make_synthetic(const SyntheticModelSpec& spec) {
    validate_spec(spec);
    const std::string name = spec.name.empty() ? default_name(spec) : spec.name;
    if (const auto* gt = std::get_if<GroupThresholdSpec>(&spec.kind)) {
        return std::make_shared<GroupThresholdModel>(*gt, name);
    }
    if (const auto* sf = std::get_if<ScoreFunctionSpec>(&spec.kind)) {
        return std::make_shared<ScoreFunctionModel>(*sf, name);
    }
    return std::make_shared<LossPlantModel>(std::get<LossPlantSpec>(spec.kind), name);
}

}  // namespace audit
