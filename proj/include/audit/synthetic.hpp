#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "audit/model.hpp"

namespace audit {

// Synthetic model zoo with analytically known ground truth. The ground truth
// lives on the spec, never on the model object: audit code paths receive only
// the opaque BlackBoxModel, so they cannot peek.

// Binary classifier over groups {G_1, G_2}: selects group k members with
// probability p_k. Designated criterion: statistical parity at eta.
struct GroupThresholdSpec {
    double p1 = 0.5;
    double p2 = 0.5;
    std::string group1 = "G_1";
    std::string group2 = "G_2";
};

// Deterministic piecewise-linear score over feature "x" in [0, 1], with the
// exact Lipschitz constant max |slope|. Designated criterion: individual
// fairness with Lipschitz bound L. grid_step > 0 quantizes outputs; the
// default 0 keeps the closed form exact at double resolution.
struct ScoreFunctionSpec {
    std::vector<double> knot_x{0.0, 1.0};
    std::vector<double> knot_y{0.0, 1.0};
    double grid_step = 0.0;

    static ScoreFunctionSpec linear(double slope, double intercept = 0.0);
    double eval(double x) const;       // continuous closed form
    double max_abs_slope() const;      // exact Lipschitz constant
};

// Deterministic model over feature "x" whose output (read as a loss) is a
// baseline everywhere except one planted input. Designated criterion:
// max loss over a query set containing the plant, threshold eta.
struct LossPlantSpec {
    double planted_x = 0.5;
    double planted_loss = 0.9;
    double baseline_loss = 0.1;
};

struct SyntheticModelSpec {
    std::variant<GroupThresholdSpec, ScoreFunctionSpec, LossPlantSpec> kind;
    double criterion_threshold = 0.1;  // eta, or L for score functions
    double ground_truth_g = 0.0;       // true g(f) for the designated criterion
    std::string name;                  // identity descriptor

    bool is_group_threshold() const { return std::holds_alternative<GroupThresholdSpec>(kind); }
    const GroupThresholdSpec& group_threshold() const { return std::get<GroupThresholdSpec>(kind); }
};

// Analytic g(f) implied by the parameters; construction rejects specs whose
// declared ground_truth_g disagrees with this.
double expected_ground_truth(const SyntheticModelSpec& spec);

// Convenience constructors that fill in the consistent ground truth.
SyntheticModelSpec make_group_threshold_spec(double p1, double p2, double eta);
SyntheticModelSpec make_score_function_spec(ScoreFunctionSpec fn, double lipschitz_bound);
SyntheticModelSpec make_loss_plant_spec(double planted_x, double planted_loss,
                                        double baseline_loss, double eta);

// Builds the opaque model. Throws ConfigError when the spec is inconsistent.
std::shared_ptr<const BlackBoxModel> make_synthetic(const SyntheticModelSpec& spec);

}  // namespace audit
