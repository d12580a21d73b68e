#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "audit/model.hpp"
#include "audit/rng.hpp"

namespace audit {

// Product distributions over declared features: each feature gets an
// independent marginal, which keeps oracles enumerable.

struct UniformDist {
    double lo = 0.0;
    double hi = 1.0;
};

struct PointDist {
    double value = 0.0;
};

struct CategoricalDist {
    std::vector<std::string> values;
    std::vector<double> probs;  // empty => uniform over values

    bool empty() const { return values.empty(); }
    void validate() const;
    std::string sample(Rng& rng) const;
};

using FeatureDist = std::variant<UniformDist, PointDist, CategoricalDist>;

struct DistributionSpec {
    std::map<std::string, FeatureDist> features;
    CategoricalDist group;  // empty => no group axis

    void validate() const;
    // Every schema feature must be covered and every category/interval must
    // lie inside the schema's declared domain.
    void validate_against(const InputSchema& schema) const;

    ModelInput sample(Rng& rng) const;
    // Sample with the group pinned (stratified draws).
    ModelInput sample_with_group(Rng& rng, const std::string& group_value) const;

    // Canonical one-line description for provenance and disclosure blocks.
    std::string describe() const;

    // Uniform product over a schema's declared domains (group uniform too).
    static DistributionSpec uniform_over(const InputSchema& schema);
};

}  // namespace audit
