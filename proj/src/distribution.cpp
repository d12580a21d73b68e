#include "audit/distribution.hpp"

#include <algorithm>
#include <cmath>

namespace audit {

void CategoricalDist::validate() const {
    if (values.empty()) throw ConfigError("categorical distribution has no values");
    if (!probs.empty()) {
        if (probs.size() != values.size()) {
            throw ConfigError("categorical distribution: probs and values differ in length");
        }
        double total = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0)) throw ConfigError("categorical distribution: negative probability");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw ConfigError("categorical distribution: probabilities sum to " +
                              format_double(total) + ", expected 1");
        }
    }
}

std::string CategoricalDist::sample(Rng& rng) const {
    if (probs.empty()) {
        return values[rng.next_index(values.size())];
    }
    double u = rng.next_double();
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        acc += probs[i];
        if (u < acc) return values[i];
    }
    return values.back();
}

void DistributionSpec::validate() const {
    for (const auto& [name, dist] : features) {
        if (const auto* u = std::get_if<UniformDist>(&dist)) {
            if (!(u->lo <= u->hi)) {
                throw ConfigError("feature '" + name + "': uniform interval has lo > hi");
            }
        } else if (const auto* c = std::get_if<CategoricalDist>(&dist)) {
            c->validate();
        }
    }
    if (!group.empty()) group.validate();
}

void DistributionSpec::validate_against(const InputSchema& schema) const {
    validate();
    for (const auto& spec : schema.features) {
        auto it = features.find(spec.name);
        if (it == features.end()) {
            throw ConfigError("distribution does not cover schema feature '" + spec.name + "'");
        }
        const FeatureDist& dist = it->second;
        if (spec.kind == FeatureKind::Numeric) {
            if (const auto* u = std::get_if<UniformDist>(&dist)) {
                if (u->lo < spec.lo || u->hi > spec.hi) {
                    throw ConfigError("feature '" + spec.name +
                                      "': uniform interval outside declared domain");
                }
            } else if (const auto* p = std::get_if<PointDist>(&dist)) {
                if (p->value < spec.lo || p->value > spec.hi) {
                    throw ConfigError("feature '" + spec.name +
                                      "': point mass outside declared domain");
                }
            } else {
                throw ConfigError("feature '" + spec.name +
                                  "': categorical marginal for a numeric feature");
            }
        } else {
            const auto* c = std::get_if<CategoricalDist>(&dist);
            if (c == nullptr) {
                throw ConfigError("feature '" + spec.name +
                                  "': numeric marginal for a categorical feature");
            }
            for (const auto& v : c->values) {
                if (std::find(spec.categories.begin(), spec.categories.end(), v) ==
                    spec.categories.end()) {
                    throw ConfigError("feature '" + spec.name + "': category '" + v +
                                      "' not in declared set");
                }
            }
        }
    }
    for (const auto& [name, _] : features) {
        if (schema.find(name) == nullptr) {
            throw ConfigError("distribution names unknown feature '" + name + "'");
        }
    }
    if (schema.group_set.empty()) {
        if (!group.empty()) throw ConfigError("distribution declares a group but schema has none");
    } else {
        if (group.empty()) throw ConfigError("schema declares groups but distribution has none");
        for (const auto& g : group.values) {
            if (std::find(schema.group_set.begin(), schema.group_set.end(), g) ==
                schema.group_set.end()) {
                throw ConfigError("distribution group '" + g + "' not in declared group set");
            }
        }
    }
}

namespace {

// Map order is lexicographic by feature name: the draw order is part of the
// determinism contract.
ModelInput sample_features(const std::map<std::string, FeatureDist>& features, Rng& rng) {
    ModelInput input;
    for (const auto& [name, dist] : features) {
        if (const auto* u = std::get_if<UniformDist>(&dist)) {
            input.features[name] = u->lo + (u->hi - u->lo) * rng.next_double();
        } else if (const auto* p = std::get_if<PointDist>(&dist)) {
            input.features[name] = p->value;
        } else {
            input.features[name] = std::get<CategoricalDist>(dist).sample(rng);
        }
    }
    return input;
}

}  // namespace

ModelInput DistributionSpec::sample(Rng& rng) const {
    ModelInput input = sample_features(features, rng);
    if (!group.empty()) input.group = group.sample(rng);
    return input;
}

ModelInput DistributionSpec::sample_with_group(Rng& rng, const std::string& group_value) const {
    ModelInput input = sample_features(features, rng);
    input.group = group_value;
    return input;
}

std::string DistributionSpec::describe() const {
    std::string s = "product{";
    bool first = true;
    for (const auto& [name, dist] : features) {
        if (!first) s += ", ";
        first = false;
        s += name + "~";
        if (const auto* u = std::get_if<UniformDist>(&dist)) {
            s += "U[" + format_double(u->lo) + "," + format_double(u->hi) + "]";
        } else if (const auto* p = std::get_if<PointDist>(&dist)) {
            s += "point(" + format_double(p->value) + ")";
        } else {
            const auto& c = std::get<CategoricalDist>(dist);
            s += "cat(";
            for (std::size_t i = 0; i < c.values.size(); ++i) {
                if (i) s += ",";
                s += c.values[i];
                if (!c.probs.empty()) s += ":" + format_double(c.probs[i]);
            }
            s += ")";
        }
    }
    if (!group.empty()) {
        if (!first) s += ", ";
        s += "group~cat(";
        for (std::size_t i = 0; i < group.values.size(); ++i) {
            if (i) s += ",";
            s += group.values[i];
            if (!group.probs.empty()) s += ":" + format_double(group.probs[i]);
        }
        s += ")";
    }
    s += "}";
    return s;
}

DistributionSpec DistributionSpec::uniform_over(const InputSchema& schema) {
    DistributionSpec spec;
    for (const auto& f : schema.features) {
        if (f.kind == FeatureKind::Numeric) {
            spec.features[f.name] = UniformDist{f.lo, f.hi};
        } else {
            spec.features[f.name] = CategoricalDist{f.categories, {}};
        }
    }
    if (!schema.group_set.empty()) {
        spec.group = CategoricalDist{schema.group_set, {}};
    }
    return spec;
}

}  // namespace audit
