#include "audit/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace audit {

const FeatureSpec* InputSchema::find(const std::string& name) const {
    for (const auto& f : features) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

void InputSchema::validate(const ModelInput& input) const {
    for (const auto& spec : features) {
        auto it = input.features.find(spec.name);
        if (it == input.features.end()) {
            throw SchemaError(spec.name, "required feature missing");
        }
        const FeatureValue& v = it->second;
        if (spec.kind == FeatureKind::Numeric) {
            if (!std::holds_alternative<double>(v)) {
                throw SchemaError(spec.name, "expected a numeric value");
            }
            double x = std::get<double>(v);
            if (!std::isfinite(x) || x < spec.lo || x > spec.hi) {
                throw SchemaError(spec.name, "numeric value outside declared domain [" +
                                                 format_double(spec.lo) + ", " +
                                                 format_double(spec.hi) + "]");
            }
        } else {
            if (!std::holds_alternative<std::string>(v)) {
                throw SchemaError(spec.name, "expected a categorical value");
            }
            const std::string& s = std::get<std::string>(v);
            if (std::find(spec.categories.begin(), spec.categories.end(), s) ==
                spec.categories.end()) {
                throw SchemaError(spec.name, "category '" + s + "' not in declared set");
            }
        }
    }
    for (const auto& [name, _] : input.features) {
        if (find(name) == nullptr) {
            throw SchemaError(name, "feature not declared in schema");
        }
    }
    if (group_set.empty()) {
        if (input.group.has_value()) {
            throw SchemaError("group", "model declares no group axis");
        }
    } else {
        if (!input.group.has_value()) {
            throw SchemaError("group", "group value required");
        }
        if (std::find(group_set.begin(), group_set.end(), *input.group) == group_set.end()) {
            throw SchemaError("group", "group '" + *input.group + "' not in declared set");
        }
    }
}

OutputSpace OutputSpace::categorical(std::vector<std::string> labels) {
    OutputSpace s;
    s.kind = Kind::Categorical;
    s.labels = std::move(labels);
    return s;
}

OutputSpace OutputSpace::score_grid(double lo, double hi, double step) {
    OutputSpace s;
    s.kind = Kind::ScoreGrid;
    s.lo = lo;
    s.hi = hi;
    s.step = step;
    return s;
}

bool OutputSpace::contains(const ModelOutput& out) const {
    switch (kind) {
        case Kind::Binary:
            return out.is_number() && (out.number() == 0.0 || out.number() == 1.0);
        case Kind::Categorical:
            return !out.is_number() &&
                   std::find(labels.begin(), labels.end(), out.label()) != labels.end();
        case Kind::ScoreGrid: {
            if (!out.is_number()) return false;
            double v = out.number();
            if (!std::isfinite(v) || v < lo - 1e-12 || v > hi + 1e-12) return false;
            if (step <= 0.0) return true;
            return std::abs(v - snap(v)) <= 1e-9 * std::max(1.0, std::abs(v));
        }
    }
    return false;
}

double OutputSpace::snap(double v) const {
    if (kind != Kind::ScoreGrid || step <= 0.0) return v;
    double snapped = lo + std::round((v - lo) / step) * step;
    return std::clamp(snapped, lo, hi);
}

std::vector<ModelOutput> BlackBoxModel::query_batch(std::span<const ModelInput> inputs,
                                                    std::span<const std::uint64_t> seeds) const {
    std::vector<ModelOutput> outputs;
    outputs.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        outputs.push_back(query(inputs[i], i < seeds.size() ? seeds[i] : 0));
    }
    return outputs;
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xCBF29CE484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001B3ULL;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

void fnv_string(std::uint64_t& h, const std::string& s) {
    fnv_bytes(h, s.data(), s.size());
    fnv_bytes(h, "\x1f", 1);
}

}  // namespace

std::uint64_t input_hash(const ModelInput& input) {
    std::uint64_t h = kFnvOffset;
    for (const auto& [name, value] : input.features) {
        fnv_string(h, name);
        if (std::holds_alternative<double>(value)) {
            double d = std::get<double>(value);
            std::uint64_t bits;
            std::memcpy(&bits, &d, sizeof(bits));
            fnv_bytes(h, &bits, sizeof(bits));
        } else {
            fnv_string(h, std::get<std::string>(value));
        }
    }
    if (input.group) fnv_string(h, *input.group);
    return h;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // Trim to the shortest representation that round-trips.
    for (int prec = 1; prec < 17; ++prec) {
        char probe[64];
        std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
        if (std::strtod(probe, nullptr) == v) return probe;
    }
    return buf;
}

std::string describe(const ModelInput& input) {
    std::string s = "{";
    bool first = true;
    for (const auto& [name, value] : input.features) {
        if (!first) s += ", ";
        first = false;
        s += name + "=";
        if (std::holds_alternative<double>(value)) {
            s += format_double(std::get<double>(value));
        } else {
            s += std::get<std::string>(value);
        }
    }
    if (input.group) {
        if (!first) s += ", ";
        s += "group=" + *input.group;
    }
    s += "}";
    return s;
}

std::string describe(const ModelOutput& output) {
    return output.is_number() ? format_double(output.number()) : output.label();
}

}  // namespace audit
