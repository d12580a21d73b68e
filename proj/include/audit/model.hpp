#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "audit/errors.hpp"

namespace audit {

// A feature value is numeric or categorical. Inputs keep features in an
// ordered map so hashing and serialization are canonical.
using FeatureValue = std::variant<double, std::string>;

struct ModelInput {
    std::map<std::string, FeatureValue> features;
    std::optional<std::string> group;

    bool operator==(const ModelInput&) const = default;
};

// One element of the declared countable output space Y: either a numeric
// value (binary labels and grid scores) or a categorical label.
struct ModelOutput {
    std::variant<double, std::string> value;

    bool is_number() const { return std::holds_alternative<double>(value); }
    double number() const { return std::get<double>(value); }
    const std::string& label() const { return std::get<std::string>(value); }

    static ModelOutput of(double v) { return ModelOutput{v}; }
    static ModelOutput of(std::string label) { return ModelOutput{std::move(label)}; }

    bool operator==(const ModelOutput&) const = default;
};

enum class FeatureKind { Numeric, Categorical };

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::Numeric;
    // Numeric domain.
    double lo = 0.0;
    double hi = 1.0;
    // Categorical domain.
    std::vector<std::string> categories;
};

// Declared input schema: named features plus an optional group axis.
struct InputSchema {
    std::vector<FeatureSpec> features;
    std::vector<std::string> group_set;  // empty => model has no group axis

    const FeatureSpec* find(const std::string& name) const;
    // Throws SchemaError naming the offending field.
    void validate(const ModelInput& input) const;
};

// Declared countable output space.
struct OutputSpace {
    enum class Kind { Binary, Categorical, ScoreGrid };
    Kind kind = Kind::Binary;
    std::vector<std::string> labels;  // Categorical
    // ScoreGrid: values lo + i*step within [lo, hi]. step == 0 declares the
    // grid at full double resolution (still a finite set of representable
    // values), which keeps closed-form models exact.
    double lo = 0.0;
    double hi = 1.0;
    double step = 0.0;

    static OutputSpace binary() { return OutputSpace{Kind::Binary, {}, 0.0, 1.0, 0.0}; }
    static OutputSpace categorical(std::vector<std::string> labels);
    static OutputSpace score_grid(double lo, double hi, double step);

    bool contains(const ModelOutput& out) const;
    // Rounds a raw score onto the declared grid.
    double snap(double v) const;
};

// Opaque queryable decision function. Implementations must be safe to call
// from multiple threads; all randomness comes from the per-query seed, so
// stochastic local models are replayable: query(m, x, s) == query(m, x, s).
class BlackBoxModel {
public:
    virtual ~BlackBoxModel() = default;

    virtual const InputSchema& input_schema() const = 0;
    virtual const OutputSpace& output_space() const = 0;
    virtual bool stochastic() const = 0;
    virtual double cost_per_query() const { return 1.0; }
    // Identity descriptor recorded in evidence provenance.
    virtual std::string identity() const = 0;
    // False for models whose randomness the auditor cannot replay (remote).
    virtual bool replayable() const { return true; }

    virtual ModelOutput query(const ModelInput& input, std::uint64_t seed) const = 0;
    // Outputs in input order. Default loops; remote models batch on the wire.
    virtual std::vector<ModelOutput> query_batch(std::span<const ModelInput> inputs,
                                                 std::span<const std::uint64_t> seeds) const;
};

// Canonical 64-bit hash of an input (names, value bits, group). Used to give
// stochastic models draws that depend on the input as well as the seed.
std::uint64_t input_hash(const ModelInput& input);

// Deterministic text rendering helpers (used by identities and reports).
std::string format_double(double v);
std::string describe(const ModelInput& input);
std::string describe(const ModelOutput& output);

}  // namespace audit
