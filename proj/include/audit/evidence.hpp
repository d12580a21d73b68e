#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "audit/distribution.hpp"
#include "audit/model.hpp"

namespace audit {

// One logged input-output pair. Immutable once appended.
struct QueryRecord {
    std::uint64_t index = 0;
    ModelInput input;
    ModelOutput output;
    std::string strategy_tag;
    std::uint64_t seed = 0;
    bool replayable = true;
};

struct Provenance {
    std::string schema_version = "1";
    std::uint64_t audit_seed = 0;
    std::string model_identity;
    std::string distribution;  // declared D, rendered canonically
    std::string strategy_tag;
    std::vector<std::string> exclusions;
    bool truncated = false;
};

// The auditor's evidence E: an append-only ordered log plus provenance.
struct Evidence {
    std::vector<QueryRecord> records;
    Provenance provenance;

    std::size_t n() const { return records.size(); }
};

// Line-delimited JSON: one provenance header line, then one record per line.
void save_evidence(const Evidence& evidence, std::ostream& out);
Evidence load_evidence(std::istream& in);

class QueryBudget {
public:
    explicit QueryBudget(std::uint64_t max_queries) : max_(max_queries) {}

    std::uint64_t max_queries() const { return max_; }
    std::uint64_t spent() const { return spent_; }
    std::uint64_t remaining() const { return max_ - spent_; }

    // Throws BudgetError when the charge would exceed the budget.
    void charge(std::uint64_t queries);

private:
    std::uint64_t max_;
    std::uint64_t spent_ = 0;
};

// --- Sampling strategies ---------------------------------------------------

struct IidStrategy {
    DistributionSpec dist;
};

struct StratifiedStrategy {
    DistributionSpec dist;  // marginals for non-group features
    std::vector<std::pair<std::string, std::size_t>> quotas;
};

// Hill-climbing search for large difference quotients, used to hunt
// individual-fairness violations: seeded random restart pairs plus Gaussian
// perturbation of the best pair seen so far. Proposals are laid out as
// consecutive pairs (records 2i, 2i+1).
struct AdaptivePairSearch {
    DistributionSpec dist;         // numeric marginals define the search domain
    double radius = 0.05;          // perturbation radius per numeric feature
    std::size_t restarts = 8;      // proposed pairs per round
    // Pairs closer than this carry no quotient signal and are never proposed.
    double min_separation = 1e-3;
};

using SamplingStrategy = std::variant<IidStrategy, StratifiedStrategy, AdaptivePairSearch>;

std::string strategy_tag(const SamplingStrategy& strategy);
const DistributionSpec& strategy_distribution(const SamplingStrategy& strategy);

// Draws n inputs without touching any model. IID draws are exchangeable given
// the seed; stratified draws meet quotas exactly (grouped in quota order);
// adaptive strategies fall back to cold-start restart pairs.
std::vector<ModelInput> draw_inputs(const SamplingStrategy& strategy, std::size_t n,
                                    std::uint64_t seed);

// Proposes the next adaptive batch (pair_count pairs -> 2*pair_count inputs)
// conditioned only on (evidence-so-far, seed). Empty evidence yields pure
// restarts.
std::vector<ModelInput> adaptive_next(const Evidence& so_far, const AdaptivePairSearch& strategy,
                                      std::size_t pair_count, std::uint64_t seed);

// Distance between inputs over numeric features (Euclidean); nullopt when the
// inputs differ on a categorical feature or group and are thus incomparable.
std::optional<double> input_distance(const ModelInput& a, const ModelInput& b);
// Distance between outputs: |a-b| for numbers, discrete 0/1 for labels.
double output_distance(const ModelOutput& a, const ModelOutput& b);

// Best difference quotient over consecutive pairs of adaptive evidence.
struct PairQuotient {
    std::size_t first_index = 0;   // record index of the pair's first element
    double quotient = 0.0;
    double distance = 0.0;
};
std::optional<PairQuotient> best_pair_quotient(const Evidence& evidence);

// Runs the strategy against the model: draws, queries, and logs exactly n
// pairs unless the budget runs out first, in which case the partial evidence
// is returned with the truncation marker set. Queries may execute in
// parallel; records are committed in input-index order and the result is
// identical for every worker count.
Evidence collect(const BlackBoxModel& model, const SamplingStrategy& strategy, std::size_t n,
                 QueryBudget& budget, std::uint64_t seed, int workers = 1);

}  // namespace audit
