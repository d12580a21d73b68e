#include "audit/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "audit/json_io.hpp"
#include "audit/parallel.hpp"
#include "audit/rng.hpp"

namespace audit {

namespace {
// Separate sub-streams so that input drawing and querying never share draws.
constexpr std::uint64_t kInputStreamSalt = 0xA5C1ED5EEDF00D01ULL;
constexpr std::uint64_t kQueryStreamSalt = 0xB0B5EEDBEEF00D02ULL;
}  // namespace

void QueryBudget::charge(std::uint64_t queries) {
    if (queries > remaining()) {
        throw BudgetError("query budget exhausted: " + std::to_string(spent_) + " spent of " +
                          std::to_string(max_) + ", requested " + std::to_string(queries));
    }
    spent_ += queries;
}

std::string strategy_tag(const SamplingStrategy& strategy) {
    if (std::holds_alternative<IidStrategy>(strategy)) return "iid";
    if (std::holds_alternative<StratifiedStrategy>(strategy)) return "stratified";
    return "adaptive_pair_search";
}

const DistributionSpec& strategy_distribution(const SamplingStrategy& strategy) {
    return std::visit([](const auto& s) -> const DistributionSpec& { return s.dist; }, strategy);
}

std::vector<ModelInput> draw_inputs(const SamplingStrategy& strategy, std::size_t n,
                                    std::uint64_t seed) {
    std::vector<ModelInput> inputs;
    inputs.reserve(n);
    Rng rng(derive_seed(seed ^ kInputStreamSalt, 0));

    if (const auto* iid = std::get_if<IidStrategy>(&strategy)) {
        iid->dist.validate();
        for (std::size_t i = 0; i < n; ++i) inputs.push_back(iid->dist.sample(rng));
        return inputs;
    }
    if (const auto* st = std::get_if<StratifiedStrategy>(&strategy)) {
        st->dist.validate();
        std::size_t total = 0;
        for (const auto& [group, quota] : st->quotas) {
            if (st->dist.group.empty() ||
                std::find(st->dist.group.values.begin(), st->dist.group.values.end(), group) ==
                    st->dist.group.values.end()) {
                // A quota the declared group set cannot satisfy.
                throw ConfigError("stratified quota names group '" + group +
                                  "' outside the declared group set");
            }
            total += quota;
        }
        if (total != n) {
            throw ConfigError("stratified quotas sum to " + std::to_string(total) +
                              " but n=" + std::to_string(n));
        }
        for (const auto& [group, quota] : st->quotas) {
            for (std::size_t i = 0; i < quota; ++i) {
                inputs.push_back(st->dist.sample_with_group(rng, group));
            }
        }
        return inputs;
    }
    const auto& adaptive = std::get<AdaptivePairSearch>(strategy);
    return adaptive_next(Evidence{}, adaptive, (n + 1) / 2, seed);
}

std::optional<double> input_distance(const ModelInput& a, const ModelInput& b) {
    if (a.group != b.group) return std::nullopt;
    double sum = 0.0;
    for (const auto& [name, va] : a.features) {
        auto it = b.features.find(name);
        if (it == b.features.end()) return std::nullopt;
        if (std::holds_alternative<double>(va)) {
            if (!std::holds_alternative<double>(it->second)) return std::nullopt;
            const double d = std::get<double>(va) - std::get<double>(it->second);
            sum += d * d;
        } else {
            if (va != it->second) return std::nullopt;  // categorical mismatch
        }
    }
    for (const auto& [name, _] : b.features) {
        if (a.features.find(name) == a.features.end()) return std::nullopt;
    }
    return std::sqrt(sum);
}

double output_distance(const ModelOutput& a, const ModelOutput& b) {
    if (a.is_number() && b.is_number()) return std::abs(a.number() - b.number());
    return a == b ? 0.0 : 1.0;
}

std::optional<PairQuotient> best_pair_quotient(const Evidence& evidence) {
    std::optional<PairQuotient> best;
    for (std::size_t i = 0; i + 1 < evidence.records.size(); i += 2) {
        const auto& a = evidence.records[i];
        const auto& b = evidence.records[i + 1];
        const auto d = input_distance(a.input, b.input);
        if (!d || *d <= 0.0) continue;
        const double q = output_distance(a.output, b.output) / *d;
        if (!best || q > best->quotient) {
            best = PairQuotient{i, q, *d};
        }
    }
    return best;
}

namespace {

struct NumericDomain {
    std::string name;
    double lo, hi;
};

std::vector<NumericDomain> numeric_domains(const DistributionSpec& dist) {
    std::vector<NumericDomain> domains;
    for (const auto& [name, fd] : dist.features) {
        if (const auto* u = std::get_if<UniformDist>(&fd)) {
            domains.push_back({name, u->lo, u->hi});
        } else if (const auto* p = std::get_if<PointDist>(&fd)) {
            domains.push_back({name, p->value, p->value});
        }
    }
    return domains;
}

double get_num(const ModelInput& in, const std::string& name) {
    return std::get<double>(in.features.at(name));
}

// A fresh pair: random center, offset of length `radius` in a random
// direction across the numeric features.
std::pair<ModelInput, ModelInput> restart_pair(const DistributionSpec& dist,
                                               const std::vector<NumericDomain>& domains,
                                               double radius, Rng& rng) {
    ModelInput a = dist.sample(rng);
    ModelInput b = a;
    double norm2 = 0.0;
    std::vector<double> dir(domains.size(), 0.0);
    for (std::size_t k = 0; k < domains.size(); ++k) {
        if (domains[k].hi > domains[k].lo) {
            dir[k] = rng.next_gaussian();
            norm2 += dir[k] * dir[k];
        }
    }
    const double norm = std::sqrt(norm2);
    for (std::size_t k = 0; k < domains.size(); ++k) {
        if (norm > 0.0) {
            double v = get_num(a, domains[k].name) + radius * dir[k] / norm;
            b.features[domains[k].name] = std::clamp(v, domains[k].lo, domains[k].hi);
        }
    }
    return {a, b};
}

// Perturbs one endpoint within `radius` of its anchor, clamped to the domain.
ModelInput perturb(const ModelInput& anchor, const std::vector<NumericDomain>& domains,
                   double radius, Rng& rng) {
    ModelInput out = anchor;
    for (const auto& d : domains) {
        if (d.hi <= d.lo) continue;
        double delta = std::clamp(rng.next_gaussian() * radius / 3.0, -radius, radius);
        out.features[d.name] = std::clamp(get_num(anchor, d.name) + delta, d.lo, d.hi);
    }
    return out;
}

// Quantized outputs make quotients at tiny separations pure noise, so pushed
// the endpoints apart along the first free axis when they collapse.
void enforce_separation(ModelInput& a, ModelInput& b, const std::vector<NumericDomain>& domains,
                        double min_separation) {
    const auto d = input_distance(a, b);
    if (d && *d >= min_separation) return;
    for (const auto& dom : domains) {
        if (dom.hi <= dom.lo) continue;
        double va = get_num(a, dom.name);
        double vb = va + min_separation <= dom.hi ? va + min_separation : va - min_separation;
        b.features[dom.name] = std::clamp(vb, dom.lo, dom.hi);
        return;
    }
}

}  // namespace

std::vector<ModelInput> adaptive_next(const Evidence& so_far, const AdaptivePairSearch& strategy,
                                      std::size_t pair_count, std::uint64_t seed) {
    if (!(strategy.radius > 0.0)) throw ConfigError("adaptive search radius must be positive");
    strategy.dist.validate();
    const auto domains = numeric_domains(strategy.dist);
    Rng rng(derive_seed(seed ^ kInputStreamSalt, 1));

    const auto best = best_pair_quotient(so_far);
    std::vector<ModelInput> batch;
    batch.reserve(pair_count * 2);

    // Policy: when a best pair exists, at least half of the proposals stay
    // within the perturbation radius of it; the rest are restarts.
    const std::size_t exploit = best ? (pair_count + 1) / 2 : 0;
    for (std::size_t p = 0; p < pair_count; ++p) {
        ModelInput a, b;
        if (p < exploit) {
            const auto& anchor_a = so_far.records[best->first_index].input;
            const auto& anchor_b = so_far.records[best->first_index + 1].input;
            a = perturb(anchor_a, domains, strategy.radius, rng);
            b = perturb(anchor_b, domains, strategy.radius, rng);
        } else {
            std::tie(a, b) = restart_pair(strategy.dist, domains, strategy.radius, rng);
        }
        enforce_separation(a, b, domains, strategy.min_separation);
        batch.push_back(std::move(a));
        batch.push_back(std::move(b));
    }
    return batch;
}

namespace {

void append_records(Evidence& evidence, const BlackBoxModel& model,
                    const std::vector<ModelInput>& inputs, std::uint64_t audit_seed,
                    const std::string& tag, int workers) {
    const std::size_t base = evidence.records.size();
    std::vector<ModelOutput> outputs(inputs.size());
    std::vector<std::uint64_t> seeds(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        seeds[i] = derive_seed(audit_seed ^ kQueryStreamSalt, base + i);
    }
    parallel_for(inputs.size(), workers,
                 [&](std::size_t i) { outputs[i] = model.query(inputs[i], seeds[i]); });
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        evidence.records.push_back(QueryRecord{base + i, inputs[i], outputs[i], tag, seeds[i],
                                               model.replayable()});
    }
}

}  // namespace

Evidence collect(const BlackBoxModel& model, const SamplingStrategy& strategy, std::size_t n,
                 QueryBudget& budget, std::uint64_t seed, int workers) {
    strategy_distribution(strategy).validate_against(model.input_schema());

    Evidence evidence;
    evidence.provenance.audit_seed = seed;
    evidence.provenance.model_identity = model.identity();
    evidence.provenance.distribution = strategy_distribution(strategy).describe();
    evidence.provenance.strategy_tag = strategy_tag(strategy);
    const std::string tag = evidence.provenance.strategy_tag;

    if (const auto* adaptive = std::get_if<AdaptivePairSearch>(&strategy)) {
        // Rounds condition on prior outputs; each round proposes `restarts`
        // pairs, trimmed to the remaining n and budget.
        std::size_t round = 0;
        while (evidence.records.size() < n && budget.remaining() > 0) {
            std::size_t want = std::min<std::size_t>(n - evidence.records.size(),
                                                     budget.remaining());
            std::size_t pairs = std::min<std::size_t>(adaptive->restarts, (want + 1) / 2);
            auto batch = adaptive_next(evidence, *adaptive,
                                       std::max<std::size_t>(pairs, 1),
                                       derive_seed(seed, 0x5EED0000 + round));
            if (batch.size() > want) batch.resize(want);
            budget.charge(batch.size());
            append_records(evidence, model, batch, seed, tag, workers);
            ++round;
        }
        evidence.provenance.truncated = evidence.records.size() < n;
        if (evidence.provenance.truncated) {
            evidence.provenance.exclusions.push_back(
                "collection truncated by query budget after " +
                std::to_string(evidence.records.size()) + " of " + std::to_string(n) +
                " queries");
        }
        return evidence;
    }

    auto inputs = draw_inputs(strategy, n, seed);
    const std::size_t affordable = std::min<std::size_t>(n, budget.remaining());
    if (affordable < inputs.size()) inputs.resize(affordable);
    budget.charge(inputs.size());
    append_records(evidence, model, inputs, seed, tag, workers);
    evidence.provenance.truncated = evidence.records.size() < n;
    if (evidence.provenance.truncated) {
        evidence.provenance.exclusions.push_back(
            "collection truncated by query budget after " +
            std::to_string(evidence.records.size()) + " of " + std::to_string(n) + " queries");
    }
    return evidence;
}

// --- Serialization ----------------------------------------------------------

void save_evidence(const Evidence& evidence, std::ostream& out) {
    Json header;
    header["schema_version"] = evidence.provenance.schema_version;
    header["kind"] = "audit-evidence";
    header["n"] = evidence.n();
    header["audit_seed"] = evidence.provenance.audit_seed;
    header["model_identity"] = evidence.provenance.model_identity;
    header["distribution"] = evidence.provenance.distribution;
    header["strategy"] = evidence.provenance.strategy_tag;
    header["exclusions"] = evidence.provenance.exclusions;
    header["truncated"] = evidence.provenance.truncated;
    out << header.dump() << "\n";
    for (const auto& rec : evidence.records) {
        Json j;
        j["index"] = rec.index;
        j["input"] = input_to_json(rec.input);
        j["output"] = output_to_json(rec.output);
        j["strategy"] = rec.strategy_tag;
        j["seed"] = rec.seed;
        j["replayable"] = rec.replayable;
        out << j.dump() << "\n";
    }
}

Evidence load_evidence(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("evidence stream is empty");
    Json header = Json::parse(line);
    if (header.value("kind", "") != "audit-evidence") {
        throw ConfigError("not an evidence file: kind=" + header.value("kind", "<missing>"));
    }
    Evidence evidence;
    evidence.provenance.schema_version = header.at("schema_version").get<std::string>();
    evidence.provenance.audit_seed = header.at("audit_seed").get<std::uint64_t>();
    evidence.provenance.model_identity = header.at("model_identity").get<std::string>();
    evidence.provenance.distribution = header.at("distribution").get<std::string>();
    evidence.provenance.strategy_tag = header.at("strategy").get<std::string>();
    evidence.provenance.exclusions = header.at("exclusions").get<std::vector<std::string>>();
    evidence.provenance.truncated = header.at("truncated").get<bool>();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Json j = Json::parse(line);
        QueryRecord rec;
        rec.index = j.at("index").get<std::uint64_t>();
        rec.input = input_from_json(j.at("input"));
        rec.output = output_from_json(j.at("output"));
        rec.strategy_tag = j.at("strategy").get<std::string>();
        rec.seed = j.at("seed").get<std::uint64_t>();
        rec.replayable = j.at("replayable").get<bool>();
        if (rec.index != evidence.records.size()) {
            throw ConfigError("evidence record indices are not contiguous at " +
                              std::to_string(rec.index));
        }
        evidence.records.push_back(std::move(rec));
    }
    const std::size_t declared = header.at("n").get<std::size_t>();
    if (declared != evidence.records.size()) {
        throw ConfigError("evidence header declares n=" + std::to_string(declared) + " but " +
                          std::to_string(evidence.records.size()) + " records follow");
    }
    return evidence;
}

}  // namespace audit
