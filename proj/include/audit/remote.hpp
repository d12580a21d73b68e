#pragma once

#include <memory>
#include <string>
#include <vector>

#include "audit/model.hpp"

namespace audit {

// Descriptor for a deployed model speaking the /predict wire protocol.
struct EndpointDescriptor {
    std::string url;  // e.g. "http://127.0.0.1:8080"
    int timeout_ms = 5000;
    int max_batch = 32;
    // Name of the environment variable holding the bearer token; empty = none.
    // The token itself never appears in configs or reports.
    std::string bearer_token_env;
    InputSchema schema;
    OutputSpace output_space;
    // Declared by the provider. When false (the default), per-query seeds are
    // meaningless remotely and evidence records are marked non-replayable.
    bool deterministic = false;
    std::string name;  // identity descriptor; defaults to the URL
};

// A value the endpoint returned that is outside the declared output space.
// Recorded, never silently dropped.
struct OutputAnomaly {
    std::size_t batch_index = 0;
    std::string raw_value;
    std::string reason;
};

class RemoteModel final : public BlackBoxModel {
public:
    explicit RemoteModel(EndpointDescriptor descriptor);
    ~RemoteModel() override;

    const InputSchema& input_schema() const override;
    const OutputSpace& output_space() const override;
    bool stochastic() const override;
    bool replayable() const override;
    std::string identity() const override;

    // Seeds are consumed locally for bookkeeping only; they are never
    // transmitted. Wire errors surface as TransportError / TimeoutError /
    // ProtocolError; out-of-space values as NonConformantOutputError.
    ModelOutput query(const ModelInput& input, std::uint64_t seed) const override;
    // Chunks into max_batch requests; output order matches input order.
    std::vector<ModelOutput> query_batch(std::span<const ModelInput> inputs,
                                         std::span<const std::uint64_t> seeds) const override;

    // Non-conformant outputs observed so far (audit-relevant anomalies).
    std::vector<OutputAnomaly> anomalies() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::shared_ptr<RemoteModel> remote_model(EndpointDescriptor descriptor);

}  // namespace audit
