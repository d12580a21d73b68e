#include "audit/remote.hpp"

#include <cstdlib>
#include <mutex>

#include <httplib.h>

#include "audit/json_io.hpp"

namespace audit {

namespace {

// The wire protocol sends features flat, with the group (when present) under
// the reserved key "group".
Json wire_input(const ModelInput& input) {
    Json j = Json::object();
    for (const auto& [name, value] : input.features) {
        if (std::holds_alternative<double>(value)) {
            j[name] = std::get<double>(value);
        } else {
            j[name] = std::get<std::string>(value);
        }
    }
    if (input.group) j["group"] = *input.group;
    return j;
}

}  // namespace

struct RemoteModel::Impl {
    EndpointDescriptor descriptor;
    mutable std::mutex anomaly_mutex;
    mutable std::vector<OutputAnomaly> anomalies;

    ModelOutput parse_output(const Json& value, std::size_t batch_index) const {
        ModelOutput out;
        if (value.is_number()) {
            out = ModelOutput::of(value.get<double>());
        } else if (value.is_string()) {
            out = ModelOutput::of(value.get<std::string>());
        } else {
            record_anomaly(batch_index, value.dump(), "output is neither number nor string");
            throw NonConformantOutputError(value.dump(),
                                           "endpoint returned a non-scalar output");
        }
        if (!descriptor.output_space.contains(out)) {
            record_anomaly(batch_index, value.dump(),
                           "value outside the declared output space");
            throw NonConformantOutputError(
                value.dump(), "endpoint returned " + describe(out) +
                                  ", which is outside the declared output space");
        }
        return out;
    }

    void record_anomaly(std::size_t batch_index, std::string raw, std::string reason) const {
        std::lock_guard<std::mutex> lock(anomaly_mutex);
        anomalies.push_back(OutputAnomaly{batch_index, std::move(raw), std::move(reason)});
    }

    std::vector<ModelOutput> post_chunk(std::span<const ModelInput> inputs) const {
        Json body;
        body["inputs"] = Json::array();
        for (const auto& input : inputs) {
            descriptor.schema.validate(input);
            body["inputs"].push_back(wire_input(input));
        }

        httplib::Client client(descriptor.url);
        client.set_connection_timeout(0, descriptor.timeout_ms * 1000);
        client.set_read_timeout(0, descriptor.timeout_ms * 1000);
        client.set_write_timeout(0, descriptor.timeout_ms * 1000);
        httplib::Headers headers;
        if (!descriptor.bearer_token_env.empty()) {
            const char* token = std::getenv(descriptor.bearer_token_env.c_str());
            if (token != nullptr && *token != '\0') {
                headers.emplace("Authorization", std::string("Bearer ") + token);
            }
        }

        auto res = client.Post("/predict", headers, body.dump(), "application/json");
        if (!res) {
            const auto err = res.error();
            if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                err == httplib::Error::Write) {
                throw TimeoutError("request to " + descriptor.url + " timed out after " +
                                   std::to_string(descriptor.timeout_ms) + " ms");
            }
            throw TransportError("transport failure talking to " + descriptor.url + ": " +
                                 httplib::to_string(err));
        }
        if (res->status != 200) {
            throw ProtocolError("endpoint " + descriptor.url + " answered status " +
                                std::to_string(res->status) + " instead of 200");
        }
        Json parsed;
        try {
            parsed = Json::parse(res->body);
        } catch (const std::exception& e) {
            throw ProtocolError("endpoint body is not valid JSON: " + std::string(e.what()));
        }
        if (!parsed.contains("outputs") || !parsed["outputs"].is_array()) {
            throw ProtocolError("endpoint body lacks the 'outputs' array");
        }
        const Json& outputs = parsed["outputs"];
        if (outputs.size() != inputs.size()) {
            throw ProtocolError("endpoint returned " + std::to_string(outputs.size()) +
                                " outputs for " + std::to_string(inputs.size()) + " inputs");
        }
        std::vector<ModelOutput> result;
        result.reserve(outputs.size());
        for (std::size_t i = 0; i < outputs.size(); ++i) {
            result.push_back(parse_output(outputs[i], i));
        }
        return result;
    }
};

RemoteModel::RemoteModel(EndpointDescriptor descriptor) : impl_(std::make_unique<Impl>()) {
    if (descriptor.url.empty()) throw ConfigError("remote endpoint needs a URL");
    if (descriptor.max_batch < 1) throw ConfigError("max_batch must be at least 1");
    if (descriptor.name.empty()) descriptor.name = "remote:" + descriptor.url;
    impl_->descriptor = std::move(descriptor);
}

RemoteModel::~RemoteModel() = default;

const InputSchema& RemoteModel::input_schema() const { return impl_->descriptor.schema; }
const OutputSpace& RemoteModel::output_space() const { return impl_->descriptor.output_space; }
bool RemoteModel::stochastic() const { return !impl_->descriptor.deterministic; }
bool RemoteModel::replayable() const { return impl_->descriptor.deterministic; }
std::string RemoteModel::identity() const { return impl_->descriptor.name; }

ModelOutput RemoteModel::query(const ModelInput& input, std::uint64_t /*seed*/) const {
    return impl_->post_chunk(std::span<const ModelInput>(&input, 1)).front();
}

std::vector<ModelOutput> RemoteModel::query_batch(std::span<const ModelInput> inputs,
                                                  std::span<const std::uint64_t> /*seeds*/) const {
    std::vector<ModelOutput> all;
    all.reserve(inputs.size());
    const std::size_t chunk = static_cast<std::size_t>(impl_->descriptor.max_batch);
    for (std::size_t start = 0; start < inputs.size(); start += chunk) {
        const std::size_t len = std::min(chunk, inputs.size() - start);
        auto part = impl_->post_chunk(inputs.subspan(start, len));
        all.insert(all.end(), part.begin(), part.end());
    }
    return all;
}

std::vector<OutputAnomaly> RemoteModel::anomalies() const {
    std::lock_guard<std::mutex> lock(impl_->anomaly_mutex);
    return impl_->anomalies;
}

std::shared_ptr<RemoteModel> remote_model(EndpointDescriptor descriptor) {
    return std::make_shared<RemoteModel>(std::move(descriptor));
}

}  // namespace audit
