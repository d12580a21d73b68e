#pragma once

#include <json.hpp>

#include "audit/model.hpp"

namespace audit {

// ordered_json keeps insertion order, which makes every serialized artifact
// byte-stable.
using Json = nlohmann::ordered_json;

inline Json input_to_json(const ModelInput& input) {
    Json features = Json::object();
    for (const auto& [name, value] : input.features) {
        if (std::holds_alternative<double>(value)) {
            features[name] = std::get<double>(value);
        } else {
            features[name] = std::get<std::string>(value);
        }
    }
    Json j;
    j["features"] = std::move(features);
    if (input.group) j["group"] = *input.group;
    return j;
}

inline ModelInput input_from_json(const Json& j) {
    ModelInput input;
    for (const auto& [name, value] : j.at("features").items()) {
        if (value.is_number()) {
            input.features[name] = value.get<double>();
        } else if (value.is_string()) {
            input.features[name] = value.get<std::string>();
        } else {
            throw ConfigError("feature '" + name + "' must be a number or string");
        }
    }
    if (j.contains("group")) input.group = j.at("group").get<std::string>();
    return input;
}

inline Json output_to_json(const ModelOutput& output) {
    Json j;
    if (output.is_number()) {
        j["value"] = output.number();
    } else {
        j["label"] = output.label();
    }
    return j;
}

inline ModelOutput output_from_json(const Json& j) {
    if (j.contains("value")) return ModelOutput::of(j.at("value").get<double>());
    if (j.contains("label")) return ModelOutput::of(j.at("label").get<std::string>());
    throw ConfigError("model output needs either 'value' or 'label'");
}

}  // namespace audit
