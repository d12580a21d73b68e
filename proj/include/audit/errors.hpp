#pragma once

#include <stdexcept>
#include <string>

namespace audit {

// Base class for every error the toolkit raises on purpose.
class AuditError : public std::runtime_error {
public:
    explicit AuditError(const std::string& what) : std::runtime_error(what) {}
};

// Input rejected by a model's declared schema. Message names the offending field.
class SchemaError : public AuditError {
public:
    SchemaError(const std::string& field, const std::string& what)
        : AuditError("schema mismatch on field '" + field + "': " + what), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

// Remote transport failure (connect, send, receive). Retryable by the caller.
class TransportError : public AuditError {
public:
    using AuditError::AuditError;
};

// Request exceeded the endpoint's declared timeout.
class TimeoutError : public TransportError {
public:
    using TransportError::TransportError;
};

// Endpoint answered, but not in the wire protocol (bad status, malformed body).
class ProtocolError : public TransportError {
public:
    using TransportError::TransportError;
};

// Endpoint returned a value outside the declared output space. The raw value
// is kept so the anomaly can be disclosed rather than dropped.
class NonConformantOutputError : public AuditError {
public:
    NonConformantOutputError(const std::string& raw_value, const std::string& what)
        : AuditError(what), raw_value_(raw_value) {}
    const std::string& raw_value() const { return raw_value_; }

private:
    std::string raw_value_;
};

// An estimator's preconditions are not met by the supplied evidence.
class EstimationError : public AuditError {
public:
    using AuditError::AuditError;
};

// A query budget cannot admit the requested operation.
class BudgetError : public AuditError {
public:
    using AuditError::AuditError;
};

// Invalid configuration (file, field, or programmatic spec).
class ConfigError : public AuditError {
public:
    using AuditError::AuditError;
};

}  // namespace audit
