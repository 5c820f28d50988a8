#pragma once

#include <stdexcept>
#include <string>

namespace medcomm {

/// Broad failure class. The CLI maps each kind onto its exit code.
enum class ErrorKind {
    Config,    // invalid invocation or configuration
    Data,      // malformed, missing, or inconsistent input data
    Provider,  // embedding/classifier backend failed or broke protocol
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct ProviderError : Error {
    explicit ProviderError(const std::string& what) : Error(ErrorKind::Provider, what) {}
};

/// A provider answered, but with a payload that violates the wire contract.
struct ProtocolError : ProviderError {
    explicit ProtocolError(const std::string& what) : ProviderError(what) {}
};

/// Readability score requested for a text with no words or no sentences.
struct UndefinedScoreError : DataError {
    explicit UndefinedScoreError(const std::string& what) : DataError(what) {}
};

}  // namespace medcomm
