#pragma once

#include <stdexcept>
#include <string>

namespace envforge {

// Base class for all pipeline errors. Subclasses exist so the CLI can map
// failure categories to exit codes and so tests can assert on the cause.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Transport failure after retries, malformed backend response, etc.
class GatewayError : public Error {
public:
    using Error::Error;
};

// Replay mode and the archive has no record for the request. Never falls
// through to a live call.
class ReplayMissError : public GatewayError {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class TemplateError : public Error {
public:
    using Error::Error;
};

class SandboxError : public Error {
public:
    using Error::Error;
};

// Operation attempted in an illegal state (exec on a stopped handle,
// diff without a baseline, ...).
class StateError : public Error {
public:
    using Error::Error;
};

class StubError : public Error {
public:
    using Error::Error;
};

class StorageError : public Error {
public:
    using Error::Error;
};

class StageError : public Error {
public:
    StageError(std::string stage, const std::string& reason)
        : Error(stage + ": " + reason), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace envforge
