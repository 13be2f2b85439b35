#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "envforge/chat.hpp"

namespace envforge {

// A chat-completion producer. Implementations: HTTP endpoint, scripted
// fixture, test stubs.
class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
    virtual std::string name() const = 0;
};

struct HttpBackendConfig {
    std::string base_url;                    // e.g. "http://localhost:8080"
    std::string path = "/v1/chat/completions";
    std::string api_key;                     // sent as Bearer token when non-empty
    int connect_timeout_s = 10;
    int read_timeout_s = 300;
};

// Chat-completions wire protocol client compatible with common model-serving
// endpoints. Transport and HTTP-status failures surface as GatewayError with
// a retryable flag consumed by the gateway's retry loop.
class HttpBackend : public CompletionBackend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    CompletionResponse complete(const CompletionRequest& request) override;
    std::string name() const override { return "http:" + config_.base_url; }

    // Wire mapping, exposed for tests.
    static nlohmann::json wire_request(const CompletionRequest& request);
    static CompletionResponse parse_wire_response(const nlohmann::json& body);

private:
    HttpBackendConfig config_;
};

// Thrown by backends for failures the retry policy may retry
// (transport errors, HTTP 5xx, HTTP 429).
class RetryableGatewayError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

// One directory of JSON records, one file per transcript key:
//   <dir>/<key>.json  =  {"version":1, "key":..., "request":..., "response":...}
// Writes are serialized; reads after load() are lock-free.
class ReplayArchive {
public:
    explicit ReplayArchive(std::filesystem::path dir);

    void load();
    std::optional<CompletionResponse> lookup(const std::string& key) const;
    void store(const std::string& key, const CompletionRequest& request,
               const CompletionResponse& response);
    size_t size() const { return records_.size(); }
    const std::filesystem::path& dir() const { return dir_; }

    static constexpr int kSchemaVersion = 1;

private:
    std::filesystem::path dir_;
    std::map<std::string, CompletionResponse> records_;
    mutable std::mutex write_mutex_;
};

enum class GatewayMode { live, record, replay };

GatewayMode gateway_mode_from_name(const std::string& name);

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};
};

// Uniform access to completion backends with retry, replay and token
// accounting. Safe for concurrent use from multiple pipeline workers.
class LlmGateway {
public:
    // replay mode: archive required, backend ignored (never contacted).
    // record mode: backend required; every response is persisted.
    // live mode: backend required.
    LlmGateway(GatewayMode mode, std::shared_ptr<CompletionBackend> backend,
               std::shared_ptr<ReplayArchive> archive,
               RetryPolicy retry = RetryPolicy{});

    CompletionResponse complete(const CompletionRequest& request);

    GatewayMode mode() const { return mode_; }

    // Test hook: replaces the inter-attempt sleep.
    void set_sleep_fn(std::function<void(std::chrono::milliseconds)> fn);

private:
    GatewayMode mode_;
    std::shared_ptr<CompletionBackend> backend_;
    std::shared_ptr<ReplayArchive> archive_;
    RetryPolicy retry_;
    std::function<void(std::chrono::milliseconds)> sleep_fn_;
};

}  // namespace envforge
