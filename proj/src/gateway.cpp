#include "envforge/gateway.hpp"

#include <httplib.h>

#include <thread>

#include "envforge/errors.hpp"
#include "envforge/tokenizer.hpp"
#include "envforge/util.hpp"

namespace envforge {

using nlohmann::json;

// ---------------------------------------------------------------------------
// HttpBackend
// ---------------------------------------------------------------------------

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {}

json HttpBackend::wire_request(const CompletionRequest& request) {
    json msgs = json::array();
    for (const auto& m : request.messages)
        msgs.push_back({{"role", role_name(m.role)}, {"content", m.content}});
    json body{{"model", request.model_id},
              {"messages", msgs},
              {"temperature", request.temperature},
              {"max_tokens", request.max_output_tokens}};
    if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;
    return body;
}

CompletionResponse HttpBackend::parse_wire_response(const json& body) {
    CompletionResponse out;
    const auto& choices = body.at("choices");
    if (!choices.is_array() || choices.empty())
        throw GatewayError("backend response has no choices");
    const auto& choice = choices.at(0);
    out.content = choice.at("message").at("content").get<std::string>();
    std::string reason = choice.value("finish_reason", "stop");
    out.finish_reason =
        reason == "length" ? FinishReason::length : FinishReason::stop;
    if (body.contains("usage")) {
        out.prompt_tokens = body["usage"].value("prompt_tokens", 0L);
        out.output_tokens = body["usage"].value("completion_tokens", 0L);
    } else {
        out.prompt_tokens = -1;  // gateway fills in via fallback tokenizer
        out.output_tokens = -1;
    }
    return out;
}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.connect_timeout_s, 0);
    client.set_read_timeout(config_.read_timeout_s, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto res = client.Post(config_.path, headers,
                           wire_request(request).dump(), "application/json");
    if (!res)
        throw RetryableGatewayError("transport failure contacting " +
                                    config_.base_url + ": " +
                                    httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500)
        throw RetryableGatewayError("backend returned HTTP " +
                                    std::to_string(res->status));
    if (res->status != 200)
        throw GatewayError("backend returned HTTP " + std::to_string(res->status) +
                           ": " + res->body);
    try {
        return parse_wire_response(json::parse(res->body));
    } catch (const json::exception& e) {
        throw GatewayError(std::string("malformed backend response: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// ReplayArchive
// ---------------------------------------------------------------------------

ReplayArchive::ReplayArchive(std::filesystem::path dir) : dir_(std::move(dir)) {}

void ReplayArchive::load() {
    namespace fs = std::filesystem;
    records_.clear();
    if (!fs::exists(dir_)) return;
    for (const auto& entry : fs::directory_iterator(dir_)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json")
            continue;
        json record = json::parse(util::read_text_file(entry.path()));
        records_[record.at("key").get<std::string>()] =
            response_from_json(record.at("response"));
    }
}

std::optional<CompletionResponse> ReplayArchive::lookup(const std::string& key) const {
    auto it = records_.find(key);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

void ReplayArchive::store(const std::string& key, const CompletionRequest& request,
                          const CompletionResponse& response) {
    std::lock_guard lock(write_mutex_);
    json record{{"version", kSchemaVersion},
                {"key", key},
                {"request", to_json(request)},
                {"response", to_json(response)}};
    std::filesystem::create_directories(dir_);
    util::write_text_file(dir_ / (key + ".json"), record.dump(2) + "\n");
    records_[key] = response;
}

GatewayMode gateway_mode_from_name(const std::string& name) {
    if (name == "live") return GatewayMode::live;
    if (name == "record") return GatewayMode::record;
    if (name == "replay") return GatewayMode::replay;
    throw ConfigError("unknown gateway mode: " + name);
}

// ---------------------------------------------------------------------------
// LlmGateway
// ---------------------------------------------------------------------------

LlmGateway::LlmGateway(GatewayMode mode, std::shared_ptr<CompletionBackend> backend,
                       std::shared_ptr<ReplayArchive> archive, RetryPolicy retry)
    : mode_(mode),
      backend_(std::move(backend)),
      archive_(std::move(archive)),
      retry_(retry),
      sleep_fn_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
    if (mode_ == GatewayMode::replay && !archive_)
        throw ConfigError("replay mode requires a replay archive");
    if (mode_ != GatewayMode::replay && !backend_)
        throw ConfigError("live/record mode requires a backend");
    if (mode_ == GatewayMode::record && !archive_)
        throw ConfigError("record mode requires an archive to write to");
}

void LlmGateway::set_sleep_fn(std::function<void(std::chrono::milliseconds)> fn) {
    sleep_fn_ = std::move(fn);
}

CompletionResponse LlmGateway::complete(const CompletionRequest& request) {
    const std::string key = transcript_key(request);

    if (mode_ == GatewayMode::replay) {
        auto hit = archive_->lookup(key);
        if (!hit)
            throw ReplayMissError("replay miss for key " + key + " (model " +
                                  request.model_id + ", " +
                                  std::to_string(request.messages.size()) +
                                  " messages)");
        return *hit;
    }

    CompletionResponse response;
    auto backoff = retry_.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            response = backend_->complete(request);
            break;
        } catch (const RetryableGatewayError& e) {
            if (attempt >= retry_.attempts)
                throw GatewayError(std::string("gateway failure after ") +
                                   std::to_string(attempt) + " attempts: " + e.what());
            sleep_fn_(backoff);
            backoff *= 2;
        }
    }

    // Backends that do not report usage get the pinned fallback tokenizer.
    if (response.prompt_tokens < 0) {
        long total = 0;
        for (const auto& m : request.messages) total += count_tokens(m.content);
        response.prompt_tokens = total;
    }
    if (response.output_tokens < 0)
        response.output_tokens = count_tokens(response.content);

    if (mode_ == GatewayMode::record) archive_->store(key, request, response);
    return response;
}

}  // namespace envforge
