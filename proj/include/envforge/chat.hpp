#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace envforge {

enum class Role { system, user, assistant, tool };

std::string role_name(Role r);
Role role_from_name(const std::string& name);

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct CompletionRequest {
    std::string model_id;
    std::vector<ChatMessage> messages;
    int max_output_tokens = 4096;
    double temperature = 0.0;
    std::vector<std::string> stop_sequences;
};

enum class FinishReason { stop, length, error };

std::string finish_reason_name(FinishReason r);
FinishReason finish_reason_from_name(const std::string& name);

struct CompletionResponse {
    std::string content;
    FinishReason finish_reason = FinishReason::stop;
    long prompt_tokens = 0;
    long output_tokens = 0;

    bool operator==(const CompletionResponse&) const = default;
};

nlohmann::json to_json(const ChatMessage& m);
nlohmann::json to_json(const CompletionRequest& r);
nlohmann::json to_json(const CompletionResponse& r);
ChatMessage message_from_json(const nlohmann::json& j);
CompletionRequest request_from_json(const nlohmann::json& j);
CompletionResponse response_from_json(const nlohmann::json& j);

// Canonical serialization used for transcript keys: object keys sorted,
// message content normalized to LF with trailing whitespace stripped.
// Stable across platforms so identical requests always map to the same key.
std::string canonical_request_form(const CompletionRequest& r);

// SHA-256 hex digest of the canonical form.
std::string transcript_key(const CompletionRequest& r);

}  // namespace envforge
