#include "envforge/chat.hpp"

#include "envforge/errors.hpp"
#include "envforge/util.hpp"

namespace envforge {

using nlohmann::json;

std::string role_name(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
        case Role::tool: return "tool";
    }
    return "user";
}

Role role_from_name(const std::string& name) {
    if (name == "system") return Role::system;
    if (name == "user") return Role::user;
    if (name == "assistant") return Role::assistant;
    if (name == "tool") return Role::tool;
    throw ParseError("unknown chat role: " + name);
}

std::string finish_reason_name(FinishReason r) {
    switch (r) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        case FinishReason::error: return "error";
    }
    return "error";
}

FinishReason finish_reason_from_name(const std::string& name) {
    if (name == "stop") return FinishReason::stop;
    if (name == "length") return FinishReason::length;
    if (name == "error") return FinishReason::error;
    throw ParseError("unknown finish reason: " + name);
}

json to_json(const ChatMessage& m) {
    return json{{"role", role_name(m.role)}, {"content", m.content}};
}

json to_json(const CompletionRequest& r) {
    json msgs = json::array();
    for (const auto& m : r.messages) msgs.push_back(to_json(m));
    return json{{"model", r.model_id},
                {"messages", msgs},
                {"max_output_tokens", r.max_output_tokens},
                {"temperature", r.temperature},
                {"stop_sequences", r.stop_sequences}};
}

json to_json(const CompletionResponse& r) {
    return json{{"content", r.content},
                {"finish_reason", finish_reason_name(r.finish_reason)},
                {"prompt_tokens", r.prompt_tokens},
                {"output_tokens", r.output_tokens}};
}

ChatMessage message_from_json(const json& j) {
    return ChatMessage{role_from_name(j.at("role").get<std::string>()),
                       j.at("content").get<std::string>()};
}

CompletionRequest request_from_json(const json& j) {
    CompletionRequest r;
    r.model_id = j.at("model").get<std::string>();
    for (const auto& m : j.at("messages")) r.messages.push_back(message_from_json(m));
    r.max_output_tokens = j.value("max_output_tokens", 4096);
    r.temperature = j.value("temperature", 0.0);
    r.stop_sequences = j.value("stop_sequences", std::vector<std::string>{});
    return r;
}

CompletionResponse response_from_json(const json& j) {
    CompletionResponse r;
    r.content = j.at("content").get<std::string>();
    r.finish_reason = finish_reason_from_name(j.at("finish_reason").get<std::string>());
    r.prompt_tokens = j.value("prompt_tokens", 0L);
    r.output_tokens = j.value("output_tokens", 0L);
    return r;
}

std::string canonical_request_form(const CompletionRequest& r) {
    // nlohmann::json objects keep keys sorted, which gives the sorted field
    // order the key contract requires.
    json msgs = json::array();
    for (const auto& m : r.messages) {
        std::string content =
            util::strip_trailing_whitespace(util::normalize_newlines(m.content));
        msgs.push_back(json{{"content", content}, {"role", role_name(m.role)}});
    }
    json canon{{"max_output_tokens", r.max_output_tokens},
               {"messages", msgs},
               {"model", r.model_id},
               {"stop_sequences", r.stop_sequences},
               {"temperature", r.temperature}};
    return canon.dump();
}

std::string transcript_key(const CompletionRequest& r) {
    return util::sha256_hex(canonical_request_form(r));
}

}  // namespace envforge
