#pragma once

#include "mcjudge/llm_client.hpp"

#include <chrono>
#include <string>
#include <string_view>

namespace mcjudge {

struct HttpBackendConfig {
    /// Base URL such as "http://localhost:8000/v1" or a full ".../chat/completions" URL.
    /// A bare "scheme://host[:port]" posts to "/v1/chat/completions".
    std::string endpoint;
    std::string api_key;  ///< sent as a Bearer token when non-empty
    std::chrono::seconds timeout{60};
};

/// OpenAI-compatible chat-completions transport.
class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(HttpBackendConfig config);

    std::string send(const ChatRequest& request) override;

    const std::string& base_url() const { return base_url_; }
    const std::string& path() const { return path_; }

private:
    HttpBackendConfig config_;
    std::string base_url_;
    std::string path_;
};

/// `{"model", "messages":[{"role":"system",...},{"role":"user",...}], "temperature", "max_tokens"}`
std::string build_chat_payload(const ChatRequest& request);

/// Content of the first choice's message. Throws DecodeError otherwise.
std::string parse_chat_response(std::string_view body);

}  // namespace mcjudge
